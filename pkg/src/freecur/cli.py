"""Command-line front end.

Identical invocations produce byte-identical outputs.  Exit codes:
0 success, 1 failed experiment verdict, 2 usage or format error,
3 domain error, 4 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import experiments as exp
from . import io as fio
from .automorphisms import (Automorphism, apply, cancellation_constants,
                            compose, invert, outer_ball, parse_automorphism,
                            format_automorphism)
from .currents import (RationalCurrent, counting_table, monte_carlo_stretch,
                       realize_table, restrict, stretching_factor,
                       support_at_depth, uniform_table, validate)
from .errors import (EmptySample, FormatError, FreecurError, NotRealizable,
                     NotTransverse, ResourceLimit, SearchBoundExceeded)
from .stallings import (conjugacy_intersection, fold, intersect, is_malnormal,
                        member, readable_in_core)
from .trees import (MarkedMetricGraph, bass_serre_length, bbt_bounds,
                    intersection_number, l2_contains, supp_subset_l2,
                    translation_length)
from .words import (Basis, cyclic_reduce, free_reduce, occurrences,
                    parse_cyclic, parse_word, sample_reduced_word)


def _load(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text()
    return value


def _basis(args) -> Basis:
    return Basis(args.basis)


def _tree(args, attr="tree"):
    value = getattr(args, attr)
    if value == "unitrose":
        return MarkedMetricGraph.rose(_basis(args), [Fraction(1)] * args.basis)
    return fio.parse_tree(_basis(args), Path(value).read_text())


def _current(args, attr="current"):
    return fio.parse_current(_basis(args), _load(getattr(args, attr)))


def _aut(args, attr="map") -> Automorphism:
    return parse_automorphism(_basis(args), _load(getattr(args, attr)))


def _gens(args, attr="gens"):
    basis = _basis(args)
    return [parse_word(basis, w.strip())
            for w in getattr(args, attr).split(",") if w.strip()]


def _bool(b: bool) -> str:
    return "true" if b else "false"


# ---------------------------------------------------------------------------
# handlers: each returns (text, exit_code)
# ---------------------------------------------------------------------------


def cmd_word_reduce(args):
    return str(free_reduce(_basis(args), args.word)) + "\n", 0


def cmd_word_cyclic(args):
    c, u = cyclic_reduce(parse_word(_basis(args), args.word))
    return f"{c if c is not None else '1'} {u}\n", 0


def cmd_word_occ(args):
    v = parse_word(_basis(args), args.pattern)
    w = parse_cyclic(_basis(args), args.word)
    return f"{occurrences(v, w)}\n", 0


def cmd_word_sample(args):
    return str(sample_reduced_word(_basis(args), args.length, args.seed)) + "\n", 0


def cmd_aut_apply(args):
    phi = _aut(args)
    if args.cyclic:
        return str(apply(phi, parse_cyclic(_basis(args), args.word))) + "\n", 0
    return str(apply(phi, parse_word(_basis(args), args.word))) + "\n", 0


def cmd_aut_compose(args):
    phi = parse_automorphism(_basis(args), _load(args.first))
    psi = parse_automorphism(_basis(args), _load(args.second))
    return format_automorphism(compose(phi, psi)) + "\n", 0


def cmd_aut_invert(args):
    return format_automorphism(invert(_aut(args))) + "\n", 0


def cmd_aut_ball(args):
    ball = outer_ball(_basis(args), args.radius)
    lines = [f"classes {len(ball)}"]
    lines += [format_automorphism(rep) for _, rep in ball]
    return "\n".join(lines) + "\n", 0


def cmd_aut_constants(args):
    C, bcc, n = cancellation_constants(_aut(args))
    return f"lipschitz {C}\nbcc {bcc}\ndouble_bcc {n}\n", 0


def cmd_st_fold(args):
    return fio.format_graph(fold(_gens(args))), 0


def cmd_st_member(args):
    g = fold(_gens(args))
    return _bool(member(g, parse_word(_basis(args), args.word))) + "\n", 0


def cmd_st_readable(args):
    g = fold(_gens(args))
    return _bool(readable_in_core(g, parse_word(_basis(args), args.word))) + "\n", 0


def cmd_st_intersect(args):
    g1 = fold(_gens(args, "gens1"))
    g2 = fold(_gens(args, "gens2"))
    comps = intersect(g1, g2)
    return "---\n".join(fio.format_graph(c) for c in comps), 0


def cmd_st_conjint(args):
    g = fold(_gens(args))
    reps, d = conjugacy_intersection(g, parse_cyclic(_basis(args), args.word))
    lines = [f"d {d}", f"classes {len(reps)}"] + [str(r) for r in reps]
    return "\n".join(lines) + "\n", 0


def cmd_st_malnormal(args):
    return _bool(is_malnormal(fold(_gens(args)))) + "\n", 0


def cmd_cur_counting(args):
    t = counting_table(parse_cyclic(_basis(args), args.word), args.depth)
    return fio.format_table(t), 0


def cmd_cur_uniform(args):
    return fio.format_table(uniform_table(_basis(args), args.depth)), 0


def cmd_cur_validate(args):
    report = validate(fio.parse_table(_load(args.table)))
    return report.describe() + "\n", 0


def cmd_cur_support(args):
    words = support_at_depth(fio.parse_table(_load(args.table)))
    ordered = sorted(words, key=lambda w: (len(w.letters), w.letters))
    return "\n".join(str(w) for w in ordered) + "\n", 0


def cmd_cur_restrict(args):
    mu = _current(args)
    graph = fold(_gens(args))
    nu, chart = restrict(mu, graph)
    lines = [f"subgroup rank {chart.basis.rank}"]
    for i, w in enumerate(chart.embedding):
        lines.append(f"{chart.basis.letter_name(2 * i)} -> {w}")
    lines.append("restricted " + fio.format_current(nu))
    lines.append("ambient " + " + ".join(
        f"{fio.format_fraction(lam)}*{chart.to_ambient(g)}" for lam, g in nu.terms))
    return "\n".join(lines) + "\n", 0


def cmd_cur_realize(args):
    return str(realize_table(fio.parse_table(_load(args.table)))) + "\n", 0


def cmd_cur_stretch(args):
    phi = _aut(args)
    lines = [fio.format_fraction(stretching_factor(phi))]
    if args.mc_steps:
        mc = monte_carlo_stretch(phi, args.mc_steps, args.seed)
        lines.append(f"{mc:.6f} approx")
    return "\n".join(lines) + "\n", 0


def cmd_tree_length(args):
    t = _tree(args)
    g = parse_cyclic(_basis(args), args.word)
    if isinstance(t, MarkedMetricGraph):
        return fio.format_fraction(translation_length(t, g)) + "\n", 0
    return f"{bass_serre_length(t, g)}\n", 0


def cmd_tree_bslength(args):
    s = fio.parse_splitting(_basis(args), Path(args.splitting).read_text())
    return f"{bass_serre_length(s, parse_cyclic(_basis(args), args.word))}\n", 0


def cmd_tree_pair(args):
    t = _tree(args)
    if args.table:
        mu = fio.parse_table(_load(args.table))
    else:
        mu = _current(args)
    return fio.format_fraction(intersection_number(t, mu)) + "\n", 0


def cmd_tree_l2(args):
    t = _tree(args)
    return _bool(l2_contains(t, parse_word(_basis(args), args.word))) + "\n", 0


def cmd_tree_suppl2(args):
    t = _tree(args)
    return _bool(supp_subset_l2(t, _current(args))) + "\n", 0


def cmd_tree_bbt(args):
    t = _tree(args)
    lo, hi = bbt_bounds(t, args.sample_len, args.seed)
    return (f"lower {fio.format_fraction(lo)}\n"
            f"upper {fio.format_fraction(hi)}\n"), 0


def _emit_report(report, args):
    text = report.text()
    if args.out:
        Path(args.out + ".csv").write_text(report.csv_text())
        Path(args.out + ".txt").write_text(text)
    return text, (0 if report.passed else 1)


def cmd_exp_main(args):
    report = exp.main_theorem_check(_tree(args), _current(args))
    return _emit_report(report, args)


def cmd_exp_spectrum(args):
    mu = args.current if args.current == "uniform" else _current(args)
    thresholds = [Fraction(c) for c in args.threshold]
    report = exp.length_spectrum(_tree(args), mu, args.radius, thresholds)
    return _emit_report(report, args)


def cmd_exp_ns(args):
    phi = _aut(args)
    if args.start_tree:
        start = fio.parse_tree(_basis(args), Path(args.start_tree).read_text())
    else:
        start = fio.parse_current(_basis(args), _load(args.start_current))
    report = exp.north_south(phi, start, args.steps, args.depth, args.burn_in)
    return _emit_report(report, args)


def cmd_exp_filling(args):
    report = exp.filling_search(parse_cyclic(_basis(args), args.word), args.radius)
    text, rc = _emit_report(report, args)
    if report.payload["certificate"] is not None:
        text += "certificate:\n" + fio.format_splitting(report.payload["certificate"])
    return text, rc


def cmd_exp_bte(args):
    basis = _basis(args)
    trees = []
    if args.trees:
        for p in args.trees.split(","):
            trees.append(fio.parse_tree(basis, Path(p.strip()).read_text()))
    if args.sample_roses:
        trees.extend(exp.sample_marked_roses(basis, args.sample_roses, args.seed))
    if args.include_seeds:
        trees.extend(s for _, s in exp.seed_splittings(basis))
    report = exp.bte_bounds(parse_cyclic(basis, args.g),
                            parse_cyclic(basis, args.h), trees)
    return _emit_report(report, args)


def cmd_exp_bilip(args):
    basis = _basis(args)
    s1 = fio.parse_splitting(basis, Path(args.s1).read_text())
    s2 = fio.parse_splitting(basis, Path(args.s2).read_text())
    t0 = (MarkedMetricGraph.rose(basis, [Fraction(1)] * basis.rank)
          if args.t0 == "unitrose"
          else fio.parse_marked_graph(basis, Path(args.t0).read_text()))
    report = exp.bilipschitz_scan(s1, s2, t0, args.maxlen)
    return _emit_report(report, args)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p, *, basis=True, seed=False, depth=False, radius=False,
                maxlen=False, out=False):
    if basis:
        p.add_argument("--basis", type=int, default=2, metavar="k",
                       help="free group rank (default 2)")
    if seed:
        p.add_argument("--seed", type=int, default=0, metavar="n")
    if depth:
        p.add_argument("--depth", type=int, default=3, metavar="L")
    if radius:
        p.add_argument("--radius", type=int, default=0, metavar="R")
    if maxlen:
        p.add_argument("--maxlen", type=int, default=10, metavar="n")
    if out:
        p.add_argument("--out", default=None, metavar="path",
                       help="write report to path.csv and path.txt")
        p.add_argument("--config", default=None, metavar="file",
                       help="JSON file supplying these options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freecur",
        description="Exact geodesic currents, Stallings graphs and "
                    "simplicial trees over free groups.")
    top = parser.add_subparsers(dest="group", required=True)

    word = top.add_parser("word").add_subparsers(dest="cmd", required=True)
    p = word.add_parser("reduce")
    p.add_argument("word")
    _add_common(p)
    p.set_defaults(func=cmd_word_reduce)
    p = word.add_parser("cyclic")
    p.add_argument("word")
    _add_common(p)
    p.set_defaults(func=cmd_word_cyclic)
    p = word.add_parser("occ")
    p.add_argument("pattern")
    p.add_argument("word")
    _add_common(p)
    p.set_defaults(func=cmd_word_occ)
    p = word.add_parser("sample")
    p.add_argument("length", type=int)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_word_sample)

    aut = top.add_parser("aut").add_subparsers(dest="cmd", required=True)
    p = aut.add_parser("apply")
    p.add_argument("--map", required=True, help="inline 'a=ab; b=b' or @file")
    p.add_argument("--word", required=True)
    p.add_argument("--cyclic", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_aut_apply)
    p = aut.add_parser("compose")
    p.add_argument("first")
    p.add_argument("second")
    _add_common(p)
    p.set_defaults(func=cmd_aut_compose)
    p = aut.add_parser("invert")
    p.add_argument("--map", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_aut_invert)
    p = aut.add_parser("ball")
    _add_common(p, radius=True)
    p.set_defaults(func=cmd_aut_ball)
    p = aut.add_parser("constants")
    p.add_argument("--map", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_aut_constants)

    st = top.add_parser("stallings").add_subparsers(dest="cmd", required=True)
    p = st.add_parser("fold")
    p.add_argument("--gens", required=True, help="comma-separated words")
    _add_common(p)
    p.set_defaults(func=cmd_st_fold)
    p = st.add_parser("member")
    p.add_argument("--gens", required=True)
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_st_member)
    p = st.add_parser("readable")
    p.add_argument("--gens", required=True)
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_st_readable)
    p = st.add_parser("intersect")
    p.add_argument("--gens1", required=True)
    p.add_argument("--gens2", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_st_intersect)
    p = st.add_parser("conjint")
    p.add_argument("--gens", required=True)
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_st_conjint)
    p = st.add_parser("malnormal")
    p.add_argument("--gens", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_st_malnormal)

    cur = top.add_parser("current").add_subparsers(dest="cmd", required=True)
    p = cur.add_parser("counting")
    p.add_argument("--word", required=True)
    _add_common(p, depth=True)
    p.set_defaults(func=cmd_cur_counting)
    p = cur.add_parser("uniform")
    _add_common(p, depth=True)
    p.set_defaults(func=cmd_cur_uniform)
    p = cur.add_parser("validate")
    p.add_argument("--table", required=True, help="inline or @file")
    _add_common(p)
    p.set_defaults(func=cmd_cur_validate)
    p = cur.add_parser("support")
    p.add_argument("--table", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_cur_support)
    p = cur.add_parser("restrict")
    p.add_argument("--current", required=True)
    p.add_argument("--gens", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_cur_restrict)
    p = cur.add_parser("realize")
    p.add_argument("--table", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_cur_realize)
    p = cur.add_parser("stretch")
    p.add_argument("--map", required=True)
    p.add_argument("--mc-steps", type=int, default=0)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_cur_stretch)

    tr = top.add_parser("tree").add_subparsers(dest="cmd", required=True)
    p = tr.add_parser("length")
    p.add_argument("--tree", required=True, help="file path or 'unitrose'")
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tree_length)
    p = tr.add_parser("bslength")
    p.add_argument("--splitting", required=True)
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tree_bslength)
    p = tr.add_parser("pair")
    p.add_argument("--tree", required=True)
    p.add_argument("--current", default=None)
    p.add_argument("--table", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_tree_pair)
    p = tr.add_parser("l2")
    p.add_argument("--tree", required=True)
    p.add_argument("--word", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tree_l2)
    p = tr.add_parser("suppl2")
    p.add_argument("--tree", required=True)
    p.add_argument("--current", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tree_suppl2)
    p = tr.add_parser("bbt")
    p.add_argument("--tree", required=True)
    p.add_argument("--sample-len", type=int, default=8)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_tree_bbt)

    ex = top.add_parser("exp").add_subparsers(dest="cmd", required=True)
    p = ex.add_parser("main")
    p.add_argument("--tree", required=True)
    p.add_argument("--current", required=True)
    _add_common(p, out=True)
    p.set_defaults(func=cmd_exp_main)
    p = ex.add_parser("spectrum")
    p.add_argument("--tree", default="unitrose")
    p.add_argument("--current", default="uniform")
    p.add_argument("--threshold", action="append", default=[])
    _add_common(p, radius=True, out=True)
    p.set_defaults(func=cmd_exp_spectrum)
    p = ex.add_parser("ns")
    p.add_argument("--map", required=True)
    p.add_argument("--start-current", default=None)
    p.add_argument("--start-tree", default=None)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--burn-in", type=int, default=10)
    _add_common(p, depth=True, out=True)
    p.set_defaults(func=cmd_exp_ns)
    p = ex.add_parser("filling")
    p.add_argument("--word", required=True)
    _add_common(p, radius=True, out=True)
    p.set_defaults(func=cmd_exp_filling)
    p = ex.add_parser("bte")
    p.add_argument("--g", required=True)
    p.add_argument("--h", required=True)
    p.add_argument("--trees", default="")
    p.add_argument("--sample-roses", type=int, default=0)
    p.add_argument("--include-seeds", action="store_true")
    _add_common(p, seed=True, out=True)
    p.set_defaults(func=cmd_exp_bte)
    p = ex.add_parser("bilip")
    p.add_argument("--s1", required=True)
    p.add_argument("--s2", required=True)
    p.add_argument("--t0", default="unitrose")
    _add_common(p, maxlen=True, out=True)
    p.set_defaults(func=cmd_exp_bilip)

    return parser


def _apply_config(args):
    config = getattr(args, "config", None)
    if not config:
        return args
    data = json.loads(Path(config).read_text())
    for key, value in data.items():
        setattr(args, key.replace("-", "_"), value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        text, rc = args.func(args)
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return 2
    except (ResourceLimit, SearchBoundExceeded) as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return 4
    except NotRealizable as e:
        print(f"not realizable: {e}; components: {e.components}", file=sys.stderr)
        return 3
    except NotTransverse as e:
        print(f"not transverse: {e}", file=sys.stderr)
        return 3
    except EmptySample as e:
        print(f"empty sample: {e}", file=sys.stderr)
        return 3
    except FreecurError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return rc


if __name__ == "__main__":
    sys.exit(main())
