"""Theorem-verification and dynamics harness.

Every experiment returns a deterministic ExperimentReport: per-item
records, summary statistics and named pass/fail verdicts.  Exact values
stay Fractions; the CSV form prints them as p/q.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .automorphisms import (Automorphism, apply, compose, invert, outer_ball,
                            whitehead_generators)
from .currents import (RationalCurrent, counting_table, stretching_factor,
                       uniform_table)
from .errors import EmptySample, NotTransverse, UnsupportedChart
from .stallings import product_has_cycle
from .trees import (MarkedMetricGraph, Splitting, bass_serre_length,
                    free_product_splitting, hnn_splitting, intersection_number,
                    supp_subset_l2, translation_length)
from .words import Basis, CyclicWord, ReducedWord


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    inputs: tuple           # sorted (key, value) string pairs
    records: tuple          # tuple of dicts with identical key sets
    summary: tuple          # sorted (key, value) string pairs
    verdicts: tuple         # ((name, bool), ...)
    seed: int | None = None
    payload: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.verdicts)

    def csv_text(self) -> str:
        if not self.records:
            return ""
        cols = sorted({k for rec in self.records for k in rec})
        lines = [",".join(cols)]
        for rec in self.records:
            lines.append(",".join(_cell(rec.get(c, "")) for c in cols))
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        lines = [f"experiment: {self.name}"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        for k, v in self.inputs:
            lines.append(f"input {k}: {v}")
        for k, v in self.summary:
            lines.append(f"{k}: {v}")
        for name, ok in self.verdicts:
            lines.append(f"verdict {name}: {'PASS' if ok else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    s = _fmt(v)
    return f'"{s}"' if "," in s else s


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _report(name, inputs, records, summary, verdicts, seed=None, payload=None):
    return ExperimentReport(
        name,
        tuple(sorted((k, _fmt(v)) for k, v in inputs.items())),
        tuple(records),
        tuple(sorted((k, _fmt(v)) for k, v in summary.items())),
        tuple(verdicts),
        seed,
        payload or {},
    )


# ---------------------------------------------------------------------------
# seed splittings and tree samples
# ---------------------------------------------------------------------------


def seed_splittings(basis: Basis) -> list[tuple[str, Splitting]]:
    """One-edge very small splittings visible without search: the free
    products over basis bipartitions and the single-letter HNN forms."""
    k = basis.rank
    out: list[tuple[str, Splitting]] = []
    for mask in range(1, 2 ** k - 1):
        left = [g for g in range(k) if mask & (1 << g)]
        if 0 not in left:
            continue  # each unordered bipartition once
        right = [g for g in range(k) if g not in left]
        name = "freeprod_%s_%s" % ("".join(basis.letter_name(2 * g) for g in left),
                                   "".join(basis.letter_name(2 * g) for g in right))
        out.append((name, free_product_splitting(basis, left)))
    for g in range(k):
        out.append((f"hnn_{basis.letter_name(2 * g)}", hnn_splitting(basis, g)))
    return out


def sample_marked_roses(basis: Basis, count: int, seed: int,
                        max_moves: int = 3) -> list[MarkedMetricGraph]:
    """Roses with random rational lengths and short Whitehead markings."""
    rng = random.Random(seed)
    gens = whitehead_generators(basis)
    out = []
    for _ in range(count):
        lengths = [Fraction(rng.randint(1, 6), rng.randint(1, 6))
                   for _ in range(basis.rank)]
        phi = Automorphism.identity(basis)
        for _ in range(rng.randint(0, max_moves)):
            phi = compose(rng.choice(gens), phi)
        out.append(MarkedMetricGraph.rose(basis, lengths, phi))
    return out


# ---------------------------------------------------------------------------
# main theorem
# ---------------------------------------------------------------------------


def main_theorem_check(tree, mu: RationalCurrent) -> ExperimentReport:
    """<T, mu> = 0 iff supp(mu) in L^2(T); equivalent=false is build-failing."""
    pairing = intersection_number(tree, mu)
    inclusion = supp_subset_l2(tree, mu)
    equivalent = (pairing == 0) == inclusion
    records = [{"pairing": pairing, "inclusion": inclusion,
                "equivalent": equivalent}]
    return _report(
        "main_theorem_check",
        {"tree": _tree_name(tree), "current": _current_name(mu)},
        records,
        {"pairing": pairing, "inclusion": inclusion, "equivalent": equivalent},
        [("zero_pairing_iff_support_in_dual_lamination", equivalent)],
    )


def main_theorem_sweep(basis: Basis, max_len: int) -> ExperimentReport:
    """Exhaustive check of the equivalence over every seed splitting and
    every conjugacy class of cyclically reduced words up to max_len."""
    seeds = seed_splittings(basis)
    records = []
    total_bad = 0
    for name, split in seeds:
        spack = split.kernel_pack()
        tables = []
        for _, graph in split.vertex_group_graphs():
            table, _ = graph.core_transition_table()
            tables.append(table)
        coffs = np.zeros(len(tables) + 1, np.int32)
        for i, t in enumerate(tables):
            coffs[i + 1] = coffs[i] + t.shape[0]
        ctrans = (np.concatenate(tables, axis=0) if tables
                  else np.zeros((0, basis.num_letters), np.int16))
        checked = 0
        elliptic = 0
        bad = 0
        for n in range(1, max_len + 1):
            words = _kernels.necklaces(n, basis.rank)
            b, first_bad, nell = _kernels.sweep_equivalence(words, spack, ctrans, coffs)
            checked += words.shape[0]
            elliptic += nell
            bad += b
        total_bad += bad
        records.append({"splitting": name, "classes": checked,
                        "elliptic": elliptic, "mismatches": bad})
    return _report(
        "main_theorem_sweep",
        {"rank": basis.rank, "max_len": max_len},
        records,
        {"splittings": len(seeds), "total_mismatches": total_bad},
        [("equivalence_holds_everywhere", total_bad == 0)],
    )


# ---------------------------------------------------------------------------
# length spectrum
# ---------------------------------------------------------------------------


def length_spectrum(tree, mu, radius: int,
                    thresholds: Sequence[Fraction] = ()) -> ExperimentReport:
    """Values <T, phi mu> over the outer ball, sorted with multiplicities.

    mu may be a RationalCurrent or the string "uniform"; the uniform case
    requires a unit rose so the value is the generic stretching factor
    scaled by <rose, nu_A> = 1/2.
    """
    basis = tree.basis if isinstance(tree, MarkedMetricGraph) else tree.basis
    uniform = isinstance(mu, str)
    if uniform:
        if not (isinstance(tree, MarkedMetricGraph) and tree.is_unit_rose()):
            raise UnsupportedChart("uniform spectrum needs the unit rose")
    ball = outer_ball(basis, radius)
    values: dict[Fraction, int] = {}
    ident_value = None
    for key, phi in ball:
        if uniform:
            value = stretching_factor(phi) / 2
        else:
            value = sum((lam * _length(tree, apply(phi, g)) for lam, g in mu.terms),
                        Fraction(0))
        values[value] = values.get(value, 0) + 1
        if phi.is_identity():
            ident_value = value
    ordered = sorted(values)
    records = [{"value": v, "multiplicity": values[v]} for v in ordered]
    sublevels = {f"sublevel_{_fmt(Fraction(c))}":
                 sum(m for v, m in values.items() if v <= Fraction(c))
                 for c in thresholds}
    summary = {"classes": len(ball), "distinct_values": len(ordered),
               "min_value": ordered[0], "max_value": ordered[-1],
               "identity_value": ident_value, **sublevels}
    return _report(
        "length_spectrum",
        {"tree": _tree_name(tree),
         "current": "uniform" if uniform else _current_name(mu),
         "radius": radius},
        records, summary,
        [("all_values_positive", ordered[0] > 0)],
        payload={"values": values, "identity_value": ident_value},
    )


def _length(tree, g: CyclicWord) -> Fraction:
    if isinstance(tree, MarkedMetricGraph):
        return translation_length(tree, g)
    return Fraction(bass_serre_length(tree, g))


# ---------------------------------------------------------------------------
# North-South iteration
# ---------------------------------------------------------------------------


def north_south(phi: Automorphism, start, steps: int, depth: int,
                burn_in: int = 10) -> ExperimentReport:
    """Iterate the attracting direction on currents and trees together.

    Current mode iterates mu -> phi mu with depth-L tables renormalized to
    unit depth-1 mass; tree mode iterates the marking by phi^{-1} (the
    tree moves to phi T), keeping volume fixed.  The cross pairing
    <T_t, mu_t> equals <T_0, mu_0> by equivariance, so its normalized form
    is reported as base over (volume times mass).  The iwip/atoroidal
    hypotheses on phi are user assertions recorded in the header.
    """
    basis = phi.basis
    phi_inv = invert(phi)
    if isinstance(start, RationalCurrent):
        mode = "current"
        mu = start
        tree = MarkedMetricGraph.rose(basis, [Fraction(1)] * basis.rank)
    else:
        mode = "tree"
        tree = start.scaled(Fraction(1) / start.volume())
        mu = RationalCurrent.counting(CyclicWord(basis, (0,)))
    base_pairing = intersection_number(tree, mu)
    vol = tree.volume()
    wordlist = [ReducedWord(basis, (2 * i,)) for i in range(basis.rank)]
    wordlist += [ReducedWord(basis, (2 * i, 2 * ((i + 1) % basis.rank)))
                 for i in range(basis.rank)]

    # mass of phi^t mu is cheap on word lengths; the companion side of the
    # cross pairing never needs to be materialized because equivariance
    # gives <phi^t T, phi^t mu> = <T, mu> exactly.
    records = []
    prev_table = None
    prev_vec = None
    prev_mass = None
    prev_volsum = None
    eig_prev = None
    tables = []
    deltas = []
    crosses = []
    estimates = []
    mu_t = mu
    tau = Automorphism.identity(basis)  # tree marking twist, phi^{-t}
    for t in range(steps + 1):
        mass = sum((lam * 2 * len(g) for lam, g in mu_t.terms), Fraction(0))
        cross = base_pairing / (vol * mass)
        crosses.append(cross)
        rec = {"step": t, "mass": mass, "cross_pairing": cross}
        if mode == "current":
            table = mu_t.table(depth).scale(Fraction(1) / mass)
            tables.append(table)
            delta = table.sup_distance(prev_table) if prev_table is not None else None
            est = mass / prev_mass if prev_mass else None
            prev_table = table
        else:
            vec = [translation_length(tree.remarked(tau),
                                      CyclicWord(basis, w.letters)) for w in wordlist]
            volsum = sum(vec, Fraction(0))
            pvec = [x / volsum for x in vec]
            delta = (max(abs(a - b) for a, b in zip(pvec, prev_vec))
                     if prev_vec is not None else None)
            est = volsum / prev_volsum if prev_volsum else None
            prev_vec = pvec
            prev_volsum = volsum
        rec["delta"] = delta if delta is not None else ""
        rec["expansion_estimate"] = est if est is not None else ""
        rec["estimate_gap"] = (abs(est - eig_prev)
                               if est is not None and eig_prev is not None else "")
        records.append(rec)
        if delta is not None:
            deltas.append(delta)
        if est is not None:
            estimates.append(est)
            eig_prev = est
        prev_mass = mass
        if t < steps:
            if mode == "current":
                mu_t = mu_t.map(phi)
            else:
                tau = compose(tau, phi_inv)
                mu_t = mu_t.map(phi)

    tail = deltas[burn_in:]
    monotone = all(a >= b for a, b in zip(tail, tail[1:]))
    cross_tail = crosses[burn_in:]
    cross_monotone = all(a > b for a, b in zip(cross_tail, cross_tail[1:]))
    summary = {"mode": mode, "steps": steps, "depth": depth,
               "final_delta": deltas[-1] if deltas else "",
               "final_expansion_estimate": estimates[-1] if estimates else "",
               "final_expansion_float": (float(estimates[-1]) if estimates else ""),
               "final_cross_pairing": crosses[-1],
               "not_converging": not monotone,
               "hypotheses": "user asserts phi is an atoroidal iwip"}
    return _report(
        "north_south",
        {"phi": _phi_name(phi), "start": mode, "steps": steps, "depth": depth},
        records, summary,
        [("trajectory_length", len(records) == steps + 1),
         ("cross_pairing_decreasing_after_burn_in", cross_monotone)],
        payload={"tables": tables, "crosses": crosses, "deltas": deltas,
                 "estimates": estimates},
    )


# ---------------------------------------------------------------------------
# filling certificates
# ---------------------------------------------------------------------------


def filling_search(g: CyclicWord, radius: int) -> ExperimentReport:
    """Look for a very small one-edge splitting translate where g is
    elliptic.  A certificate disproves filling; none found means g fills
    up to this radius (not a proof of filling)."""
    basis = g.basis
    seeds = seed_splittings(basis)
    ball = outer_ball(basis, radius)
    certificate = None
    cert_name = None
    tested = 0
    for key, phi in ball:
        for name, seed_split in seeds:
            split = seed_split if phi.is_identity() else seed_split.translated(phi)
            tested += 1
            if bass_serre_length(split, g) == 0:
                certificate = split
                cert_name = f"{name} translated by {_phi_name(phi)}"
                break
        if certificate is not None:
            break
    found = certificate is not None
    recheck = (intersection_number(certificate, RationalCurrent.counting(g)) == 0
               if found else True)
    records = [{"word": str(g), "radius": radius, "found": found,
                "certificate": cert_name or "", "splittings_tested": tested}]
    return _report(
        "filling_search",
        {"word": str(g), "radius": radius},
        records,
        {"found": found, "certificate": cert_name or "none",
         "splittings_tested": tested},
        [("certificate_re_verifies", recheck)],
        payload={"certificate": certificate},
    )


# ---------------------------------------------------------------------------
# bounded translation equivalence
# ---------------------------------------------------------------------------


def bte_bounds(g: CyclicWord, h: CyclicWord, tree_sample) -> ExperimentReport:
    """Ratios ||g||_T / ||h||_T over the sample; degenerate trees are the
    witnesses against bounded equivalence."""
    if not tree_sample:
        raise EmptySample("bte_bounds needs a nonempty tree sample")
    records = []
    ratios = []
    degenerates = []
    for i, tree in enumerate(tree_sample):
        lg = _length(tree, g)
        lh = _length(tree, h)
        if lg == 0 and lh == 0:
            records.append({"tree": i, "len_g": lg, "len_h": lh,
                            "ratio": "", "degenerate": False})
            continue
        if lg == 0 or lh == 0:
            degenerates.append(i)
            records.append({"tree": i, "len_g": lg, "len_h": lh,
                            "ratio": "", "degenerate": True})
            continue
        r = lg / lh
        ratios.append(r)
        records.append({"tree": i, "len_g": lg, "len_h": lh,
                        "ratio": r, "degenerate": False})
    if not ratios and not degenerates:
        raise EmptySample("every sampled tree was degenerate-on-both")
    summary = {"min_ratio": min(ratios) if ratios else "",
               "max_ratio": max(ratios) if ratios else "",
               "degenerates": len(degenerates)}
    return _report(
        "bte_bounds",
        {"g": str(g), "h": str(h), "sample_size": len(tree_sample)},
        records, summary,
        [("no_degenerate_witness", not degenerates)],
        payload={"min_ratio": min(ratios) if ratios else None,
                 "max_ratio": max(ratios) if ratios else None,
                 "degenerates": degenerates},
    )


# ---------------------------------------------------------------------------
# bilipschitz scan
# ---------------------------------------------------------------------------


def transverse(s1: Splitting, s2: Splitting) -> tuple[bool, tuple | None]:
    """No common nontrivial elliptic: every pair of vertex-group cores has
    an acyclic product."""
    for v1, g1 in s1.vertex_group_graphs():
        for v2, g2 in s2.vertex_group_graphs():
            if product_has_cycle(g1, g2):
                return False, (v1, v2)
    return True, None


def bilipschitz_scan(s1: Splitting, s2: Splitting, t0: MarkedMetricGraph,
                     maxlen: int) -> ExperimentReport:
    """Extremes of (||w||_S1 + ||w||_S2) / ||w||_T0 over ||w||_A <= maxlen.

    Raises NotTransverse when the splittings share an elliptic, in which
    case no positive lower bound can exist.
    """
    ok, pair = transverse(s1, s2)
    if not ok:
        raise NotTransverse(
            f"vertex groups {pair} share a nontrivial elliptic element", pair)
    basis = s1.basis
    lo = hi = None
    lo_w = hi_w = None
    count = 0
    for n in range(1, maxlen + 1):
        for row in _kernels.necklaces(n, basis.rank):
            w = CyclicWord(basis, tuple(int(x) for x in row))
            num = Fraction(bass_serre_length(s1, w) + bass_serre_length(s2, w))
            den = translation_length(t0, w)
            ratio = num / den
            count += 1
            if lo is None or ratio < lo:
                lo, lo_w = ratio, w
            if hi is None or ratio > hi:
                hi, hi_w = ratio, w
    records = [{"bound": "low", "value": lo, "witness": str(lo_w)},
               {"bound": "high", "value": hi, "witness": str(hi_w)}]
    return _report(
        "bilipschitz_scan",
        {"maxlen": maxlen, "classes": count},
        records,
        {"transverse": True, "c_low": lo, "c_high": hi,
         "classes_scanned": count},
        [("transverse", True), ("positive_lower_bound", lo > 0),
         ("bounds_ordered", lo <= hi)],
        payload={"c_low": lo, "c_high": hi},
    )


def _tree_name(tree) -> str:
    if isinstance(tree, MarkedMetricGraph):
        kind = "rose" if tree.num_vertices == 1 else "graph"
        return f"{kind}(V={tree.num_vertices}, vol={_fmt(tree.volume())})"
    loops = "".join(tree.basis.letter_name(l) for l, _, _ in tree.loop_edges)
    return f"splitting(V={tree.num_vertices}, loops={loops or '-'})"


def _current_name(mu: RationalCurrent) -> str:
    if mu.is_zero():
        return "0"
    return " + ".join(f"{_fmt(lam)}*{g}" for lam, g in mu.terms)


def _phi_name(phi: Automorphism) -> str:
    from .automorphisms import format_automorphism

    return format_automorphism(phi)
