"""Bit-exact text formats for every artifact the CLI reads or writes.

Round-trip law: parse(emit(x)) == x for words, tables, graphs, marked
graphs, splittings and automorphisms.
"""

from __future__ import annotations

from fractions import Fraction

from .automorphisms import Automorphism, format_automorphism, parse_automorphism
from .currents import FrequencyTable, RationalCurrent
from .errors import FormatError
from .stallings import StallingsGraph, graph_from_edges
from .trees import MarkedMetricGraph, Splitting
from .words import Basis, CyclicWord, ReducedWord, parse_cyclic, parse_word


def format_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad rational {text!r}: {e}") from None


# ---------------------------------------------------------------------------
# frequency tables
# ---------------------------------------------------------------------------


def format_table(t: FrequencyTable) -> str:
    lines = [f"basis k={t.basis.rank} depth L={t.depth}"]
    for v in sorted(t.weights, key=lambda w: (len(w), w)):
        if t.weights[v]:
            word = ReducedWord(t.basis, v)
            lines.append(f"{word} {format_fraction(t.weights[v])}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> FrequencyTable:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines:
        raise FormatError("empty table")
    head = lines[0].split()
    if (len(head) != 3 or head[0] != "basis"
            or not head[1].startswith("k=") or not head[2].startswith("L=")):
        raise FormatError(f"bad table header {lines[0]!r}")
    basis = Basis(int(head[1][2:]))
    depth = int(head[2][2:])
    weights = {}
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"bad table line {line!r}")
        w = parse_word(basis, parts[0])
        if not 1 <= len(w) <= depth:
            raise FormatError(f"table word {parts[0]!r} outside depth range")
        weights[w.letters] = parse_fraction(parts[1])
    return FrequencyTable(basis, depth, weights)


# ---------------------------------------------------------------------------
# rational currents (inline form "1*ab + 2/3*ba")
# ---------------------------------------------------------------------------


def parse_current(basis: Basis, text: str) -> RationalCurrent:
    text = text.strip()
    if text in ("0", ""):
        return RationalCurrent.from_terms(basis, [])
    terms = []
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if "*" in chunk:
            coef, word = chunk.split("*", 1)
            lam = parse_fraction(coef.strip())
        else:
            lam, word = Fraction(1), chunk
        terms.append((lam, parse_cyclic(basis, word.strip())))
    return RationalCurrent.from_terms(basis, terms)


def format_current(mu: RationalCurrent) -> str:
    if mu.is_zero():
        return "0"
    return " + ".join(f"{format_fraction(lam)}*{g}" for lam, g in mu.terms)


# ---------------------------------------------------------------------------
# Stallings graphs
# ---------------------------------------------------------------------------


def format_graph(g: StallingsGraph) -> str:
    lines = [f"vertices {g.num_vertices} base {g.base}"]
    for u, l, v in g.edges():
        lines.append(f"{u} {g.basis.letter_name(l)} {v}")
    lines.append("core vertices: " + " ".join(str(v) for v in sorted(g.core_vertices)))
    core = g.core_edges()
    lines.append("core edges: " + "; ".join(
        f"{u} {g.basis.letter_name(l)} {v}" for u, l, v in core))
    return "\n".join(lines) + "\n"


def parse_graph(basis: Basis, text: str) -> StallingsGraph:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines:
        raise FormatError("empty graph")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "vertices" or head[2] != "base":
        raise FormatError(f"bad graph header {lines[0]!r}")
    n, base = int(head[1]), int(head[3])
    edges = []
    for line in lines[1:]:
        if line.startswith("core"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"bad edge line {line!r}")
        edges.append((int(parts[0]), basis.parse_letter(parts[1]), int(parts[2])))
    return graph_from_edges(basis, n, base, edges)


# ---------------------------------------------------------------------------
# marked metric graphs
# ---------------------------------------------------------------------------


def format_marked_graph(g: MarkedMetricGraph) -> str:
    lines = [f"vertices {g.num_vertices} base {g.base}"]
    for eid, u, v, l in g.edges:
        lines.append(f"{eid} {u} {v} {format_fraction(l)}")
    lines.append("tree: " + " ".join(str(i) for i in g.tree_ids))
    for i, path in enumerate(g.marking):
        name = g.basis.letter_name(2 * i)
        steps = " ".join(f"+{s}" if s > 0 else str(s) for s in path)
        lines.append(f"{name} = {steps}")
    return "\n".join(lines) + "\n"


def parse_marked_graph(basis: Basis, text: str) -> MarkedMetricGraph:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines:
        raise FormatError("empty marked graph")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "vertices" or head[2] != "base":
        raise FormatError(f"bad marked graph header {lines[0]!r}")
    n, base = int(head[1]), int(head[3])
    edges = []
    tree_ids = None
    marking: dict[int, tuple] = {}
    for line in lines[1:]:
        if line.startswith("tree:"):
            tree_ids = tuple(int(x) for x in line[5:].split())
            continue
        if "=" in line:
            lhs, rhs = (s.strip() for s in line.split("=", 1))
            gen = basis.parse_letter(lhs)
            if gen % 2:
                raise FormatError("marking lines use generator letters")
            marking[gen // 2] = tuple(int(x) for x in rhs.split())
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"bad marked edge line {line!r}")
        edges.append((int(parts[0]), int(parts[1]), int(parts[2]),
                      parse_fraction(parts[3])))
    if sorted(marking) != list(range(basis.rank)):
        raise FormatError("marking must cover every generator")
    return MarkedMetricGraph.create(
        basis, n, base, edges, [marking[i] for i in range(basis.rank)], tree_ids)


# ---------------------------------------------------------------------------
# splittings
# ---------------------------------------------------------------------------


def format_splitting(s: Splitting) -> str:
    tree = " ".join(f"{u}-{v}" for u, v in s.tree_edges)
    loops = " ".join(f"{s.basis.letter_name(l)} {u}-{v}"
                     for l, u, v in s.loop_edges)
    lines = [f"graph: vertices {s.num_vertices}; tree-edges {tree}; loops: {loops}"]
    for v, gens in enumerate(s.vertex_gens):
        names = " ".join(s.basis.letter_name(g) for g in gens)
        lines.append(f"vertexgens {v}: {names}")
    lines.append("psi: " + format_automorphism(s.psi))
    return "\n".join(lines) + "\n"


def parse_splitting(basis: Basis, text: str) -> Splitting:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("graph:"):
        raise FormatError("splitting file must start with 'graph:'")
    head = lines[0][len("graph:"):]
    parts = [p.strip() for p in head.split(";")]
    nv = None
    tree_edges: list[tuple[int, int]] = []
    loop_edges: list[tuple[int, int, int]] = []
    for p in parts:
        if p.startswith("vertices"):
            nv = int(p.split()[1])
        elif p.startswith("tree-edges"):
            for chunk in p.split()[1:]:
                u, v = chunk.split("-")
                tree_edges.append((int(u), int(v)))
        elif p.startswith("loops:"):
            toks = p[len("loops:"):].split()
            for i in range(0, len(toks), 2):
                letter = basis.parse_letter(toks[i])
                u, v = toks[i + 1].split("-")
                loop_edges.append((letter, int(u), int(v)))
        elif p:
            raise FormatError(f"bad graph clause {p!r}")
    if nv is None:
        raise FormatError("splitting graph needs a vertex count")
    vertex_gens: dict[int, tuple] = {}
    psi = None
    for line in lines[1:]:
        if line.startswith("vertexgens"):
            lhs, rhs = line.split(":", 1)
            v = int(lhs.split()[1])
            vertex_gens[v] = tuple(sorted(basis.parse_letter(t) for t in rhs.split()))
        elif line.startswith("psi:"):
            psi = parse_automorphism(basis, line[4:])
        else:
            raise FormatError(f"bad splitting line {line!r}")
    gens = tuple(vertex_gens.get(v, ()) for v in range(nv))
    if psi is None:
        raise FormatError("splitting file needs a psi block")
    return Splitting(basis, nv, tuple(tree_edges), tuple(loop_edges), gens, psi)


def parse_tree(basis: Basis, text: str):
    """Dispatch between marked-graph and splitting formats."""
    stripped = text.lstrip()
    if stripped.startswith("graph:"):
        return parse_splitting(basis, text)
    return parse_marked_graph(basis, text)
