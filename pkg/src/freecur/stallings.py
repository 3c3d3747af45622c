"""Stallings subgroup graphs: folding, cores, membership, readability,
intersections, conjugacy-class intersections and malnormality.

A folded graph is a partial deterministic automaton over the 2k letters
with involutive transitions: trans[v][x] = u iff trans[u][x^1] = v.  The
core is the unique subgraph without degree-one vertices carrying pi_1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import FormatError
from .words import Basis, CyclicWord, ReducedWord, free_reduce


@dataclass(frozen=True)
class StallingsGraph:
    basis: Basis
    base: int
    _trans: tuple  # tuple of dicts letter -> vertex
    core_vertices: frozenset

    @property
    def num_vertices(self) -> int:
        return len(self._trans)

    def transitions(self, v: int) -> dict:
        return self._trans[v]

    def step(self, v: int, letter: int) -> int | None:
        return self._trans[v].get(letter)

    def edges(self) -> list[tuple[int, int, int]]:
        """Geometric edges as (u, letter, v) with letter a generator."""
        out = []
        for u, tr in enumerate(self._trans):
            for l, v in tr.items():
                if l % 2 == 0:
                    out.append((u, l, v))
        return sorted(out)

    def core_edges(self) -> list[tuple[int, int, int]]:
        return [(u, l, v) for (u, l, v) in self.edges()
                if u in self.core_vertices and v in self.core_vertices]

    def core_transition_table(self) -> tuple[np.ndarray, dict]:
        """Dense automaton over renumbered core vertices; -1 for absent."""
        order = sorted(self.core_vertices)
        index = {v: i for i, v in enumerate(order)}
        table = np.full((len(order), self.basis.num_letters), -1, np.int16)
        for v in order:
            for l, u in self._trans[v].items():
                if u in self.core_vertices:
                    table[index[v], l] = index[u]
        return table, index

    def rank(self) -> int:
        e = len(self.core_edges())
        v = len(self.core_vertices)
        return e - v + 1 if v else 0


def fold(generators: Sequence[ReducedWord]) -> StallingsGraph:
    """Fold the wedge of generator loops into the subgroup graph."""
    if not generators:
        raise FormatError("fold needs at least one generator word")
    basis = generators[0].basis

    nv = 1
    directed: list[tuple[int, int, int]] = []
    for g in generators:
        cur = 0
        for i, letter in enumerate(g.letters):
            nxt = 0 if i == len(g.letters) - 1 else nv
            if nxt == nv:
                nv += 1
            directed.append((cur, letter, nxt))
            directed.append((nxt, letter ^ 1, cur))
            cur = nxt

    parent = list(range(nv))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    trans: list[dict] = [dict() for _ in range(nv)]
    pending = list(directed)
    while pending:
        u, l, v = pending.pop()
        u, v = find(u), find(v)
        cur = trans[u].get(l)
        if cur is None:
            trans[u][l] = v
            continue
        cur = find(cur)
        if cur == v:
            continue
        # fold: identify cur and v, requeueing the smaller star
        a, b = (cur, v) if len(trans[cur]) >= len(trans[v]) else (v, cur)
        parent[b] = a
        for letter, tgt in trans[b].items():
            pending.append((a, letter, find(tgt)))
        trans[b] = dict()

    root = find(0)
    order = [root]
    index = {root: 0}
    pos = 0
    while pos < len(order):
        v = order[pos]
        pos += 1
        for letter in sorted(trans[v]):
            u = find(trans[v][letter])
            if u not in index:
                index[u] = len(order)
                order.append(u)
    final = [{l: index[find(t)] for l, t in trans[v].items()} for v in order]
    return StallingsGraph(basis, 0, tuple(final),
                          frozenset(_core_vertices(final, 0)))


def _core_vertices(trans: Sequence[dict], base: int) -> set:
    alive = set(range(len(trans)))
    degrees = {v: len(trans[v]) for v in alive}
    queue = [v for v in alive if degrees[v] <= 1]
    while queue:
        v = queue.pop()
        if v not in alive or degrees[v] > 1:
            continue
        if len(alive) == 1:
            break
        alive.discard(v)
        for l, u in trans[v].items():
            if u in alive:
                degrees[u] -= 1
                if degrees[u] <= 1:
                    queue.append(u)
    if not alive:
        alive = {base}
    return alive


def graph_from_edges(basis: Basis, num_vertices: int, base: int,
                     edges: Iterable[tuple[int, int, int]]) -> StallingsGraph:
    """Build a folded graph from (from, letter, to) triples."""
    trans: list[dict] = [dict() for _ in range(num_vertices)]
    for u, l, v in edges:
        if l % 2:
            u, l, v = v, l ^ 1, u
        if trans[u].get(l, v) != v or trans[v].get(l ^ 1, u) != u:
            raise FormatError("edge list is not folded")
        trans[u][l] = v
        trans[v][l ^ 1] = u
    return StallingsGraph(basis, base, tuple(trans),
                          frozenset(_core_vertices(trans, base)))


def member(graph: StallingsGraph, w: ReducedWord) -> bool:
    """True iff w labels a closed path at the base vertex."""
    cur = graph.base
    for letter in w.letters:
        cur = graph.step(cur, letter)
        if cur is None:
            return False
    return cur == graph.base


def readable_in_core(graph: StallingsGraph, v: ReducedWord | CyclicWord,
                     power: int = 1) -> bool:
    """True iff v (or v^power for power > 1) labels a reduced core path."""
    if not v.letters:
        raise FormatError("readability needs a nonempty word")
    table, _ = graph.core_transition_table()
    word = np.asarray(v.letters, np.int16)
    return bool(_kernels.readable(table, word, power))


def conjugate_into(graph: StallingsGraph, g: CyclicWord) -> bool:
    """True iff some power of g is conjugate into the subgroup.

    Equivalently g^infinity is readable in the core; the pigeonhole power
    core_size + 1 makes that decidable.
    """
    f, _ = g.primitive_root()
    return readable_in_core(graph, f, power=len(graph.core_vertices) + 1)


@dataclass(frozen=True)
class AxisCycle:
    """A closed core path reading rotation^(power) of a primitive word."""

    label: CyclicWord          # ambient label of the closed path
    power: int                 # number of f-periods per circuit
    path_key: tuple            # canonical (vertex, letter) cycle, for dedup
    start: tuple               # one (vertex, phase) on the cycle


def axis_cycles(graph: StallingsGraph, f: CyclicWord) -> list[AxisCycle]:
    """Cycles of the deterministic (core vertex, phase) trace map of f.

    Each cycle is a closed reduced core path reading some rotation of a
    power of f; distinct cycles are exactly the H-conjugacy classes of
    elements of H with axis in the F-orbit of the axis of f.
    """
    n = len(f.letters)
    states: dict[tuple[int, int], tuple[int, int] | None] = {}
    core = graph.core_vertices
    for v in sorted(core):
        for r in range(n):
            tgt = graph.step(v, f.letters[r])
            states[(v, r)] = (tgt, (r + 1) % n) if tgt in core else None
    on_cycle: set = set()
    seen: set = set()
    for s in sorted(states):
        if s in seen:
            continue
        path = []
        pos: dict = {}
        cur = s
        while cur is not None and cur not in pos and cur not in seen:
            pos[cur] = len(path)
            path.append(cur)
            cur = states[cur]
        if cur is not None and cur in pos:
            on_cycle.update(path[pos[cur]:])
        seen.update(path)
    cycles: list[AxisCycle] = []
    done: set = set()
    for s in sorted(on_cycle):
        if s in done:
            continue
        cyc = [s]
        cur = states[s]
        while cur != s:
            cyc.append(cur)
            cur = states[cur]
        done.update(cyc)
        if len(cyc) % n:
            raise AssertionError("trace cycle length must be a phase multiple")
        power = len(cyc) // n
        letters = tuple(f.letters[r] for (_, r) in cyc)
        pairs = [(v, f.letters[r]) for (v, r) in cyc]
        m = len(pairs)
        key = min(tuple(pairs[(i + j) % m] for j in range(m)) for i in range(m))
        cycles.append(AxisCycle(CyclicWord(graph.basis, letters), power, key, s))
    cycles.sort(key=lambda c: c.path_key)
    return cycles


def conjugacy_intersection(graph: StallingsGraph, h: CyclicWord):
    """Representatives of [h]_F intersected with H, and the power index d.

    h = f^d with f primitive; a conjugate of h lies in H iff a trace cycle
    of f has period dividing d.  Representatives are returned as ambient
    cyclic words (each equals [h]); their number is the class count m.
    """
    f, d = h.primitive_root()
    reps = [h for cyc in axis_cycles(graph, f) if d % cyc.power == 0]
    return reps, d


def intersect(g1: StallingsGraph, g2: StallingsGraph) -> list[StallingsGraph]:
    """Components of the labeled product graph.

    The first entry is the base-point component (the Stallings graph of
    H1 meet H2); the rest are the core-product components with nontrivial
    fundamental group, one per conjugate intersection class.
    """
    if g1.basis != g2.basis:
        raise FormatError("graphs must share a basis")
    base_comp, base_states = _product_component(g1, g2, (g1.base, g2.base),
                                                core_only=False)
    out = [base_comp]
    seen_states: set = set(base_states)
    core_pairs = sorted((u, v) for u in g1.core_vertices for v in g2.core_vertices)
    for s in core_pairs:
        if s in seen_states:
            continue
        comp, states = _product_component(g1, g2, s, core_only=True)
        seen_states.update(states)
        if comp.rank() > 0:
            out.append(comp)
    return out


def _product_component(g1, g2, start, core_only):
    def ok(u, v):
        if core_only:
            return u in g1.core_vertices and v in g2.core_vertices
        return True

    order = [start]
    index = {start: 0}
    pos = 0
    trans: list[dict] = [dict()]
    while pos < len(order):
        u, v = order[pos]
        for l in sorted(g1.transitions(u)):
            if l not in g2.transitions(v):
                continue
            tu, tv = g1.step(u, l), g2.step(v, l)
            if not ok(tu, tv):
                continue
            t = (tu, tv)
            if t not in index:
                index[t] = len(order)
                order.append(t)
                trans.append(dict())
            trans[pos][l] = index[t]
            trans[index[t]][l ^ 1] = pos
        pos += 1
    graph = StallingsGraph(g1.basis, 0, tuple(trans),
                           frozenset(_core_vertices(trans, 0)))
    return graph, set(order)


def product_has_cycle(g1: StallingsGraph, g2: StallingsGraph) -> bool:
    """True iff some core-product component carries a cycle.

    Equivalently some conjugate of the first subgroup meets some conjugate
    of the second one nontrivially.
    """
    seen: set = set()
    for u in sorted(g1.core_vertices):
        for v in sorted(g2.core_vertices):
            s = (u, v)
            if s in seen:
                continue
            comp, states = _product_component(g1, g2, s, core_only=True)
            seen.update(states)
            if comp.rank() > 0:
                return True
    return False


def is_malnormal(graph: StallingsGraph) -> bool:
    """True iff all off-diagonal components of core x core are trees."""
    core = sorted(graph.core_vertices)
    seen: set = set()
    for u in core:
        for v in core:
            s = (u, v)
            if s in seen:
                continue
            comp, states = _product_component(graph, graph, s, core_only=True)
            seen.update(states)
            if any(a == b for (a, b) in states):
                continue  # the diagonal component
            if comp.rank() > 0:
                return False
    return True


# ---------------------------------------------------------------------------
# the subgroup's own chart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubgroupChart:
    """A free basis of the subgroup read off the core's spanning tree.

    ``basis`` has one generator per non-tree core edge; ``embedding[i]``
    is that generator as an ambient reduced word (based at the core root,
    so only well-defined up to conjugacy, which is all cyclic words need).
    """

    graph: StallingsGraph
    basis: Basis
    embedding: tuple[ReducedWord, ...]
    root: int
    _edge_index: dict  # (vertex, letter) -> subgroup letter

    def to_ambient(self, w: CyclicWord | ReducedWord):
        """Substitute the embedding into a word over the subgroup basis."""
        from .words import cyclic_reduce

        raw: list[int] = []
        for l in w.letters:
            im = self.embedding[l // 2]
            raw.extend((x ^ 1 for x in reversed(im.letters)) if l & 1 else im.letters)
        word = free_reduce(self.graph.basis, raw)
        if isinstance(w, CyclicWord):
            c, _ = cyclic_reduce(word)
            if c is None:
                raise AssertionError("nontrivial class collapsed in embedding")
            return c
        return word


def subgroup_chart(graph: StallingsGraph) -> SubgroupChart:
    """Spanning-tree chart of the core; requires nontrivial rank."""
    if graph.rank() < 1:
        raise FormatError("trivial subgroup has no chart")
    core = graph.core_vertices
    root = graph.base if graph.base in core else min(core)
    parent: dict[int, tuple[int, int]] = {root: (root, -1)}
    order = [root]
    pos = 0
    geom_tree: set = set()
    while pos < len(order):
        v = order[pos]
        pos += 1
        for l in sorted(graph.transitions(v)):
            u = graph.step(v, l)
            if u in core and u not in parent:
                parent[u] = (v, l)
                geom_tree.add((v, l, u) if l % 2 == 0 else (u, l ^ 1, v))
                order.append(u)

    def root_to(v: int) -> list[int]:
        rev = []
        while v != root:
            p, l = parent[v]
            rev.append(l)
            v = p
        return list(reversed(rev))

    gens: list[ReducedWord] = []
    edge_index: dict[tuple[int, int], int] = {}
    for u, l, v in graph.core_edges():
        if (u, l, v) in geom_tree:
            continue
        idx = len(gens)
        letters = root_to(u) + [l] + [x ^ 1 for x in reversed(root_to(v))]
        gens.append(free_reduce(graph.basis, letters))
        edge_index[(u, l)] = 2 * idx
        edge_index[(v, l ^ 1)] = 2 * idx + 1
    return SubgroupChart(graph, Basis(len(gens)), tuple(gens), root, edge_index)


def path_to_subgroup_word(chart: SubgroupChart, start: int,
                          letters: Sequence[int]) -> CyclicWord:
    """Rewrite a closed reduced core path as a cyclic word over the chart.

    The crossing sequence of non-tree edges of a reduced closed path is
    automatically cyclically reduced.
    """
    out = []
    v = start
    for l in letters:
        key = (v, l)
        if key in chart._edge_index:
            out.append(chart._edge_index[key])
        v = chart.graph.step(v, l)
    if v != start:
        raise FormatError("path is not closed")
    if not out:
        raise FormatError("path is null-homotopic")
    return CyclicWord(chart.basis, tuple(out))
