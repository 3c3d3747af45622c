"""Points of unprojectivized Outer space as marked metric graphs, and very
small simplicial trees as trivial-edge-group splittings.

A marked metric graph carries a certified marking isomorphism from the
free group to its fundamental group; translation lengths are metric
lengths of cyclically reduced edge loops.  A splitting is specified by an
adapted basis (vertex-generator sets plus stable letters) together with a
change-of-basis automorphism, which makes the graph-of-groups genuine by
construction; its Bass-Serre translation length counts edge crossings of
the reduced cyclic Y-path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .automorphisms import Automorphism, apply, invert
from .currents import FrequencyTable, RationalCurrent
from .errors import FormatError, UnsupportedChart
from .stallings import StallingsGraph, conjugate_into, fold, readable_in_core
from .words import Basis, CyclicWord, ReducedWord, cyclic_reduce


def _reduce_path(path: Sequence[int]) -> list[int]:
    out: list[int] = []
    for e in path:
        if out and out[-1] == -e:
            out.pop()
        else:
            out.append(e)
    return out


def _cyclic_reduce_path(path: Sequence[int]) -> list[int]:
    out = _reduce_path(path)
    while len(out) >= 2 and out[0] == -out[-1]:
        out = out[1:-1]
    return out


@dataclass(frozen=True)
class MarkedMetricGraph:
    basis: Basis
    num_vertices: int
    base: int
    edges: tuple            # (edge id, from, to, Fraction length), ids 1-based
    tree_ids: tuple         # edge ids forming a spanning tree
    marking: tuple          # per generator, a tuple of signed edge ids
    inverse_marking: Automorphism = field(compare=False, repr=False)

    @staticmethod
    def create(basis: Basis, num_vertices: int, base: int, edges, marking,
               tree_ids=None) -> "MarkedMetricGraph":
        edges = tuple((int(i), int(u), int(v), Fraction(l)) for i, u, v, l in edges)
        ids = [e[0] for e in edges]
        if sorted(ids) != list(range(1, len(edges) + 1)):
            raise FormatError("edge ids must be 1..m")
        by_id = {e[0]: e for e in edges}
        for _, u, v, l in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise FormatError("edge endpoint out of range")
            if l <= 0:
                raise FormatError("edge lengths must be positive")
        degree = [0] * num_vertices
        for _, u, v, _ in edges:
            degree[u] += 1
            degree[v] += 1
        if any(d <= 1 for d in degree):
            raise FormatError("marked graphs may not have degree-one vertices")
        if tree_ids is None:
            tree_ids = _spanning_tree(num_vertices, edges)
        tree_ids = tuple(int(i) for i in tree_ids)
        _check_spanning(num_vertices, edges, tree_ids)
        marking = tuple(tuple(int(s) for s in path) for path in marking)
        if len(marking) != basis.rank:
            raise FormatError("marking needs one closed path per generator")
        for path in marking:
            cur = base
            for s in path:
                eid = abs(s)
                if eid not in by_id:
                    raise FormatError(f"marking uses unknown edge {eid}")
                _, u, v, _ = by_id[eid]
                if s > 0:
                    if cur != u:
                        raise FormatError("marking path is not a valid chain")
                    cur = v
                else:
                    if cur != v:
                        raise FormatError("marking path is not a valid chain")
                    cur = u
            if cur != base:
                raise FormatError("marking path is not closed at the base")
        inverse = _certify_marking(basis, num_vertices, base, edges, tree_ids, marking)
        return MarkedMetricGraph(basis, num_vertices, base, edges, tree_ids,
                                 marking, inverse)

    @staticmethod
    def rose(basis: Basis, lengths: Sequence, marking_map: Automorphism | None = None
             ) -> "MarkedMetricGraph":
        """Rose with one loop per generator; marking optionally twisted."""
        k = basis.rank
        lengths = [Fraction(l) for l in lengths]
        if len(lengths) != k:
            raise FormatError("need one length per generator")
        edges = tuple((i + 1, 0, 0, lengths[i]) for i in range(k))
        phi = marking_map or Automorphism.identity(basis)
        marking = []
        for i in range(k):
            path = []
            for l in phi.images[i].letters:
                path.append(l // 2 + 1 if l % 2 == 0 else -(l // 2 + 1))
            marking.append(tuple(path))
        return MarkedMetricGraph.create(basis, 1, 0, edges, marking, tuple())

    def edge_length(self, eid: int) -> Fraction:
        return self._length_map()[eid]

    def _length_map(self):
        return {e[0]: e[3] for e in self.edges}

    def volume(self) -> Fraction:
        return sum((e[3] for e in self.edges), Fraction(0))

    def scaled(self, c: Fraction) -> "MarkedMetricGraph":
        c = Fraction(c)
        edges = tuple((i, u, v, l * c) for i, u, v, l in self.edges)
        return MarkedMetricGraph(self.basis, self.num_vertices, self.base,
                                 edges, self.tree_ids, self.marking,
                                 self.inverse_marking)

    def remarked(self, phi: Automorphism) -> "MarkedMetricGraph":
        """Precompose the marking with phi (the tree phi^{-1} . T)."""
        marking = tuple(tuple(self._marking_path(phi.images[i].letters))
                        for i in range(self.basis.rank))
        return MarkedMetricGraph(self.basis, self.num_vertices, self.base,
                                 self.edges, self.tree_ids, marking,
                                 self.inverse_marking)

    def _marking_path(self, letters) -> list[int]:
        path: list[int] = []
        for l in letters:
            seg = self.marking[l // 2]
            step = seg if l % 2 == 0 else [-s for s in reversed(seg)]
            for s in step:
                if path and path[-1] == -s:
                    path.pop()
                else:
                    path.append(s)
        return path

    def is_unit_rose(self) -> bool:
        return (self.num_vertices == 1
                and all(l == 1 for _, _, _, l in self.edges)
                and self._is_identity_rose_marking())

    def is_rose_chart(self) -> bool:
        return self.num_vertices == 1 and self._is_identity_rose_marking()

    def _is_identity_rose_marking(self) -> bool:
        return (len(self.edges) == self.basis.rank
                and all(self.marking[i] == (i + 1,) for i in range(self.basis.rank)))


def _spanning_tree(num_vertices, edges):
    seen = {0}
    tree = []
    changed = True
    while changed:
        changed = False
        for eid, u, v, _ in edges:
            if (u in seen) != (v in seen):
                seen.add(u)
                seen.add(v)
                tree.append(eid)
                changed = True
    if len(seen) != num_vertices:
        raise FormatError("graph is not connected")
    return tuple(sorted(tree))


def _check_spanning(num_vertices, edges, tree_ids):
    by_id = {e[0]: e for e in edges}
    if len(tree_ids) != num_vertices - 1:
        raise FormatError("spanning tree must have V-1 edges")
    seen = {0}
    grow = True
    while grow:
        grow = False
        for t in tree_ids:
            _, u, v, _ = by_id[t]
            if (u in seen) != (v in seen):
                seen.update((u, v))
                grow = True
    if len(seen) != num_vertices:
        raise FormatError("tree ids do not span the graph")


def _certify_marking(basis, num_vertices, base, edges, tree_ids, marking
                     ) -> Automorphism:
    """Check the marking is an isomorphism onto pi_1; return its inverse.

    The non-tree edges give a free basis of pi_1; each marking path is
    rewritten as its non-tree crossing word and the resulting tuple must
    form a basis, certified by Nielsen reduction.
    """
    non_tree = sorted(e[0] for e in edges if e[0] not in tree_ids)
    rank = len(non_tree)
    if rank != basis.rank:
        raise FormatError(
            f"graph has rank {rank}, marking needs rank {basis.rank}")
    loop_letter = {}
    for i, eid in enumerate(non_tree):
        loop_letter[eid] = 2 * i
        loop_letter[-eid] = 2 * i + 1
    loop_basis = Basis(rank)
    images = []
    for path in marking:
        letters = [loop_letter[s] for s in path if abs(s) not in tree_ids]
        from .words import free_reduce

        images.append(free_reduce(loop_basis, letters))
    phi = Automorphism.from_images(loop_basis, images)
    return invert(phi)


def translation_length(graph: MarkedMetricGraph, g: CyclicWord) -> Fraction:
    """Metric length of the reduced loop representing [g]."""
    path = graph._marking_path(g.letters)
    path = _cyclic_reduce_path(path)
    lengths = graph._length_map()
    return sum((lengths[abs(s)] for s in path), Fraction(0))


def cover_distance(graph: MarkedMetricGraph, w: ReducedWord) -> Fraction:
    """d(p, w p) in the universal cover, p the base-vertex lift."""
    path = graph._marking_path(w.letters)
    lengths = graph._length_map()
    return sum((lengths[abs(s)] for s in path), Fraction(0))


# ---------------------------------------------------------------------------
# splittings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Splitting:
    """Trivial-edge-group graph of groups over an adapted basis.

    Vertex groups are generated by the psi-images of their generator
    letters; stable letters label the non-tree edges.  psi expresses the
    adapted basis in the ambient one.
    """

    basis: Basis
    num_vertices: int
    tree_edges: tuple       # ((u, v), ...) ids 1..T in order
    loop_edges: tuple       # ((generator letter, u, v), ...) ids T+1..
    vertex_gens: tuple      # per vertex, tuple of generator letters (even)
    psi: Automorphism

    def __post_init__(self):
        if self.num_vertices < 1:
            raise FormatError("splitting needs at least one vertex")
        if self.num_vertices == 1 and not self.tree_edges and not self.loop_edges:
            raise FormatError("degenerate single-vertex splitting rejected")
        if len(self.tree_edges) != self.num_vertices - 1:
            raise FormatError("tree edges must form a spanning tree")
        assigned = [g for gens in self.vertex_gens for g in gens]
        assigned += [l for (l, _, _) in self.loop_edges]
        if sorted(assigned) != [2 * i for i in range(self.basis.rank)]:
            raise FormatError(
                "adapted basis must partition the generators between "
                "vertex groups and stable letters")
        seen = {0}
        grow = True
        while grow:
            grow = False
            for u, v in self.tree_edges:
                if (u in seen) != (v in seen):
                    seen.update((u, v))
                    grow = True
        if len(seen) != self.num_vertices:
            raise FormatError("tree edges do not span the vertex set")
        degree = [0] * self.num_vertices
        for u, v in self.tree_edges:
            degree[u] += 1
            degree[v] += 1
        for _, u, v in self.loop_edges:
            degree[u] += 1
            degree[v] += 1
        for v in range(self.num_vertices):
            if degree[v] <= 1 and not self.vertex_gens[v]:
                raise FormatError(
                    "reduced graph of groups: degree-one vertices need a "
                    "nontrivial vertex group")

    def vertex_group_graph(self, v: int) -> StallingsGraph | None:
        gens = self.vertex_gens[v]
        if not gens:
            return None
        words = [self.psi.images[g // 2] for g in gens]
        return fold(words)

    def vertex_group_graphs(self) -> list[tuple[int, StallingsGraph]]:
        out = []
        for v in range(self.num_vertices):
            g = self.vertex_group_graph(v)
            if g is not None:
                out.append((v, g))
        return out

    def kernel_pack(self):
        nl = self.basis.num_letters
        lv = np.full(nl, -1, np.int16)
        le = np.zeros(nl, np.int16)
        for v, gens in enumerate(self.vertex_gens):
            for g in gens:
                lv[g] = v
                lv[g ^ 1] = v
        n_edges = len(self.tree_edges) + len(self.loop_edges)
        eo = np.zeros(n_edges + 1, np.int16)
        et = np.zeros(n_edges + 1, np.int16)
        for i, (u, v) in enumerate(self.tree_edges):
            eo[i + 1] = u
            et[i + 1] = v
        for j, (letter, u, v) in enumerate(self.loop_edges):
            eid = len(self.tree_edges) + j + 1
            eo[eid] = u
            et[eid] = v
            le[letter] = eid
            le[letter ^ 1] = -eid
        tp, tpl = self._tree_paths()
        return lv, le, eo, et, tp, tpl

    def _tree_paths(self):
        nv = self.num_vertices
        adj: dict[int, list] = {v: [] for v in range(nv)}
        for i, (u, v) in enumerate(self.tree_edges):
            adj[u].append((v, i + 1))
            adj[v].append((u, -(i + 1)))
        paths = [[None] * nv for _ in range(nv)]
        for src in range(nv):
            paths[src][src] = []
            queue = [src]
            while queue:
                x = queue.pop(0)
                for (y, signed) in sorted(adj[x]):
                    if paths[src][y] is None:
                        paths[src][y] = paths[src][x] + [signed]
                        queue.append(y)
        maxlen = max((len(p) for row in paths for p in row), default=0)
        tp = np.zeros((nv, nv, max(maxlen, 1)), np.int16)
        tpl = np.zeros((nv, nv), np.int8)
        for u in range(nv):
            for v in range(nv):
                for j, s in enumerate(paths[u][v]):
                    tp[u, v, j] = s
                tpl[u, v] = len(paths[u][v])
        return tp, tpl

    def translated(self, phi: Automorphism) -> "Splitting":
        """The splitting with vertex groups phi(G_x) (the tree phi . T)."""
        from .automorphisms import compose

        return Splitting(self.basis, self.num_vertices, self.tree_edges,
                         self.loop_edges, self.vertex_gens,
                         compose(phi, self.psi))


def free_product_splitting(basis: Basis, left_gens: Sequence[int],
                           psi: Automorphism | None = None) -> Splitting:
    """Two-vertex one-edge splitting <left> * <rest>."""
    left = tuple(sorted(2 * g for g in left_gens))
    right = tuple(sorted(2 * g for g in range(basis.rank) if 2 * g not in left))
    if not left or not right:
        raise FormatError("both free factors must be nonempty")
    return Splitting(basis, 2, ((0, 1),), tuple(), (left, right),
                     psi or Automorphism.identity(basis))


def hnn_splitting(basis: Basis, loop_gen: int,
                  psi: Automorphism | None = None) -> Splitting:
    """One-vertex splitting with stable letter loop_gen over the rest."""
    gens = tuple(sorted(2 * g for g in range(basis.rank) if g != loop_gen))
    if not gens:
        raise FormatError("HNN vertex group would be trivial")
    return Splitting(basis, 1, tuple(), ((2 * loop_gen, 0, 0),), (gens,),
                     psi or Automorphism.identity(basis))


def bass_serre_length(s: Splitting, g: CyclicWord) -> int:
    """Edges per period of the reduced cyclic Y-path of [g]."""
    w = g if s.psi.is_identity() else apply(invert(s.psi), g)
    word = np.asarray(w.letters, np.int16)
    return _kernels.y_length(word, s.kernel_pack())


def l2_contains(tree, v: ReducedWord) -> bool:
    """Membership of v in the laminary language of the dual lamination.

    Free simplicial actions have empty dual lamination; for a splitting
    the language is the union of the vertex-group core languages (over all
    nontrivial vertex groups, cyclic ones included).
    """
    if not v.letters:
        raise FormatError("laminary languages contain nonempty words only")
    if isinstance(tree, MarkedMetricGraph):
        return False
    return any(readable_in_core(graph, v) for _, graph in tree.vertex_group_graphs())


def supp_subset_l2(tree, mu: RationalCurrent) -> bool:
    """Whether supp(mu) lies in the dual lamination of the tree.

    For each counting term the periodic word g^infinity must be readable
    in a single vertex-group core; a pigeonhole power decides that.
    """
    if mu.is_zero():
        return True
    if isinstance(tree, MarkedMetricGraph):
        return False
    graphs = tree.vertex_group_graphs()
    for _, g in mu.terms:
        if not any(conjugate_into(graph, g) for _, graph in graphs):
            return False
    return True


def intersection_number(tree, mu) -> Fraction:
    """Exact geometric intersection number for the supported chart pairs.

    (any tree, RationalCurrent): sum of weighted translation lengths.
    (rose in the table's own basis, FrequencyTable): the edge formula
    half sum of L(e) <e, mu>.  Other table pairings need realize_table
    first and raise UnsupportedChart.
    """
    if isinstance(mu, RationalCurrent):
        if isinstance(tree, MarkedMetricGraph):
            return sum((lam * translation_length(tree, g) for lam, g in mu.terms),
                       Fraction(0))
        return sum((lam * bass_serre_length(tree, g) for lam, g in mu.terms),
                   Fraction(0))
    if isinstance(mu, FrequencyTable):
        if isinstance(tree, MarkedMetricGraph) and tree.is_rose_chart():
            total = Fraction(0)
            lengths = tree._length_map()
            for x in tree.basis.letters:
                total += lengths[x // 2 + 1] * mu.weight((x,))
            return total / 2
        raise UnsupportedChart(
            "frequency tables pair exactly only against a rose in their "
            "own chart; realize the table first")
    raise UnsupportedChart(f"unsupported current type {type(mu).__name__}")


# ---------------------------------------------------------------------------
# bounded back-tracking diagnostics
# ---------------------------------------------------------------------------


def bbt_bounds(graph: MarkedMetricGraph, sample_len: int, seed: int,
               samples: int = 60) -> tuple[Fraction, Fraction]:
    """(lower, upper) bracket for the bounded back-tracking constant.

    upper: sum over generators of d(p, a p), the crude bounded
    cancellation bound.  lower: largest Gromov-product deviation
    (d(p,up) + d(p,vp) - d(p,uvp)) / 2 over sampled reduced products uv,
    the basepoint image's actual backtracking.
    """
    from .words import _sample_with_rng

    basis = graph.basis
    upper = sum((cover_distance(graph, ReducedWord(basis, (2 * i,)))
                 for i in range(basis.rank)), Fraction(0))
    pairs = []
    for x in basis.letters:
        for y in basis.letters:
            if y != (x ^ 1):
                pairs.append((ReducedWord(basis, (x,)), ReducedWord(basis, (y,))))
    rng = random.Random(seed)
    for _ in range(samples):
        u = _sample_with_rng(basis, max(sample_len, 1), rng)
        v = _sample_with_rng(basis, max(sample_len, 1), rng)
        if u.letters and v.letters and u.letters[-1] != (v.letters[0] ^ 1):
            pairs.append((u, v))
    lower = Fraction(0)
    for u, v in pairs:
        dev = (cover_distance(graph, u) + cover_distance(graph, v)
               - cover_distance(graph, u * v)) / 2
        lower = max(lower, dev)
    if lower > upper:
        raise AssertionError("backtracking bracket inverted; bound is wrong")
    return lower, upper
