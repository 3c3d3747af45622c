"""Geodesic currents as exact-rational frequency tables in the rose chart.

A depth-L table stores cylinder weights <v, mu> for reduced words v with
1 <= |v| <= L.  Counting currents come from occurrence counts on cyclic
words, the uniform current from the cylinder formula 1/(2k(2k-1)^(n-1)).
Everything here is exact Fraction arithmetic except the Monte Carlo
oracle for the stretching factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .automorphisms import Automorphism, apply
from .errors import InvalidTable, NotRealizable, OutsideSupport
from .stallings import (StallingsGraph, SubgroupChart, axis_cycles,
                        conjugate_into, path_to_subgroup_word, subgroup_chart)
from .words import Basis, CyclicWord, ReducedWord


def _inv(word: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x ^ 1 for x in reversed(word))


@dataclass(frozen=True)
class FrequencyTable:
    basis: Basis
    depth: int
    weights: dict  # word tuple -> Fraction, zero entries omitted

    def weight(self, v) -> Fraction:
        key = v.letters if isinstance(v, ReducedWord) else tuple(v)
        return self.weights.get(key, Fraction(0))

    def words_at(self, n: int) -> list[tuple[int, ...]]:
        return sorted(w for w in self.weights if len(w) == n)

    def depth1_mass(self) -> Fraction:
        return sum((w for v, w in self.weights.items() if len(v) == 1),
                   Fraction(0))

    def scale(self, c: Fraction) -> "FrequencyTable":
        c = Fraction(c)
        return FrequencyTable(self.basis, self.depth,
                              {v: w * c for v, w in self.weights.items() if w * c != 0})

    def sup_distance(self, other: "FrequencyTable") -> Fraction:
        keys = set(self.weights) | set(other.weights)
        return max((abs(self.weights.get(k, Fraction(0))
                        - other.weights.get(k, Fraction(0))) for k in keys),
                   default=Fraction(0))


@dataclass(frozen=True)
class RationalCurrent:
    """Finite nonnegative combination of counting currents."""

    basis: Basis
    terms: tuple  # ((Fraction, CyclicWord), ...) sorted, coefficients > 0

    @staticmethod
    def from_terms(basis: Basis, terms: Iterable[tuple[Fraction, CyclicWord]]):
        acc: dict[CyclicWord, Fraction] = {}
        for lam, g in terms:
            lam = Fraction(lam)
            if lam < 0:
                raise InvalidTable("rational currents have nonnegative coefficients")
            if lam:
                acc[g] = acc.get(g, Fraction(0)) + lam
        ordered = tuple(sorted(((lam, g) for g, lam in acc.items() if lam),
                               key=lambda t: (len(t[1].letters), t[1].letters)))
        return RationalCurrent(basis, ordered)

    @staticmethod
    def counting(g: CyclicWord):
        return RationalCurrent.from_terms(g.basis, [(Fraction(1), g)])

    def is_zero(self) -> bool:
        return not self.terms

    def scale(self, c) -> "RationalCurrent":
        return RationalCurrent.from_terms(
            self.basis, [(lam * Fraction(c), g) for lam, g in self.terms])

    def __add__(self, other: "RationalCurrent") -> "RationalCurrent":
        return RationalCurrent.from_terms(self.basis, self.terms + other.terms)

    def map(self, phi: Automorphism) -> "RationalCurrent":
        """Pushforward: counting currents go to counting currents."""
        return RationalCurrent.from_terms(
            self.basis, [(lam, apply(phi, g)) for lam, g in self.terms])

    def table(self, depth: int) -> FrequencyTable:
        acc: dict[tuple, Fraction] = {}
        for lam, g in self.terms:
            t = counting_table(g, depth)
            for v, w in t.weights.items():
                acc[v] = acc.get(v, Fraction(0)) + lam * w
        return FrequencyTable(self.basis, depth,
                              {v: w for v, w in acc.items() if w})


def counting_table(g: CyclicWord, depth: int) -> FrequencyTable:
    """<v, eta_g> = occurrences(v, g) + occurrences(v^-1, g), |v| <= depth."""
    if depth < 1:
        raise InvalidTable("depth must be at least 1")
    n = len(g.letters)
    doubled = g.letters + g.letters * (depth // n + 1)
    raw: dict[tuple, int] = {}
    for m in range(1, depth + 1):
        for s in range(n):
            v = doubled[s : s + m]
            raw[v] = raw.get(v, 0) + 1
    weights: dict[tuple, Fraction] = {}
    for v, c in raw.items():
        weights[v] = Fraction(c + raw.get(_inv(v), 0))
    for v in list(weights):
        weights.setdefault(_inv(v), weights[v])
    return FrequencyTable(g.basis, depth, weights)


def _reduced_words(basis: Basis, length: int) -> list[tuple[int, ...]]:
    layer: list[tuple[int, ...]] = [()]
    for _ in range(length):
        layer = [w + (x,) for w in layer for x in basis.letters
                 if not w or w[-1] != (x ^ 1)]
    return layer


def uniform_table(basis: Basis, depth: int) -> FrequencyTable:
    """Cylinder weights 1/(2k(2k-1)^(n-1)) at every reduced word."""
    if depth < 1:
        raise InvalidTable("depth must be at least 1")
    k2 = basis.num_letters
    weights: dict[tuple, Fraction] = {}
    for n in range(1, depth + 1):
        w = Fraction(1, k2 * (k2 - 1) ** (n - 1))
        for v in _reduced_words(basis, n):
            weights[v] = w
    return FrequencyTable(basis, depth, weights)


@dataclass(frozen=True)
class ValidationReport:
    flip_violations: tuple
    right_violations: tuple
    left_violations: tuple
    negative_entries: tuple

    @property
    def ok(self) -> bool:
        return not (self.flip_violations or self.right_violations
                    or self.left_violations or self.negative_entries)

    def describe(self) -> str:
        if self.ok:
            return "valid"
        parts = []
        for name, items in (("flip", self.flip_violations),
                            ("right-consistency", self.right_violations),
                            ("left-consistency", self.left_violations),
                            ("negativity", self.negative_entries)):
            parts.extend(f"{name}: {item}" for item in items)
        return "; ".join(parts)


def validate(t: FrequencyTable) -> ValidationReport:
    """Check flip-invariance, one-step consistency and nonnegativity."""
    basis = t.basis
    flips, rights, lefts, negs = [], [], [], []
    for v, w in sorted(t.weights.items()):
        if w < 0:
            negs.append((v, w))
        if t.weights.get(_inv(v), Fraction(0)) != w:
            flips.append((v, w, t.weights.get(_inv(v), Fraction(0))))
    seen = set(t.weights)
    for n in range(1, t.depth):
        words = {v for v in seen if len(v) == n}
        # a zero-weight parent with weighted children is also inconsistent
        words.update(v[:-1] for v in seen if len(v) == n + 1)
        words.update(v[1:] for v in seen if len(v) == n + 1)
        for v in sorted(words):
            w = t.weights.get(v, Fraction(0))
            right = sum((t.weights.get(v + (x,), Fraction(0))
                         for x in basis.letters if x != (v[-1] ^ 1)), Fraction(0))
            left = sum((t.weights.get((x,) + v, Fraction(0))
                        for x in basis.letters if (x ^ 1) != v[0]), Fraction(0))
            if right != w:
                rights.append((v, w, right))
            if left != w:
                lefts.append((v, w, left))
    return ValidationReport(tuple(flips), tuple(rights), tuple(lefts), tuple(negs))


def support_at_depth(t: FrequencyTable) -> set[ReducedWord]:
    """{v : <v, t> > 0}; factor-closed for valid tables."""
    report = validate(t)
    if not report.ok:
        raise InvalidTable(report.describe())
    return {ReducedWord(t.basis, v) for v, w in t.weights.items() if w > 0}


# ---------------------------------------------------------------------------
# Eulerian realization
# ---------------------------------------------------------------------------


def realize_table(t: FrequencyTable) -> CyclicWord:
    """A cyclic word whose depth-L statistics are proportional to t.

    Clears denominators, lays the depth-L words out as a de Bruijn style
    transition multigraph on (L-1)-prefixes and returns the label of an
    Eulerian circuit.  If the support splits into a component pair swapped
    by inversion, one side is used (exact factor 1); a single flip-closed
    component is traversed whole (factor 2).
    """
    report = validate(t)
    if not report.ok:
        raise InvalidTable(report.describe())
    top = {v: w for v, w in t.weights.items() if len(v) == t.depth and w > 0}
    if not top:
        raise NotRealizable("table has empty depth-%d support" % t.depth, ())
    denom = math.lcm(*(w.denominator for w in top.values()))
    counts = {v: int(w * denom) for v, w in top.items()}
    g = math.gcd(*counts.values())
    counts = {v: c // g for v, c in counts.items()}

    if t.depth == 1:
        letters: list[int] = []
        for gen in range(t.basis.rank):
            c = counts.get((2 * gen,), 0)
            letters.extend([2 * gen] * (2 * c))
        word = CyclicWord(t.basis, tuple(letters))
        return _check_realization(t, word, Fraction(2 * denom, g))

    nodes: set[tuple] = set()
    adj: dict[tuple, list] = {}
    for v, c in sorted(counts.items()):
        a, b = v[:-1], v[1:]
        nodes.update((a, b))
        adj.setdefault(a, []).extend([(b, v)] * c)
    comps = _components(nodes, counts)
    if len(comps) == 1:
        chosen = comps[0]
    elif len(comps) == 2 and {_inv(u) for u in comps[0]} == comps[1]:
        chosen = comps[0] if min(comps[0]) < min(comps[1]) else comps[1]
    else:
        raise NotRealizable(
            "support multigraph splits into %d components" % len(comps),
            tuple(tuple(sorted(c)) for c in comps))
    circuit = _euler_circuit(
        {a: sorted(targets) for a, targets in adj.items() if a in chosen})
    letters = tuple(v[-1] for (_, v) in circuit)
    word = CyclicWord(t.basis, letters)
    factor = Fraction((2 if len(comps) == 1 else 1) * denom, g)
    return _check_realization(t, word, factor)


def _check_realization(t: FrequencyTable, word: CyclicWord,
                       factor: Fraction) -> CyclicWord:
    realized = counting_table(word, t.depth)
    if realized.weights != t.scale(factor).weights:
        raise AssertionError("realization failed to reproduce the table")
    return word


def _components(nodes: set, counts: dict) -> list[set]:
    neigh: dict[tuple, set] = {n: set() for n in nodes}
    for v in counts:
        a, b = v[:-1], v[1:]
        neigh[a].add(b)
        neigh[b].add(a)
    comps = []
    left = set(nodes)
    while left:
        start = min(left)
        comp = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in neigh[x]:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        left -= comp
        comps.append(comp)
    comps.sort(key=min)
    return comps


def _euler_circuit(adj: dict) -> list:
    """Hierholzer on a directed multigraph given as node -> [(target, tag)]."""
    iters = {n: list(reversed(lst)) for n, lst in adj.items()}
    start = min(adj)
    stack = [(start, None)]
    circuit = []
    while stack:
        node, via = stack[-1]
        if iters.get(node):
            tgt, tag = iters[node].pop()
            stack.append((tgt, (node, tag)))
        else:
            stack.pop()
            if via is not None:
                circuit.append((via[0], via[1]))
    circuit.reverse()
    if any(iters[n] for n in iters):
        raise NotRealizable("support multigraph is not connected", ())
    return circuit


# ---------------------------------------------------------------------------
# restriction to a subgroup
# ---------------------------------------------------------------------------


def restrict(mu: RationalCurrent, graph: StallingsGraph
             ) -> tuple[RationalCurrent, SubgroupChart]:
    """Restriction mu|_H as a rational current in H's Stallings chart.

    Every counting term eta_g with g = f^d contributes d * eta_h for each
    closed core path h tracing a rotation of a power of f (one per
    H-conjugacy class of elements of H with axis over the axis of f).
    Terms whose support leaves i_Lambda(boundary^2 H) are rejected.
    """
    outside = [g for _, g in mu.terms if not conjugate_into(graph, g)]
    if outside:
        raise OutsideSupport("terms not supported on the subgroup",
                             terms=tuple(str(g) for g in outside))
    chart = subgroup_chart(graph)
    acc: list[tuple[Fraction, CyclicWord]] = []
    for lam, g in mu.terms:
        f, d = g.primitive_root()
        for cyc in axis_cycles(graph, f):
            v0, r0 = cyc.start
            letters = [f.letters[(r0 + j) % len(f.letters)]
                       for j in range(cyc.power * len(f.letters))]
            h_word = path_to_subgroup_word(chart, v0, letters)
            acc.append((lam * d, h_word))
    return RationalCurrent.from_terms(chart.basis, acc), chart


# ---------------------------------------------------------------------------
# generic stretching factor
# ---------------------------------------------------------------------------


def stretching_factor(phi: Automorphism) -> Fraction:
    """lambda_A(phi) = <X(F,A), phi nu_A> / <X(F,A), nu_A>, in closed form.

    First-order formula: mean image length minus twice the expected
    junction cancellation over uniformly random reduced two-letter
    junctions.  Validated against the Monte Carlo oracle (see
    monte_carlo_stretch and the acceptance suite) before being trusted.
    """
    basis = phi.basis
    k2 = basis.num_letters
    images = {x: _letter_image(phi, x) for x in basis.letters}
    total = sum(len(images[x]) for x in basis.letters)
    cancel = 0
    for x in basis.letters:
        for y in basis.letters:
            if y == (x ^ 1):
                continue
            cancel += _cancellation(images[x], images[y])
    return Fraction(total, k2) - Fraction(2 * cancel, k2 * (k2 - 1))


def _letter_image(phi: Automorphism, letter: int) -> tuple[int, ...]:
    im = phi.images[letter // 2].letters
    return tuple(x ^ 1 for x in reversed(im)) if letter & 1 else im


def _cancellation(x: tuple, y: tuple) -> int:
    t = 0
    m = min(len(x), len(y))
    while t < m and x[-1 - t] == (y[t] ^ 1):
        t += 1
    return t


def monte_carlo_stretch(phi: Automorphism, n: int, seed: int) -> float:
    """Oracle |phi(w_n)| / n over a seeded random reduced word."""
    from .words import sample_reduced_word

    w = sample_reduced_word(phi.basis, n, seed)
    img_flat, img_off = _image_pack(phi)
    word = np.asarray(w.letters, np.int16)
    return float(_kernels.image_length(word, img_flat, img_off)) / n


def _image_pack(phi: Automorphism):
    flat: list[int] = []
    off = [0]
    for letter in phi.basis.letters:
        flat.extend(_letter_image(phi, letter))
        off.append(len(flat))
    return np.asarray(flat, np.int16), np.asarray(off, np.int32)
