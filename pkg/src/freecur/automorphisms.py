"""Automorphisms of a free group as certified basis-image assignments.

Construction folds the images into a Stallings graph and accepts the tuple
only if it spans the full rose, which for a tuple of size rank certifies a
basis.  The inverse is recovered by greedy Nielsen reduction of the image
tuple (total-image-length descent with lexicographic tie-breaking, plus a
bounded plateau search for the rare stalls), replaying the moves on the
identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NotAnAutomorphism, ResourceLimit, SearchBoundExceeded
from .words import (Basis, CyclicWord, ReducedWord, cyclic_reduce, free_reduce,
                    inv_letter)

_PLATEAU_CAP = 100_000


def _image_of_letter(images: Sequence[ReducedWord], letter: int) -> tuple[int, ...]:
    w = images[letter // 2]
    if letter & 1:
        return tuple(x ^ 1 for x in reversed(w.letters))
    return w.letters


def _substitute(basis: Basis, images: Sequence[ReducedWord], letters: Iterable[int]) -> ReducedWord:
    out: list[int] = []
    for l in letters:
        for x in _image_of_letter(images, l):
            if out and out[-1] == (x ^ 1):
                out.pop()
            else:
                out.append(x)
    return ReducedWord(basis, tuple(out))


@dataclass(frozen=True)
class Automorphism:
    basis: Basis
    images: tuple[ReducedWord, ...]
    inverse_images: tuple[ReducedWord, ...] = field(compare=False, repr=False)

    @staticmethod
    def from_images(basis: Basis, images: Sequence[ReducedWord]) -> "Automorphism":
        if len(images) != basis.rank:
            raise NotAnAutomorphism(
                f"need {basis.rank} images, got {len(images)}")
        _certify_basis(basis, images)
        inverse = _nielsen_inverse(basis, images)
        phi = Automorphism(basis, tuple(images), tuple(inverse))
        for i in range(basis.rank):
            check = _substitute(basis, inverse, images[i].letters)
            if check.letters != (2 * i,):
                raise NotAnAutomorphism("inverse verification failed")
        return phi

    @staticmethod
    def identity(basis: Basis) -> "Automorphism":
        ims = tuple(ReducedWord(basis, (2 * i,)) for i in range(basis.rank))
        return Automorphism(basis, ims, ims)

    def __call__(self, w):
        return apply(self, w)

    def is_identity(self) -> bool:
        return all(im.letters == (2 * i,) for i, im in enumerate(self.images))

    def key(self) -> tuple:
        return tuple(im.letters for im in self.images)


def apply(phi: Automorphism, w):
    """Apply phi to a ReducedWord or CyclicWord (result is the same kind)."""
    if isinstance(w, CyclicWord):
        image = _substitute(phi.basis, phi.images, w.letters)
        c, _ = cyclic_reduce(image)
        if c is None:
            raise NotAnAutomorphism("automorphism killed a nontrivial class")
        return c
    return _substitute(phi.basis, phi.images, w.letters)


def compose(phi: Automorphism, psi: Automorphism) -> Automorphism:
    """phi after psi: compose(phi, psi)(w) = phi(psi(w))."""
    images = tuple(_substitute(phi.basis, phi.images, im.letters) for im in psi.images)
    inverse = tuple(_substitute(phi.basis, psi.inverse_images, im.letters)
                    for im in phi.inverse_images)
    return Automorphism(phi.basis, images, inverse)


def invert(phi: Automorphism) -> Automorphism:
    return Automorphism(phi.basis, phi.inverse_images, phi.images)


def _certify_basis(basis: Basis, images: Sequence[ReducedWord]) -> None:
    from .stallings import fold

    for im in images:
        if im.is_identity():
            raise NotAnAutomorphism("an image is trivial")
    graph = fold(list(images))
    if graph.num_vertices != 1 or len(graph.transitions(0)) != basis.num_letters:
        raise NotAnAutomorphism(
            "images do not generate the free group (folded graph is not the rose)")


def _nielsen_inverse(basis: Basis, images: Sequence[ReducedWord]) -> tuple[ReducedWord, ...]:
    """Inverse image tuple via Nielsen reduction bookkeeping."""
    k = basis.rank
    work = [im for im in images]
    moves: list[tuple[int, int, int, int]] = []  # (i, j, side, sign)

    def total(ws):
        return sum(len(w) for w in ws)

    def neighbors(ws):
        # all elementary Nielsen moves, deterministically ordered
        for i, j, side, sign in itertools.product(range(k), range(k), (0, 1), (1, -1)):
            if i == j:
                continue
            other = ws[j] if sign == 1 else ws[j].inverse()
            cand = ws[i] * other if side == 0 else other * ws[i]
            yield (i, j, side, sign), cand

    while True:
        cur_total = total(work)
        best = None
        for move, cand in neighbors(work):
            delta = len(cand) - len(work[move[0]])
            if delta < 0 and (best is None or delta < best[0]):
                best = (delta, move, cand)
        if best is not None:
            _, move, cand = best
            work[move[0]] = cand
            moves.append(move)
            continue
        if all(len(w) == 1 for w in work):
            break
        # plateau: breadth-first over length-preserving moves
        seen = {tuple(w.letters for w in work)}
        frontier = [(list(work), [])]
        found = None
        while frontier and found is None:
            if len(seen) > _PLATEAU_CAP:
                raise ResourceLimit("Nielsen plateau search exceeded cap")
            nxt = []
            for state, path in frontier:
                for move, cand in neighbors(state):
                    delta = len(cand) - len(state[move[0]])
                    if delta > 0:
                        continue
                    new_state = list(state)
                    new_state[move[0]] = cand
                    key = tuple(w.letters for w in new_state)
                    if delta < 0:
                        found = (new_state, path + [move])
                        break
                    if key in seen:
                        continue
                    seen.add(key)
                    nxt.append((new_state, path + [move]))
                if found:
                    break
            frontier = nxt
        if found is None:
            raise NotAnAutomorphism("Nielsen reduction stalled above a basis")
        work, extra = found
        moves.extend(extra)

    # work is now a signed permutation: work[i] = x_{sigma(i)}^{eps_i}
    letters = [w.letters[0] for w in work]
    if sorted(l // 2 for l in letters) != list(range(k)):
        raise NotAnAutomorphism("images Nielsen-reduce to a proper subset")
    # psi = pi^{-1}: send x_{sigma(i)} to x_i^{eps_i}
    psi = [None] * k
    for i, l in enumerate(letters):
        gen, sign = l // 2, l & 1
        psi[gen] = ReducedWord(basis, (2 * i + sign,))
    # replay: phi^{-1} = rho_1 ... rho_t pi^{-1}
    for i, j, side, sign in reversed(moves):
        # rho: x_i -> x_i x_j^sign (side 0) or x_j^sign x_i (side 1)
        rho = [ReducedWord(basis, (2 * m,)) for m in range(k)]
        xj = ReducedWord(basis, (2 * j + (0 if sign == 1 else 1),))
        rho[i] = rho[i] * xj if side == 0 else xj * rho[i]
        psi = [_substitute(basis, rho, w.letters) for w in psi]
    return tuple(psi)


def parse_automorphism(basis: Basis, text: str) -> Automorphism:
    """Parse "a=ab; b=b" or newline-separated assignment lines."""
    from .errors import FormatError
    from .words import parse_word

    parts = [p.strip() for chunk in text.splitlines() for p in chunk.split(";")]
    parts = [p for p in parts if p]
    images: dict[int, ReducedWord] = {}
    for part in parts:
        if "=" not in part:
            raise FormatError(f"bad automorphism line {part!r}")
        lhs, rhs = (s.strip() for s in part.split("=", 1))
        if len(lhs) != 1 or lhs.isupper():
            raise FormatError(f"left side must be a single generator, got {lhs!r}")
        gen = basis.parse_letter(lhs) // 2
        if gen in images:
            raise FormatError(f"generator {lhs!r} assigned twice")
        images[gen] = parse_word(basis, rhs)
    if sorted(images) != list(range(basis.rank)):
        raise FormatError("every generator needs exactly one image line")
    return Automorphism.from_images(basis, [images[i] for i in range(basis.rank)])


def format_automorphism(phi: Automorphism) -> str:
    names = [phi.basis.letter_name(2 * i) for i in range(phi.basis.rank)]
    return "; ".join(f"{n}={im}" for n, im in zip(names, phi.images))


# ---------------------------------------------------------------------------
# outer classes
# ---------------------------------------------------------------------------


def _conjugate_tuple(basis: Basis, images, letter: int):
    out = []
    for w in images:
        out.append(free_reduce(basis, (letter,) + w.letters + (letter ^ 1,)))
    return tuple(out)


def _tuple_cost(images) -> int:
    return sum(len(w) for w in images)


@dataclass(frozen=True, order=True)
class OuterKey:
    """Canonical form of an outer class: the lexicographically least image
    tuple over the whole conjugation-minimal plateau.

    Total conjugation length is a convex function on the Cayley tree, so
    steepest descent plus a plateau flood fill reaches the full minimum
    set; minimizing over it is conjugation-invariant.
    """

    value: tuple


def outer_key(phi: Automorphism) -> OuterKey:
    basis = phi.basis
    cur = phi.images
    cost = _tuple_cost(cur)
    while True:
        # flood-fill the equal-cost plateau, descending when possible
        seen = {tuple(w.letters for w in cur)}
        frontier = [cur]
        plateau = [cur]
        lower = None
        while frontier and lower is None:
            if len(seen) > _PLATEAU_CAP:
                raise ResourceLimit("outer-key plateau exceeded cap")
            nxt = []
            for state in frontier:
                for letter in basis.letters:
                    cand = _conjugate_tuple(basis, state, letter)
                    c = _tuple_cost(cand)
                    if c < cost:
                        lower = cand
                        break
                    if c == cost:
                        key = tuple(w.letters for w in cand)
                        if key not in seen:
                            seen.add(key)
                            nxt.append(cand)
                            plateau.append(cand)
                if lower is not None:
                    break
            frontier = nxt
        if lower is None:
            best = min(plateau, key=lambda t: tuple(w.letters for w in t))
            return OuterKey(tuple(w.letters for w in best))
        cur = lower
        cost = _tuple_cost(cur)


def is_inner(phi: Automorphism) -> bool:
    """Exact test whether phi is an inner automorphism."""
    basis = phi.basis
    k = basis.rank
    if k == 1:
        return phi.images[0].letters == (0,)
    w1 = phi.images[0]
    c, u = cyclic_reduce(w1)
    if c is None or c.letters != (0,):
        return False
    x1 = ReducedWord(basis, (0,))
    max_t = max(len(im) for im in phi.images) + len(u) + 2
    for t in range(-max_t, max_t + 1):
        cand = u * x1.power(t)
        if all(cand * ReducedWord(basis, (2 * i,)) * cand.inverse() == phi.images[i]
               for i in range(k)):
            return True
    return False


# ---------------------------------------------------------------------------
# Whitehead generators and the outer ball
# ---------------------------------------------------------------------------


def whitehead_generators(basis: Basis) -> tuple[Automorphism, ...]:
    """Signed basis permutations plus the length-<=2 Whitehead multipliers.

    The set contains the identity, is closed under inversion, and every
    image has length at most 2.
    """
    k = basis.rank
    out: dict[tuple, Automorphism] = {}

    def add(images):
        phi = Automorphism.from_images(basis, images)
        out.setdefault(phi.key(), phi)

    for perm in itertools.permutations(range(k)):
        for signs in itertools.product((0, 1), repeat=k):
            add([ReducedWord(basis, (2 * perm[i] + signs[i],)) for i in range(k)])

    for mult in basis.letters:
        gen_m = mult // 2
        others = [g for g in range(k) if g != gen_m]
        for choice in itertools.product((0, 1, 2), repeat=len(others)):
            if all(c == 0 for c in choice):
                continue
            images = [ReducedWord(basis, (2 * g,)) for g in range(k)]
            for g, c in zip(others, choice):
                x = (2 * g,)
                if c == 1:  # x -> x * mult
                    images[g] = ReducedWord(basis, x + (mult,))
                else:  # x -> mult^{-1} * x
                    images[g] = ReducedWord(basis, (mult ^ 1,) + x)
            add(images)

    return tuple(out[key] for key in sorted(out))


def outer_ball(basis: Basis, radius: int,
               generators: Sequence[Automorphism] | None = None,
               cap: int = 100_000) -> list[tuple[OuterKey, Automorphism]]:
    """Outer classes of products of at most ``radius`` Whitehead generators.

    Deterministic: output sorted by key. Radius 0 is exactly the identity
    class.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    gens = tuple(generators) if generators is not None else whitehead_generators(basis)
    ident = Automorphism.identity(basis)
    classes: dict[OuterKey, Automorphism] = {outer_key(ident): ident}
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for rep in frontier:
            for g in gens:
                cand = compose(g, rep)
                key = outer_key(cand)
                if key not in classes:
                    if len(classes) >= cap:
                        raise ResourceLimit(f"outer ball exceeded cap {cap}")
                    classes[key] = cand
                    nxt.append(cand)
        frontier = nxt
    return [(key, classes[key]) for key in sorted(classes)]


# ---------------------------------------------------------------------------
# cancellation constants
# ---------------------------------------------------------------------------


def _all_reduced_words(basis: Basis, max_len: int) -> list[ReducedWord]:
    words: list[ReducedWord] = []
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in basis.letters:
                if w and w[-1] == (x ^ 1):
                    continue
                nxt.append(w + (x,))
        words.extend(ReducedWord(basis, w) for w in nxt)
        layer = nxt
    return words


def _cancellation(x: tuple[int, ...], y: tuple[int, ...]) -> int:
    t = 0
    m = min(len(x), len(y))
    while t < m and x[-1 - t] == (y[t] ^ 1):
        t += 1
    return t


def bounded_cancellation(phi: Automorphism, max_words: int = 60_000) -> int:
    """Largest terminal cancellation in phi(u) * phi(v) over reduced uv.

    Pairs are exhausted to the saturation length 2 * max image length; the
    cancelled suffix of phi(u) only sees that much context.
    """
    basis = phi.basis
    C = max(len(im) for im in phi.images)
    sat = 2 * C
    words = _all_reduced_words(basis, sat)
    if len(words) > max_words:
        raise SearchBoundExceeded(
            f"bcc saturation needs {len(words)} words > cap {max_words}",
            lower_bound=None)
    images = [apply(phi, w).letters for w in words]
    best = 0
    for i, u in enumerate(words):
        ulast = u.letters[-1]
        for j, v in enumerate(words):
            if v.letters[0] == (ulast ^ 1):
                continue
            c = _cancellation(images[i], images[j])
            if c > best:
                best = c
    return best


def cancellation_constants(phi: Automorphism, n_max: int = 64):
    """(Lipschitz C, bounded cancellation, double bounded cancellation).

    C = max image length. bcc is exact by pair saturation. The double
    constant is the least n certified by the locality argument
    n = bcc * C' + 2 * bcc', where primes refer to the inverse
    automorphism: outer cancellation trims at most bcc letters from each
    end of phi(w), pulling back and re-trimming affects at most that many
    letters of w on each side.
    """
    C = max(len(im) for im in phi.images)
    l = bounded_cancellation(phi)
    inv = invert(phi)
    C_inv = max(len(im) for im in inv.images)
    l_inv = bounded_cancellation(inv)
    n = max(1, l * C_inv + 2 * l_inv)
    if n > n_max:
        raise SearchBoundExceeded(
            f"double bcc certificate {n} exceeds bound {n_max}", lower_bound=l)
    return C, l, n
