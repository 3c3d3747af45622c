"""Exact word arithmetic in a finitely generated free group.

Letters are encoded as small integers: generator ``i`` is ``2*i`` and its
inverse is ``2*i + 1``, so inversion is ``x ^ 1`` and the natural integer
order realizes the canonical letter order a < A < b < B < ...  Text form
uses lowercase a-z for generators and uppercase for inverses, which caps
the rank at 26; the empty word is spelled "1".
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyPattern, FormatError, UnknownLetter

_LOWER = "abcdefghijklmnopqrstuvwxyz"


def inv_letter(letter: int) -> int:
    return letter ^ 1


@dataclass(frozen=True)
class Basis:
    """A free basis x_1..x_k; carries only the rank."""

    rank: int

    def __post_init__(self):
        if not 1 <= self.rank <= 26:
            raise FormatError(f"basis rank must be between 1 and 26, got {self.rank}")

    @property
    def num_letters(self) -> int:
        return 2 * self.rank

    @property
    def letters(self) -> range:
        return range(2 * self.rank)

    def letter_name(self, letter: int) -> str:
        gen, sign = divmod(letter, 2)
        if not 0 <= gen < self.rank:
            raise UnknownLetter(f"letter code {letter} outside basis of rank {self.rank}")
        ch = _LOWER[gen]
        return ch.upper() if sign else ch

    def parse_letter(self, ch: str) -> int:
        low = ch.lower()
        gen = _LOWER.find(low)
        if gen < 0 or gen >= self.rank:
            raise UnknownLetter(f"symbol {ch!r} outside basis of rank {self.rank}")
        return 2 * gen + (1 if ch.isupper() else 0)


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == (x ^ 1):
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True)
class ReducedWord:
    """A freely reduced word; the identity is the empty word."""

    basis: Basis
    letters: tuple[int, ...]

    def __post_init__(self):
        n = self.basis.num_letters
        for x in self.letters:
            if not 0 <= x < n:
                raise UnknownLetter(f"letter code {x} outside basis of rank {self.basis.rank}")
        for a, b in zip(self.letters, self.letters[1:]):
            if a == (b ^ 1):
                raise FormatError(f"word {self.letters} is not freely reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return "".join(self.basis.letter_name(x) for x in self.letters)

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return ReducedWord(self.basis, _reduce(self.letters + other.letters))

    def inverse(self) -> "ReducedWord":
        return ReducedWord(self.basis, tuple(x ^ 1 for x in reversed(self.letters)))

    def power(self, n: int) -> "ReducedWord":
        if n < 0:
            return self.inverse().power(-n)
        out = ReducedWord(self.basis, ())
        for _ in range(n):
            out = out * self
        return out

    def is_identity(self) -> bool:
        return not self.letters


def _least_rotation(letters: Sequence[int]) -> tuple[int, ...]:
    # Booth's algorithm, linear time
    n = len(letters)
    s = tuple(letters) + tuple(letters)
    f = [-1] * len(s)
    k = 0
    for j in range(1, len(s)):
        sj = s[j]
        i = f[j - k - 1]
        while i != -1 and sj != s[k + i + 1]:
            if sj < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if sj != s[k + i + 1]:
            if sj < s[k]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return s[k : k + n]


@dataclass(frozen=True)
class CyclicWord:
    """A nonempty cyclically reduced word, stored in its least rotation.

    Two cyclic words are equal iff one is a rotation of the other; the
    canonical rotation makes dataclass equality implement that.
    """

    basis: Basis
    letters: tuple[int, ...]

    def __post_init__(self):
        if not self.letters:
            raise FormatError("cyclic words are nonempty; the identity has no cyclic word")
        n = len(self.letters)
        for i, x in enumerate(self.letters):
            if not 0 <= x < self.basis.num_letters:
                raise UnknownLetter(f"letter code {x} outside basis of rank {self.basis.rank}")
            if x == (self.letters[(i + 1) % n] ^ 1):
                raise FormatError(f"word {self.letters} is not cyclically reduced")
        if self.letters != _least_rotation(self.letters):
            object.__setattr__(self, "letters", _least_rotation(self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(self.basis.letter_name(x) for x in self.letters)

    def inverse(self) -> "CyclicWord":
        return CyclicWord(self.basis, tuple(x ^ 1 for x in reversed(self.letters)))

    def to_word(self) -> ReducedWord:
        return ReducedWord(self.basis, self.letters)

    def rotations(self) -> list[tuple[int, ...]]:
        n = len(self.letters)
        doubled = self.letters + self.letters
        return [doubled[i : i + n] for i in range(n)]

    def primitive_root(self) -> tuple["CyclicWord", int]:
        """Return (f, d) with self = f^d and f not a proper power."""
        n = len(self.letters)
        for p in range(1, n + 1):
            if n % p:
                continue
            if self.letters == self.letters[:p] * (n // p):
                return CyclicWord(self.basis, self.letters[:p]), n // p
        raise AssertionError("unreachable: every word is its own power")

    def power(self, m: int) -> "CyclicWord":
        if m < 1:
            raise FormatError("cyclic word powers must be positive")
        return CyclicWord(self.basis, self.letters * m)


def free_reduce(basis: Basis, raw: Sequence[int] | str) -> ReducedWord:
    """Reduce an arbitrary letter sequence to its unique reduced form."""
    if isinstance(raw, str):
        raw = parse_letters(basis, raw)
    n = basis.num_letters
    for x in raw:
        if not 0 <= x < n:
            raise UnknownLetter(f"letter code {x} outside basis of rank {basis.rank}")
    return ReducedWord(basis, _reduce(raw))


def parse_letters(basis: Basis, text: str) -> list[int]:
    if text == "1":
        return []
    return [basis.parse_letter(ch) for ch in text]


def parse_word(basis: Basis, text: str) -> ReducedWord:
    """Parse text into a ReducedWord, reducing if necessary."""
    return free_reduce(basis, parse_letters(basis, text))


def parse_cyclic(basis: Basis, text: str) -> CyclicWord:
    """Parse text (any rotation, need not be reduced) into a CyclicWord."""
    w = parse_word(basis, text)
    c, _ = cyclic_reduce(w)
    if c is None:
        raise FormatError(f"{text!r} is trivial and has no cyclic word")
    return c


def cyclic_reduce(w: ReducedWord) -> tuple[CyclicWord | None, ReducedWord]:
    """Split w = u c u^{-1} with c cyclically reduced.

    Returns (c, u); c is None when w is the identity.
    """
    letters = w.letters
    i, j = 0, len(letters)
    while j - i >= 2 and letters[i] == (letters[j - 1] ^ 1):
        i += 1
        j -= 1
    core = letters[i:j]
    conj = ReducedWord(w.basis, letters[:i])
    if not core:
        return None, conj
    return CyclicWord(w.basis, core), conj


def occurrences(v: ReducedWord, w: CyclicWord) -> int:
    """Number of starting vertices of the circle of w from which v is read.

    The read goes clockwise and may wrap around the circle several times,
    so occurrences("aa", "a") == 1.
    """
    if not v.letters:
        raise EmptyPattern("occurrence counting needs a nonempty pattern")
    n = len(w.letters)
    m = len(v.letters)
    count = 0
    for s in range(n):
        if all(w.letters[(s + j) % n] == v.letters[j] for j in range(m)):
            count += 1
    return count


def sample_reduced_word(basis: Basis, n: int, seed: int) -> ReducedWord:
    """Draw a reduced word of length n from the uniform cylinder measure.

    First letter uniform over the 2k letters, every following letter
    uniform over the 2k-1 letters that do not cancel. Deterministic for a
    fixed seed.
    """
    if n < 0:
        raise FormatError("length must be nonnegative")
    rng = random.Random(seed)
    return _sample_with_rng(basis, n, rng)


def _sample_with_rng(basis: Basis, n: int, rng: random.Random) -> ReducedWord:
    nl = basis.num_letters
    out: list[int] = []
    for _ in range(n):
        if not out:
            out.append(rng.randrange(nl))
        else:
            forbidden = out[-1] ^ 1
            x = rng.randrange(nl - 1)
            out.append(x + 1 if x >= forbidden else x)
    return ReducedWord(basis, tuple(out))


def enumerate_cyclic_words(basis: Basis, max_len: int) -> Iterable[CyclicWord]:
    """All cyclic words of length 1..max_len, one per conjugacy class."""
    from . import _kernels

    for n in range(1, max_len + 1):
        for row in _kernels.necklaces(n, basis.rank):
            yield CyclicWord(basis, tuple(int(x) for x in row))
