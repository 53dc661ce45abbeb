"""Forbidden words of the norm sequence and CRT localization of words.

Every run of ``2**(n+1)`` consecutive integers contains a multiple of
``2**(n+1)``, so no window of that length has all norms ``<= n``.  Those
windows form the forbidden family ``F_n``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .signature import NormSegment, factor_signature, norm_inf


def parse_word(text: str | Sequence[int]) -> tuple[int, ...]:
    """``'1111'`` (one digit per letter) or ``'17,30'`` (comma separated)."""
    if isinstance(text, str):
        parts = text.split(",") if "," in text else list(text)
        letters = tuple(int(p) for p in parts if p.strip())
    else:
        letters = tuple(int(x) for x in text)
    if not letters or min(letters) < 1:
        raise DomainError(f"not a valid word: {text!r}")
    return letters


def is_forbidden(word: Sequence[int]) -> bool:
    """True iff ``len(word) == 2**(n+1)`` and every letter is ``<= n``, some n >= 1."""
    length = len(word)
    if length < 4 or length & (length - 1):
        return False
    n = length.bit_length() - 2
    return max(word) <= n


def contains_forbidden(word: Sequence[int]) -> bool:
    """True iff some contiguous subword of ``word`` is forbidden."""
    return bool(find_forbidden(np.asarray(word), n_max=max(1, len(word).bit_length() - 2)))


@dataclass(frozen=True)
class Violation:
    family: int  # n of F_n
    start: int  # position of the first letter
    length: int


def find_forbidden(letters: np.ndarray, n_max: int, origin: int = 0) -> list[Violation]:
    """All windows of length ``2**(n+1)`` with every letter ``<= n``, ``n <= n_max``."""
    letters = np.asarray(letters)
    out = []
    for n in range(1, n_max + 1):
        length = 1 << (n + 1)
        if length > letters.size:
            break
        breakers = np.concatenate(([0], np.cumsum(letters > n)))
        hits = np.flatnonzero(breakers[length:] == breakers[:-length])
        out.extend(Violation(n, origin + int(i), length) for i in hits)
    return out


def scan_forbidden(segment: NormSegment | np.ndarray, n_max: int = 5) -> list[Violation]:
    """Forbidden windows in a segment of norms; positions are the integers.

    On genuine norm data the result is always empty.
    """
    if isinstance(segment, NormSegment):
        return find_forbidden(segment.norms, n_max, origin=segment.lo)
    return find_forbidden(np.asarray(segment), n_max)


# ---------------------------------------------------------------------------
# Chinese remainder localization


def crt(residues: Iterable[int], moduli: Iterable[int]) -> tuple[int, int]:
    """Solve ``x = r_i (mod m_i)`` for pairwise coprime moduli; ``0 <= x < M``."""
    x, m = 0, 1
    for r, mi in zip(residues, moduli):
        if math.gcd(m, mi) != 1:
            raise DomainError("moduli are not pairwise coprime")
        # x + m*t = r (mod mi)
        t = (r - x) * pow(m, -1, mi) % mi
        x += m * t
        m *= mi
    return x % m, m


def _check_primes(word: Sequence[int], primes: Sequence[int]) -> None:
    if len(word) != len(primes):
        raise DomainError("need exactly one prime per letter")
    if len(set(primes)) != len(primes):
        raise DomainError("primes must be pairwise distinct")
    for p in primes:
        if p < 2 or factor_signature(p).entries != ((p, 1),):
            raise DomainError(f"{p} is not prime")


def crt_locate(word: Sequence[int], primes: Sequence[int]) -> tuple[int, int]:
    """The unique ``1 <= x <= M`` with ``p_i**w_i | x + i - 1`` for every i.

    ``M = prod p_i**w_i``.  Every ``x + kM`` has ``||x + kM + i - 1||_inf >= w_i``.
    """
    word = parse_word(word)
    _check_primes(word, primes)
    moduli = [p**w for p, w in zip(primes, word)]
    x, m = crt([-i for i in range(len(word))], moduli)
    return (x if x else m), m


def congruences_hold(location: int, word: Sequence[int], primes: Sequence[int]) -> bool:
    return all((location + i) % p**w == 0 for i, (p, w) in enumerate(zip(primes, word)))


def word_norms(location: int, length: int, time_budget: float | None = None) -> list[int]:
    """``||location + i||_inf`` for ``i < length`` by full factorization."""
    return [norm_inf(factor_signature(location + i, time_budget)) for i in range(length)]


def _matches(location: int, word, primes, time_budget) -> bool:
    # cheap rejection: a prime already known to divide must not divide once more
    for i, (p, w) in enumerate(zip(primes, word)):
        if (location + i) % p ** (w + 1) == 0:
            return False
    for i, w in enumerate(word):
        if norm_inf(factor_signature(location + i, time_budget)) != w:
            return False
    return True


def search_word(
    word: Sequence[int],
    primes: Sequence[int],
    k_max: int = 10**6,
    time_budget: float | None = 60.0,
    total_budget: float | None = None,
) -> tuple[int, int] | None:
    """Smallest ``k <= k_max`` such that the word sits exactly at ``x + kM``.

    Returns ``(location, k)`` or ``None``.  ``time_budget`` bounds each
    factorization, ``total_budget`` the whole search; exceeding either raises
    :class:`ResourceError`.
    """
    word = parse_word(word)
    x, m = crt_locate(word, primes)
    deadline = None if total_budget is None else time.monotonic() + total_budget
    for k in range(k_max + 1):
        loc = x + k * m
        if _matches(loc, word, primes, time_budget):
            return loc, k
        if deadline is not None and time.monotonic() > deadline:
            raise ResourceError(f"word search gave up after k = {k}")
    return None
