"""Prime signatures, their norms, and a segmented sieve for l-infinity norms.

A positive integer ``N = p1**i1 * p2**i2 * ...`` is identified with its
exponent vector (its prime signature).  The l-infinity norm of ``N`` is the
largest exponent, the l1 norm is the number of prime factors counted with
multiplicity.
"""
from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DomainError, ResourceError

__all__ = [
    "PrimeSignature",
    "NormSegment",
    "factor_signature",
    "norm_inf",
    "norm_one",
    "omega",
    "sigma0",
    "chebyshev_distance",
    "is_probable_prime",
    "base_primes",
    "sieve_norms",
    "iter_segments",
    "sieve_big_omega",
    "DEFAULT_SEGMENT_SIZE",
]

DEFAULT_SEGMENT_SIZE = 1 << 22
TRIAL_DIVISION_LIMIT = 10**6
MAX_SIEVE_HI = 1 << 63


@dataclass(frozen=True)
class PrimeSignature:
    """Sorted ``(prime, exponent)`` pairs; the empty signature represents 1."""

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        last = 1
        for p, e in self.entries:
            if p <= last or e < 1:
                raise DomainError(f"invalid signature entries {self.entries!r}")
            last = p

    @classmethod
    def from_dict(cls, exponents: dict[int, int]) -> "PrimeSignature":
        return cls(tuple(sorted((int(p), int(e)) for p, e in exponents.items() if e)))

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    @property
    def value(self) -> int:
        out = 1
        for p, e in self.entries:
            out *= p**e
        return out

    def __len__(self):
        return len(self.entries)


def norm_inf(sig: PrimeSignature) -> int:
    return max((e for _, e in sig.entries), default=0)


def norm_one(sig: PrimeSignature) -> int:
    """Total number of prime factors with multiplicity (the function Omega)."""
    return sum(e for _, e in sig.entries)


def omega(sig: PrimeSignature) -> int:
    """Number of distinct prime factors."""
    return len(sig.entries)


def sigma0(sig: PrimeSignature) -> int:
    """Number of divisors, ``prod(e + 1)``."""
    out = 1
    for _, e in sig.entries:
        out *= e + 1
    return out


def chebyshev_distance(a: PrimeSignature, b: PrimeSignature) -> int:
    """Max absolute exponent difference over the union of primes."""
    ea, eb = a.as_dict(), b.as_dict()
    return max((abs(ea.get(p, 0) - eb.get(p, 0)) for p in ea.keys() | eb.keys()), default=0)


# ---------------------------------------------------------------------------
# Factorization of individual integers

# Deterministic for n < 3.3e24 (first 13 primes as witnesses).
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_LIMIT = 3317044064679887385961981


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin test, deterministic below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = list(_MR_BASES)
    if n >= _MR_DETERMINISTIC_LIMIT:
        rng = random.Random(n)
        bases += [rng.randrange(2, n - 1) for _ in range(24)]
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, deadline: float | None) -> int:
    """Return a non-trivial factor of the odd composite ``n``."""
    rng = random.Random(n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
            if deadline is not None and time.monotonic() > deadline:
                raise ResourceError(f"factorization of {n} exceeded its time budget")
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def _split(n: int, out: dict[int, int], deadline: float | None) -> None:
    if n == 1:
        return
    if is_probable_prime(n):
        out[n] = out.get(n, 0) + 1
        return
    r = math.isqrt(n)
    if r * r == n:
        _split(r, out, deadline)
        _split(r, out, deadline)
        return
    d = _pollard_brent(n, deadline)
    _split(d, out, deadline)
    _split(n // d, out, deadline)


def factor_signature(n: int, time_budget: float | None = None) -> PrimeSignature:
    """Factor ``n`` completely.

    Trial division by primes up to 10**6, then Miller-Rabin and Pollard-Brent
    rho on the remaining cofactor.  Intended for 64-bit inputs but also works on
    the somewhat larger integers that show up when locating words by CRT.
    ``time_budget`` (seconds) bounds the rho phase; exceeding it raises
    :class:`ResourceError`.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"factor_signature needs n >= 1, got {n}")
    exps: dict[int, int] = {}
    limit = min(TRIAL_DIVISION_LIMIT, math.isqrt(n))
    for p in base_primes(TRIAL_DIVISION_LIMIT).tolist():
        if p > limit:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            exps[p] = e
            limit = min(limit, math.isqrt(n))
    if n > 1:
        deadline = None if time_budget is None else time.monotonic() + time_budget
        _split(n, exps, deadline)
    return PrimeSignature.from_dict(exps)


# ---------------------------------------------------------------------------
# Segmented sieve

_base_cache = {"limit": 1, "primes": np.zeros(0, dtype=np.int64)}


def base_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as int64, from a cached odd-only sieve."""
    limit = int(limit)
    if limit > _base_cache["limit"]:
        size = max(limit, 2 * _base_cache["limit"], 1024)
        half = np.ones((size - 1) // 2, dtype=bool)  # half[i] <-> 2i + 3
        for i in range((math.isqrt(size) - 1) // 2):
            if half[i]:
                p = 2 * i + 3
                half[(p * p - 3) // 2 :: p] = False
        primes = np.concatenate(([2], 2 * np.flatnonzero(half) + 3)).astype(np.int64)
        _base_cache.update(limit=size, primes=primes)
    primes = _base_cache["primes"]
    return primes[: np.searchsorted(primes, limit, side="right")]


@dataclass
class NormSegment:
    """l-infinity norms and primality for the integers ``lo <= n < hi``."""

    lo: int
    hi: int
    norms: np.ndarray = field(repr=False)
    prime_flags: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.norms) != self.hi - self.lo or len(self.prime_flags) != self.hi - self.lo:
            raise DomainError("segment arrays do not match [lo, hi)")

    def __len__(self):
        return self.hi - self.lo

    @property
    def primes(self) -> np.ndarray:
        return self.lo + np.flatnonzero(self.prime_flags)


def sieve_norms(lo: int, hi: int) -> NormSegment:
    """Compute ``||n||_inf`` and primality for every ``n`` in ``[lo, hi)``.

    Every prime ``p <= sqrt(hi - 1)`` is divided out of each of its multiples
    while counting the exponent.  Whatever is left over is either 1 or a single
    large prime (exponent 1).  ``n`` is prime iff nothing was divided out of it,
    or ``n`` is itself one of the sieving primes.
    """
    lo, hi = int(lo), int(hi)
    if lo < 1 or lo >= hi:
        raise DomainError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    if hi > MAX_SIEVE_HI:
        raise DomainError("sieve range must stay below 2**63")
    size = hi - lo
    values = np.arange(lo, hi, dtype=np.int64)
    residual = values.copy()
    norms = np.zeros(size, dtype=np.uint8)
    primes = base_primes(math.isqrt(hi - 1))
    for p in primes.tolist():
        pk, e = p, 1
        while True:
            start = -lo % pk
            if start >= size:
                break
            view = residual[start::pk]
            view //= p
            if e > 1:
                nv = norms[start::pk]
                np.maximum(nv, e, out=nv)
            if pk > (hi - 1) // p:
                break
            pk *= p
            e += 1
    np.maximum(norms, values > 1, out=norms)  # every n > 1 has some exponent >= 1
    prime_flags = (residual == values) & (values > 1)
    inside = primes[(primes >= lo) & (primes < hi)]
    prime_flags[inside - lo] = True
    return NormSegment(lo, hi, norms, prime_flags)


def iter_segments(
    lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1
) -> Iterator[NormSegment]:
    """Yield consecutive segments covering ``[lo, hi)`` in order.

    With ``threads > 1`` segments are sieved concurrently; order of the yielded
    segments is preserved.
    """
    if segment_size < 1:
        raise DomainError("segment_size must be positive")
    bounds = [(a, min(a + segment_size, hi)) for a in range(lo, hi, segment_size)]
    base_primes(math.isqrt(max(hi - 1, 1)))  # fill the shared cache before fanning out
    if threads <= 1 or len(bounds) == 1:
        for a, b in bounds:
            yield sieve_norms(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # bounded look-ahead keeps memory at ~2*threads segments
        pending = []
        it = iter(bounds)
        for a, b in it:
            pending.append(pool.submit(sieve_norms, a, b))
            if len(pending) >= 2 * threads:
                break
        for a, b in it:
            yield pending.pop(0).result()
            pending.append(pool.submit(sieve_norms, a, b))
        for fut in pending:
            yield fut.result()



def sieve_big_omega(lo: int, hi: int) -> np.ndarray:
    """``||n||_1`` (prime factors with multiplicity) for ``lo <= n < hi``."""
    lo, hi = int(lo), int(hi)
    if lo < 1 or lo >= hi:
        raise DomainError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    size = hi - lo
    values = np.arange(lo, hi, dtype=np.int64)
    residual = values.copy()
    counts = np.zeros(size, dtype=np.uint8)
    for p in base_primes(math.isqrt(hi - 1)).tolist():
        pk = p
        while True:
            start = -lo % pk
            if start >= size:
                break
            view = residual[start::pk]
            view //= p
            cv = counts[start::pk]
            cv += 1
            if pk > (hi - 1) // p:
                break
            pk *= p
    counts += (residual > 1).astype(np.uint8)
    return counts
