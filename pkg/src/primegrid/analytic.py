"""Zeta values, letter densities of the norm sequence, and derived constants.

Conventions: ``1/zeta(1) = 0``, so ``q_1 = 1/zeta(2)``.  Quantities that are
differences of numbers close to 1 are computed from ``zeta(k) - 1`` directly to
keep their relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError

# Bernoulli numbers B_2, B_4, ..., B_12
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730)
_EM_CUTOFF = 10
_SERIES_END = 80  # terms beyond k = 80 are below 2**-80


@lru_cache(maxsize=None)
def zeta_minus_one(k: int) -> float:
    """``zeta(k) - 1`` for integer ``k >= 2``.

    Direct sum over ``2 <= n < 10`` followed by an Euler-Maclaurin tail with six
    Bernoulli corrections; the truncation error is below 1e-17 for every k >= 2.
    """
    if k < 2:
        raise DomainError(f"zeta({k}) diverges or is undefined here; need k >= 2")
    s = float(k)
    n = _EM_CUTOFF
    head = math.fsum(m ** -s for m in range(2, n))
    tail = n ** (1 - s) / (s - 1) + 0.5 * n**-s
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2.0
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += b / fact * rising * n ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + tail


def zeta(k: int) -> float:
    """Riemann zeta at an integer ``k >= 2``."""
    return 1.0 + zeta_minus_one(k)


def inv_zeta(k: int) -> float:
    """``1/zeta(k)`` with the convention ``1/zeta(1) = 0``."""
    if k == 1:
        return 0.0
    return 1.0 / zeta(k)


def one_minus_inv_zeta(k: int) -> float:
    """``1 - 1/zeta(k)`` without cancellation (1 for k = 1)."""
    if k == 1:
        return 1.0
    return zeta_minus_one(k) / zeta(k)


def q(k: int) -> float:
    """Density of integers with l-infinity norm ``k``: ``1/zeta(k+1) - 1/zeta(k)``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if k == 1:
        return inv_zeta(2)
    return (zeta_minus_one(k) - zeta_minus_one(k + 1)) / (zeta(k) * zeta(k + 1))


@dataclass(frozen=True)
class LetterDensity:
    """``q_1 .. q_kmax`` plus the aggregated mass of all larger letters."""

    q: np.ndarray
    tail: float

    @property
    def k_max(self) -> int:
        return len(self.q)

    def as_vector(self) -> np.ndarray:
        """Densities of the truncated alphabet with the tail as its last letter."""
        return np.append(self.q, self.tail)


def letter_density(k_max: int = 25) -> LetterDensity:
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    qs = np.array([q(k) for k in range(1, k_max + 1)])
    return LetterDensity(qs, one_minus_inv_zeta(k_max + 1))


def constant_c() -> float:
    """``sum_k (1 - 1/zeta(k))``, the mean letter value of the norm sequence."""
    return math.fsum(one_minus_inv_zeta(k) for k in range(1, _SERIES_END))


def bound_bunched() -> float:
    """Lower bound when equal norms are bunched together as much as possible."""
    return math.fsum((k + 1 / (2 ** (k + 1) - 1)) * q(k) for k in range(1, _SERIES_END))


def bound_spread() -> float:
    """Upper bound when equal norms are spread out as evenly as possible."""
    return 1.5 * constant_c()


def iid_expected_hop() -> float:
    """``E max(X, X')`` for two independent letters drawn from ``q``.

    Uses ``E max = sum_{k>=0} P(max > k) = sum_k (1 - Q_k**2)`` with
    ``Q_k = P(X <= k) = 1/zeta(k+1)``.
    """
    terms = []
    for k in range(0, _SERIES_END):
        a = one_minus_inv_zeta(k + 1)  # 1 - Q_k
        terms.append(a * (2 - a))  # 1 - Q_k**2
    return math.fsum(terms)


def li(x: float) -> float:
    """Offset logarithmic integral ``int_2^x dy / ln y``.

    Integrated in ``t = ln y`` (integrand ``e**t / t``), which is smooth over
    the whole range.
    """
    if x < 2:
        raise DomainError("li(x) is defined here for x >= 2")
    if x == 2:
        return 0.0
    a, b = math.log(2.0), math.log(x)
    # split so each piece spans at most one unit of t; keeps quad well inside its limits
    edges = np.linspace(a, b, max(2, int(math.ceil(b - a)) + 1))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: math.exp(t) / t, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total


def all_constants() -> dict:
    dens = letter_density(25)
    return {
        "zeta2": zeta(2),
        "c": constant_c(),
        "bound_bunched": bound_bunched(),
        "bound_spread": bound_spread(),
        "iid_expected_hop": iid_expected_hop(),
        "q": dens.q.tolist(),
        "q_tail": dens.tail,
        "q_tail_is_aggregate": True,
        "conjectured_c0": 2.2883695,
        "conjectured_inverse_c0": 0.436992,
    }
