"""Random letter sequences free of the forbidden words F_1 .. F_25.

The core loop follows the reference C generator: letters are 0-based inside
the kernels (``0`` is letter 1, ``25`` is the aggregated letter ``*``) and
``index[k]`` is the length of the current run of letters ``<= k``.  A run of
type ``k`` reaching ``2**(k+2)`` would complete a word of ``F_{k+1}``; the last
letter is then replaced by a letter ``> k``, drawn from the renormalized tail
of ``p`` (model 1) or set to ``k + 1`` (model 2).

Letters returned to Python are 1-based ``uint8`` values with ``*`` stored as 26.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from .analytic import LetterDensity, letter_density
from .errors import DataError, DomainError, GenerationError

N_LETTERS = 26
STAR_VALUE = 26
N_TYPES = 25  # types 0..24 are the families F_1..F_25
MODELS = (1, 2)

# input distributions p(1) and p(2) found by the reference optimization run
TABLE3_P1 = np.array([
    0.778066482, 0.1808120958, 0.0344511792, 0.005501330873, 0.0008606020801,
    0.0001788032959, 5.589433871e-05, 2.736073937e-05, 1.31193597e-05, 7.594988824e-06,
    4.286503901e-06, 3.540683918e-06, 2.973346931e-06, 2.403969944e-06, 2.812292935e-06,
    3.03521793e-06, 2.459252943e-06, 2.294506947e-06, 1.121315974e-06, 1.70937596e-07,
    2.59843894e-07, 9.695063776e-08, 5.074703883e-08, 1.579332963e-08, 6.098237859e-09,
    9.831509773e-09,
])
TABLE3_P2 = np.array([
    0.7791783767, 0.166204795, 0.03914430883, 0.01075578968, 0.003211510904,
    0.0009983211701, 0.0003228213903, 0.000100454897, 3.482384896e-05, 1.119959966e-05,
    5.66707383e-06, 6.236370813e-06, 6.553250804e-06, 6.186574815e-06, 5.746875828e-06,
    3.470847896e-06, 1.430745957e-06, 1.018855969e-06, 7.578192773e-07, 1.379581959e-07,
    2.503132925e-07, 5.449547837e-08, 5.148644846e-08, 2.473640926e-08, 5.160489846e-09,
    5.419687838e-09,
])
BUILTIN = {"table3-p1": TABLE3_P1, "table3-p2": TABLE3_P2}


# ---------------------------------------------------------------------------
# Distributions


def normalize(p) -> np.ndarray:
    """Validate a 26-letter weight vector and scale it to sum 1."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (N_LETTERS,):
        raise DomainError(f"distribution must have {N_LETTERS} entries, got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DomainError("distribution entries must be finite and non-negative")
    s = p.sum()
    if s <= 0:
        raise DomainError("distribution has zero mass")
    return p / s


def load_distribution(spec: str | Path) -> np.ndarray:
    """A builtin name (``table3-p1``, ``table3-p2``) or a CSV file of 26 rows.

    The CSV may have a header; the last column of each row is the weight.
    """
    if str(spec) in BUILTIN:
        return normalize(BUILTIN[str(spec)])
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise DataError(f"cannot read distribution {spec}: {exc}") from exc
    return parse_distribution_csv(text)


def parse_distribution_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    vals = []
    for r in rows:
        try:
            vals.append(float(r[-1]))
        except ValueError:
            if vals:
                raise DataError(f"bad distribution row {r}")
    if len(vals) != N_LETTERS:
        raise DataError(f"distribution CSV must have {N_LETTERS} rows, found {len(vals)}")
    try:
        return normalize(vals)
    except DomainError as exc:
        raise DataError(str(exc)) from exc


def distribution_csv(p) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["letter", "p"])
    for i, v in enumerate(np.asarray(p)):
        w.writerow(["*" if i == N_LETTERS - 1 else i + 1, repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Alias tables for every slice p[i..j]


def _alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(weights)
    scaled = weights / weights.sum() * n
    prob = np.ones(n)
    alias = np.arange(n)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    return prob, alias


def slice_tables(p: np.ndarray):
    """``prob[i, j, :]`` and ``alias[i, j, :]`` sample ``p[i..j]`` (renormalized).

    ``mass[i, j]`` is zero when the slice carries no weight.
    """
    n = len(p)
    prob = np.zeros((n, n, n))
    alias = np.zeros((n, n, n), dtype=np.int64)
    mass = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            w = p[i : j + 1]
            mass[i, j] = w.sum()
            if mass[i, j] > 0:
                prob[i, j, : j - i + 1], alias[i, j, : j - i + 1] = _alias(w)
    return prob, alias, mass


@numba.njit(cache=True)
def _draw(rng, prob, alias, mass, i, j):
    # returns an offset into p[i..j]
    if mass[i, j] <= 0.0:
        return -1
    n = j - i + 1
    u = rng.random() * n
    m = int(u)
    if m >= n:
        m = n - 1
    if u - m < prob[i, j, m]:
        return m
    return alias[i, j, m]


@numba.njit(inline="always")
def _max_char(pos):
    # floor(log2(pos + 1)) - 1 clamped to [0, 25]; pos is the 0-based slot being filled
    if pos < 1:
        return 0
    b = 0
    m = pos + 1
    while m > 1:
        m >>= 1
        b += 1
    b -= 1
    if b < 0:
        return 0
    if b > 25:
        return 25
    return b


@numba.njit(cache=True)
def _kernel(rng, prob, alias, mass, out, start, stop, index, model, n_types, growing, checked, track_all):
    """Fill ``out[start:stop]`` (0-based letters).  Returns an error code.

    0 ok; 1 empty resampling tail; 2 run-length invariant broken.
    ``growing`` applies the position-dependent alphabet ceiling; otherwise the
    full alphabet is used throughout.  Only types ``< n_types`` are tracked.
    With ``track_all`` false, types above the ceiling are not counted at all,
    exactly as in the reference listing.
    """
    top_letter = prob.shape[0] - 1
    for pos in range(start, stop):
        mc = _max_char(pos) if growing else top_letter
        x = _draw(rng, prob, alias, mass, 0, mc)
        hi = mc if mc < n_types - 1 else n_types - 1
        if track_all:
            # a run of type k > mc is too short to trigger, but must still be counted
            hi = n_types - 1
        k = hi
        while k >= x:
            index[k] += 1
            if index[k] >= (1 << (k + 2)):
                if model == 1:
                    if k + 1 > mc:
                        return 1
                    d = _draw(rng, prob, alias, mass, k + 1, mc)
                    if d < 0:
                        return 1
                    x = k + 1 + d
                else:
                    x = k + 1
                break
            k -= 1
        for k in range(0, min(x, n_types)):
            index[k] = 0
        out[pos] = x
        if checked:
            for k in range(x, hi + 1):
                if index[k] >= (1 << (k + 2)):
                    return 2
    return 0


@numba.njit(cache=True)
def _iid_kernel(rng, prob, alias, mass, out):
    top = prob.shape[1] - 1
    for pos in range(out.shape[0]):
        out[pos] = _draw(rng, prob, alias, mass, 0, top)


def make_rng(seed: int) -> np.random.Generator:
    """The pinned generator: numpy PCG64 seeded through ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def _run(p, length, model, seed, n_types=N_TYPES, growing=True, checked=False, listing=False) -> np.ndarray:
    if model not in MODELS:
        raise DomainError(f"model must be 1 or 2, got {model!r}")
    if length < 1:
        raise DomainError("length must be >= 1")
    p = normalize(p)
    prob, alias, mass = slice_tables(p)
    out = np.zeros(int(length), dtype=np.uint8)
    index = np.zeros(N_LETTERS, dtype=np.int64)
    code = _kernel(make_rng(seed), prob, alias, mass, out, 0, int(length), index, model, n_types, growing, checked, not listing)
    _raise_for(code)
    out += 1
    return out


def _raise_for(code: int) -> None:
    if code == 1:
        raise GenerationError("model 1 resampling tail has no mass")
    if code == 2:
        raise GenerationError("run-length invariant broken after an emission")


def generate(model: int, p, length: int, seed: int, checked: bool = False, listing: bool = False) -> np.ndarray:
    """Letters ``1..26`` (26 is ``*``) of one simulated sequence.

    Deterministic in ``(model, p, length, seed)``.  ``checked`` verifies
    ``index[k] < 2**(k+2)`` after every emission.

    ``listing=True`` reproduces the reference loop verbatim: run lengths of
    types above the current ceiling are not counted, so words of ``F_n`` that
    start before position ``2**n - 1`` can slip through.  The default counts
    every type from the first letter and never emits a forbidden word.
    """
    return _run(p, length, model, seed, checked=checked, listing=listing)


def generate_iid(p, length: int, seed: int) -> np.ndarray:
    """Elimination disabled: independent letters from ``p`` over the full alphabet."""
    if length < 1:
        raise DomainError("length must be >= 1")
    p = normalize(p)
    n = len(p)
    prob = np.zeros((1, n, n))
    alias = np.zeros((1, n, n), dtype=np.int64)
    mass = np.zeros((1, n))
    prob[0, n - 1], alias[0, n - 1] = _alias(p)
    mass[0, n - 1] = 1.0
    out = np.zeros(int(length), dtype=np.uint8)
    _iid_kernel(make_rng(seed), prob, alias, mass, out)
    return out + 1


def block_bounds(n_max: int) -> list[tuple[int, int, int]]:
    """``(n, first, last)`` 1-based positions of each block; block 1 is ``1..4``."""
    out = [(1, 1, 4)]
    for n in range(2, n_max + 1):
        out.append((n, (1 << n) + 1, 1 << (n + 1)))
    return out


def generate_blocked(q: LetterDensity | np.ndarray, n_max: int, seed: int, model: int = 1) -> np.ndarray:
    """Concatenated blocks; block ``n`` is generated while eliminating ``F_1..F_n``.

    Letters are drawn from ``q`` over the full alphabet and the run-length
    counters carry over from one block to the next.  Total length is
    ``2**(n_max+1)``.
    """
    if not 1 <= n_max <= N_TYPES:
        raise DomainError(f"n_max must be in 1..{N_TYPES}")
    p = normalize(q.as_vector() if isinstance(q, LetterDensity) else q)
    prob, alias, mass = slice_tables(p)
    rng = make_rng(seed)
    out = np.zeros(1 << (n_max + 1), dtype=np.uint8)
    index = np.zeros(N_LETTERS, dtype=np.int64)
    for n, first, last in block_bounds(n_max):
        code = _kernel(rng, prob, alias, mass, out, first - 1, last, index, model, n, False, False, True)
        _raise_for(code)
    return out + 1


# ---------------------------------------------------------------------------
# Statistics


def empirical_marginals(seq) -> np.ndarray:
    """Relative frequency of each of the 26 letters."""
    seq = np.asarray(seq)
    if not seq.size:
        raise DomainError("empty sequence")
    counts = np.bincount(seq, minlength=N_LETTERS + 1)[1 : N_LETTERS + 1]
    return counts / seq.size


def rms(a, b: LetterDensity | np.ndarray) -> float:
    """``sqrt(mean((a - b)**2))`` over the 26 letters."""
    b = b.as_vector() if isinstance(b, LetterDensity) else np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    if a.shape != b.shape:
        raise DomainError("marginal vectors differ in length")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@numba.njit(cache=True)
def _sum_pair_max(seq):
    s = 0
    for i in range(seq.shape[0] - 1):
        a = seq[i]
        b = seq[i + 1]
        s += a if a > b else b
    return s


def c0_estimate(seq) -> float:
    """Mean of ``max(X_i, X_{i+1})`` over consecutive pairs (``*`` counts as 26)."""
    seq = np.ascontiguousarray(seq, dtype=np.uint8)
    if seq.size < 2:
        raise DomainError("need at least two letters")
    return _sum_pair_max(seq) / (seq.size - 1)


@numba.njit(cache=True)
def _count_forbidden(seq, n_max):
    run = np.zeros(n_max + 1, dtype=np.int64)
    total = 0
    for i in range(seq.shape[0]):
        a = seq[i]
        for n in range(1, n_max + 1):
            if a <= n:
                run[n] += 1
                if run[n] >= (1 << (n + 1)):
                    total += 1
            else:
                run[n] = 0
    return total


def violations(seq, n_max: int = N_TYPES) -> int:
    """Number of windows belonging to ``F_1..F_n_max`` (``*`` never lies in one).

    Same count as ``len(words.find_forbidden(seq, n_max))`` in one pass.
    """
    seq = np.ascontiguousarray(seq, dtype=np.uint8)
    return int(_count_forbidden(seq, n_max))


@dataclass(frozen=True)
class RunStats:
    run: int
    seed: int
    c0: float
    rms: float
    violations: int

    def as_dict(self) -> dict:
        return {"run": self.run, "seed": self.seed, "c0": self.c0, "rms": self.rms, "violations": self.violations}


def simulate(model: int, p, length: int, runs: int, seed: int, q: LetterDensity | None = None) -> list[RunStats]:
    """``runs`` independent sequences; run ``r`` is seeded with ``seed + r``."""
    q = q or letter_density()
    out = []
    for r in range(runs):
        s = seed + r
        seq = generate(model, p, length, s)
        out.append(RunStats(r, s, c0_estimate(seq), rms(empirical_marginals(seq), q), violations(seq)))
    return out


def summarize(stats: list[RunStats]) -> dict:
    c0 = np.array([s.c0 for s in stats])
    return {
        "runs": len(stats),
        "c0_mean": float(c0.mean()),
        "c0_sd": float(c0.std(ddof=1)) if len(c0) > 1 else math.nan,
        "c0_min": float(c0.min()),
        "c0_max": float(c0.max()),
        "c0_median": float(np.median(c0)),
        "rms_mean": float(np.mean([s.rms for s in stats])),
        "violations": int(sum(s.violations for s in stats)),
    }
