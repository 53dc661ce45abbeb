"""Prime gaps on the number line and on the number trail.

``D1_k = p_{k+1} - p_k`` are the classical gaps; the trail gaps are
``TrailD1_k = L_inf(p_{k+1}) - L_inf(p_k)``.  Second-order series are the
differences of the first-order ones.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .analytic import li
from .errors import DataError, DomainError, InvariantViolation
from .trail import PrimeStops

KINDS = ("D1", "D2", "TrailD1", "TrailD2")
D2_DEFAULT_RANGE = (-60, 60)


@dataclass(frozen=True)
class GapSeries:
    kind: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown series kind {self.kind!r}")

    def __len__(self):
        return len(self.values)

    @property
    def order(self) -> int:
        return int(self.kind[-1])


def _to_int16(values: np.ndarray) -> np.ndarray:
    info = np.iinfo(np.int16)
    if values.size and (values.min() < info.min or values.max() > info.max):
        raise InvariantViolation("gap value does not fit in 16 bits")
    return values.astype(np.int16)


def gap_series(values, order: int = 1, trail: bool = True) -> GapSeries:
    """First (``order=1``) or second (``order=2``) differences of ``values``.

    ``values`` are trail stops when ``trail`` is true, otherwise primes.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1 or arr.size < order + 1:
        raise DomainError(f"need at least {order + 1} values for order {order}")
    d = np.diff(arr)
    if np.any(d <= 0):
        raise DomainError("input must be strictly increasing")
    if order == 2:
        d = np.diff(d)
    kind = ("TrailD" if trail else "D") + str(order)
    return GapSeries(kind, _to_int16(d))


def difference(series: GapSeries) -> GapSeries:
    """The second-order series of a first-order one."""
    if series.order != 1:
        raise DomainError("can only difference a first-order series")
    if len(series) < 2:
        raise DomainError("need at least two values")
    kind = series.kind[:-1] + "2"
    return GapSeries(kind, _to_int16(np.diff(series.values.astype(np.int64))))


@dataclass
class Histogram:
    """Counts per integer value, ``counts[i]`` belonging to ``bin_lo + i``.

    Leading and trailing empty bins are trimmed.
    """

    bin_lo: int
    counts: np.ndarray
    kind: str = ""
    n_max: int | None = None
    generated_at: str | None = None

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.bin_lo, self.bin_lo + len(self.counts))

    def count(self, value: int) -> int:
        i = value - self.bin_lo
        return int(self.counts[i]) if 0 <= i < len(self.counts) else 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def clip(self, lo: int, hi: int) -> "Histogram":
        """Restrict to bins ``lo..hi`` inclusive (then trim again)."""
        vals = self.values
        keep = (vals >= lo) & (vals <= hi)
        return _trimmed(vals[keep], self.counts[keep], self.kind, self.n_max, self.generated_at)

    def jumping_champions(self) -> list[int]:
        """All most frequent values (ties are all reported)."""
        if not len(self.counts):
            return []
        top = self.counts.max()
        return (self.bin_lo + np.flatnonzero(self.counts == top)).tolist()

    # --- serialization -------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "count"])
        for v, c in zip(self.values.tolist(), self.counts.tolist()):
            w.writerow([v, c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kind: str = "") -> "Histogram":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["value", "count"]:
            raise DataError("histogram CSV must start with a 'value,count' header")
        try:
            vals = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
            counts = np.array([int(r[1]) for r in rows[1:]], dtype=np.int64)
        except (ValueError, IndexError) as exc:
            raise DataError(f"bad histogram row: {exc}") from exc
        if vals.size and np.any(np.diff(vals) != 1):
            raise DataError("histogram values must be consecutive integers")
        lo = int(vals[0]) if vals.size else 0
        return cls(lo, counts.astype(np.uint64), kind=kind)

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "N_max": self.n_max,
            "generated_at": self.generated_at,
            "bin_lo": self.bin_lo,
            "counts": [int(c) for c in self.counts],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Histogram":
        try:
            doc = json.loads(text)
            return cls(
                int(doc["bin_lo"]),
                np.array(doc["counts"], dtype=np.uint64),
                kind=doc["kind"],
                n_max=doc["N_max"],
                generated_at=doc["generated_at"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad histogram JSON: {exc}") from exc


def _trimmed(vals, counts, kind, n_max, generated_at) -> Histogram:
    nz = np.flatnonzero(counts)
    if not nz.size:
        return Histogram(0, np.zeros(0, dtype=np.uint64), kind, n_max, generated_at)
    a, b = nz[0], nz[-1] + 1
    return Histogram(int(vals[a]), counts[a:b].astype(np.uint64), kind, n_max, generated_at)


def histogram(series: GapSeries, n_max: int | None = None, stamp: bool = False) -> Histogram:
    """Integer-binned counts of a gap series, trimmed to the non-zero range."""
    vals = series.values.astype(np.int64)
    if not vals.size:
        raise DomainError("cannot histogram an empty series")
    lo = int(vals.min())
    counts = np.bincount(vals - lo).astype(np.uint64)
    generated = datetime.now(timezone.utc).isoformat(timespec="seconds") if stamp else None
    return Histogram(lo, counts, series.kind, n_max, generated)


def excluded_values_check(series: GapSeries) -> dict[int, int]:
    """First index at which each value in 1..6 occurs in a trail D1 series.

    Raises :class:`InvariantViolation` if 3 or 5 occur; they cannot, so that
    would mean the trail computation is broken.
    """
    if series.kind != "TrailD1":
        raise DomainError("excluded-value check applies to TrailD1 series")
    out = {}
    for v in range(1, 7):
        hits = np.flatnonzero(series.values == v)
        if hits.size:
            out[v] = int(hits[0])
    bad = sorted(set(out) & {3, 5})
    if bad:
        raise InvariantViolation(f"trail gap took excluded value(s) {bad} at {[out[b] for b in bad]}")
    return out


def first_occurrence(series: GapSeries, value: int) -> int | None:
    hits = np.flatnonzero(series.values == value)
    return int(hits[0]) if hits.size else None


def pi_infty(n: float, stops: PrimeStops) -> int:
    """Number of primes whose trail position is ``<= n``."""
    return stops.offset + int(np.searchsorted(stops.values, n, side="right"))


def pnt_ratios(k: int, stops: PrimeStops) -> tuple[float, float]:
    """``(pi_inf(N) log N / N, pi_inf(N) / Li(N))`` at ``N = L_inf(p_k)``."""
    i = k - stops.offset - 1
    if not 0 <= i < len(stops):
        raise DomainError(f"k = {k} is not covered by the stops")
    n = int(stops.values[i])
    count = pi_infty(n, stops)
    return count * math.log(n) / n, count / li(n)
