"""Number-trail lengths.

``L_inf(N) = sum_{K<N} max(||K+1||_inf, ||K||_inf)`` is accumulated segment by
segment.  The value of ``L_inf`` at every prime (a "stop") is recorded, which is
all the gap statistics downstream need.  Long runs persist a checkpoint after
every segment and can be resumed.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import DataError, DomainError
from .signature import DEFAULT_SEGMENT_SIZE, NormSegment, iter_segments, sieve_big_omega

FORMAT_VERSION = 1
STOPS_DTYPE = np.dtype("<u8")
CHECKPOINT_NAME = "checkpoint.json"


def hop(norm_k: int, norm_k_plus_1: int) -> int:
    """Chebyshev length of the step ``K -> K+1`` given both norms."""
    return max(norm_k, norm_k_plus_1)


@dataclass(frozen=True)
class TrailCheckpoint:
    """State of the trail after processing every integer below ``next_n``."""

    next_n: int = 2
    last_norm: int = 0
    cumsum_linf: int = 0
    prime_count: int = 0

    @classmethod
    def initial(cls) -> "TrailCheckpoint":
        return cls()


class PrimeStops:
    """Append-only record of ``L_inf(p_k)``.

    ``offset`` is the number of primes preceding the first recorded stop, so
    ``values[i]`` belongs to the prime with index ``offset + i + 1``.
    """

    def __init__(self, values: Iterable[int] | np.ndarray = (), offset: int = 0):
        arr = np.asarray(values, dtype=np.int64)
        self._chunks: list[np.ndarray] = [arr] if arr.size else []
        self._cache: np.ndarray | None = None
        self.offset = offset

    def append(self, chunk: np.ndarray) -> None:
        if chunk.size:
            self._chunks.append(np.asarray(chunk, dtype=np.int64))
            self._cache = None

    @property
    def values(self) -> np.ndarray:
        if self._cache is None:
            self._cache = (
                np.concatenate(self._chunks) if self._chunks else np.zeros(0, dtype=np.int64)
            )
            self._chunks = [self._cache] if self._cache.size else []
        return self._cache

    def __len__(self):
        return sum(c.size for c in self._chunks)

    def __getitem__(self, item):
        return self.values[item]

    @classmethod
    def from_file(cls, path: str | os.PathLike, offset: int = 0) -> "PrimeStops":
        return cls(read_stops(path), offset=offset)


def read_stops(path: str | os.PathLike) -> np.ndarray:
    """Read a stops file (raw little-endian uint64) as int64."""
    size = os.path.getsize(path)
    if size % STOPS_DTYPE.itemsize:
        raise DataError(f"{path}: size {size} is not a multiple of 8 bytes")
    return np.fromfile(path, dtype=STOPS_DTYPE).astype(np.int64)


def stream_trail(
    segment: NormSegment, checkpoint: TrailCheckpoint, stops: PrimeStops | None = None
) -> TrailCheckpoint:
    """Fold one segment into the trail and return the advanced checkpoint.

    One stop per prime of the segment is appended to ``stops``.  The result
    does not depend on how a range is cut into segments.
    """
    if segment.lo != checkpoint.next_n:
        raise DomainError(
            f"segment starts at {segment.lo} but checkpoint expects {checkpoint.next_n}"
        )
    norms = segment.norms.astype(np.int64)
    hops = np.empty_like(norms)
    hops[0] = max(norms[0], checkpoint.last_norm) if segment.lo > 1 else 0
    np.maximum(norms[1:], norms[:-1], out=hops[1:])
    cums = np.cumsum(hops)
    cums += checkpoint.cumsum_linf
    at_primes = cums[segment.prime_flags]
    if stops is not None:
        stops.append(at_primes)
    return TrailCheckpoint(
        next_n=segment.hi,
        last_norm=int(norms[-1]),
        cumsum_linf=int(cums[-1]),
        prime_count=checkpoint.prime_count + int(at_primes.size),
    )


def advance(
    checkpoint: TrailCheckpoint,
    stop_before: int,
    stops: PrimeStops | None = None,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
    on_segment: Callable[[TrailCheckpoint, np.ndarray], None] | None = None,
) -> TrailCheckpoint:
    """Process ``[checkpoint.next_n, stop_before)``.

    ``on_segment`` receives each intermediate checkpoint together with the stops
    produced by that segment.
    """
    for seg in iter_segments(checkpoint.next_n, stop_before, segment_size, threads):
        local = PrimeStops()
        checkpoint = stream_trail(seg, checkpoint, local)
        if stops is not None:
            stops.append(local.values)
        if on_segment is not None:
            on_segment(checkpoint, local.values)
    return checkpoint


def compute_trail(
    n_max: int, segment_size: int = DEFAULT_SEGMENT_SIZE, threads: int = 1
) -> tuple[TrailCheckpoint, PrimeStops]:
    """Trail state after ``n_max`` and the stops of all primes ``<= n_max``."""
    stops = PrimeStops()
    cp = TrailCheckpoint.initial()
    if n_max >= 2:
        cp = advance(cp, n_max + 1, stops, segment_size, threads)
    return cp, stops


def linf_trail(n: int) -> int:
    """``L_inf(n)`` for a single ``n``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return compute_trail(n)[0].cumsum_linf


def l1_trail(n: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> int:
    """``L_1(n)`` by direct summation of ``||K||_1``; ``L_1(1) = 0``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    total = 0
    last = 0
    for lo in range(1, n + 1, segment_size):
        hi = min(lo + segment_size, n + 1)
        omegas = sieve_big_omega(lo, hi)
        total += int(omegas.sum(dtype=np.int64))
        last = int(omegas[-1])
    # each K in 2..n-1 is visited twice, n once
    return 2 * total - last


def ratio_series(
    stops: PrimeStops, primes: np.ndarray, stride: int
) -> list[tuple[int, float]]:
    """``(k, L_inf(p_k) / p_k)`` for every ``k`` divisible by ``stride``.

    ``primes`` must be aligned with ``stops`` (same offset and length).
    """
    if stride < 1:
        raise DomainError("stride must be >= 1")
    values = stops.values
    if len(primes) != len(values):
        raise DomainError("primes and stops must be aligned")
    first = stops.offset + 1
    start = (-first) % stride
    idx = np.arange(start, len(values), stride)
    return [(first + int(i), int(values[i]) / int(primes[i])) for i in idx]


# ---------------------------------------------------------------------------
# Persistence


@dataclass
class TrailManifest:
    """On-disk checkpoint: the trail state plus where its stops live."""

    next_n: int
    last_norm: int
    cumsum_linf: int
    prime_count: int
    stops_file: str
    format_version: int = FORMAT_VERSION
    from_n: int = 2
    to_n: int = 2
    stops_offset: int = 0

    @property
    def checkpoint(self) -> TrailCheckpoint:
        return TrailCheckpoint(self.next_n, self.last_norm, self.cumsum_linf, self.prime_count)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrailManifest":
        try:
            data = json.loads(text)
            if data.get("format_version") != FORMAT_VERSION:
                raise DataError(f"unsupported checkpoint format {data.get('format_version')!r}")
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise DataError(f"bad checkpoint manifest: {exc}") from exc


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class TrailStore:
    """A checkpoint directory: ``checkpoint.json`` plus one stops file.

    Stops are appended before the checkpoint is replaced, so after a crash the
    stops file may hold a few extra entries; :meth:`open` truncates them.
    """

    def __init__(self, directory: Path, manifest: TrailManifest):
        self.directory = Path(directory)
        self.manifest = manifest

    @property
    def stops_path(self) -> Path:
        return self.directory / self.manifest.stops_file

    @property
    def checkpoint_path(self) -> Path:
        return self.directory / CHECKPOINT_NAME

    @classmethod
    def create(
        cls, directory: str | os.PathLike, start: TrailCheckpoint, to_n: int
    ) -> "TrailStore":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        if (directory / CHECKPOINT_NAME).exists():
            raise DataError(f"{directory} already holds a checkpoint; use resume")
        name = f"stops_{start.next_n}-{to_n}.u64"
        manifest = TrailManifest(
            next_n=start.next_n,
            last_norm=start.last_norm,
            cumsum_linf=start.cumsum_linf,
            prime_count=start.prime_count,
            stops_file=name,
            from_n=start.next_n,
            to_n=to_n,
            stops_offset=start.prime_count,
        )
        store = cls(directory, manifest)
        store.stops_path.write_bytes(b"")
        _write_atomic(store.checkpoint_path, manifest.to_json())
        return store

    @classmethod
    def open(cls, directory: str | os.PathLike) -> "TrailStore":
        directory = Path(directory)
        path = directory / CHECKPOINT_NAME
        if not path.exists():
            raise DataError(f"no checkpoint in {directory}")
        store = cls(directory, TrailManifest.from_json(path.read_text()))
        expected = (store.manifest.prime_count - store.manifest.stops_offset) * STOPS_DTYPE.itemsize
        actual = store.stops_path.stat().st_size if store.stops_path.exists() else -1
        if actual < expected:
            raise DataError(f"{store.stops_path} is shorter than the checkpoint says")
        if actual > expected:
            with open(store.stops_path, "r+b") as fh:
                fh.truncate(expected)
        return store

    def run(
        self,
        to_n: int | None = None,
        segment_size: int = DEFAULT_SEGMENT_SIZE,
        threads: int = 1,
        max_segments: int | None = None,
    ) -> TrailCheckpoint:
        """Process up to and including ``to_n`` (default: the stored target).

        ``max_segments`` stops early after that many segments; the store is left
        resumable, exactly as after a crash.
        """
        if to_n is not None:
            self.manifest.to_n = to_n
        target = self.manifest.to_n
        cp = self.manifest.checkpoint
        done = 0
        with open(self.stops_path, "ab") as fh:

            def persist(new_cp: TrailCheckpoint, new_stops: np.ndarray) -> None:
                nonlocal done
                new_stops.astype(STOPS_DTYPE).tofile(fh)
                fh.flush()
                os.fsync(fh.fileno())
                m = self.manifest
                m.next_n, m.last_norm = new_cp.next_n, new_cp.last_norm
                m.cumsum_linf, m.prime_count = new_cp.cumsum_linf, new_cp.prime_count
                _write_atomic(self.checkpoint_path, m.to_json())
                done += 1
                if max_segments is not None and done >= max_segments:
                    raise _Interrupted

            try:
                cp = advance(cp, target + 1, None, segment_size, threads, persist)
            except _Interrupted:
                pass
        return self.manifest.checkpoint

    def stops(self) -> PrimeStops:
        return PrimeStops.from_file(self.stops_path, offset=self.manifest.stops_offset)


class _Interrupted(Exception):
    pass


def primes_up_to(n_max: int) -> np.ndarray:
    """All primes ``<= n_max`` (int64), sieved without touching the shared cache."""
    if n_max < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n_max + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(n_max) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def nth_prime_upper_bound(k: int) -> int:
    """Rosser-type bound ``p_k < k (ln k + ln ln k)`` valid for ``k >= 6``."""
    if k < 6:
        return 13
    return int(k * (math.log(k) + math.log(math.log(k)))) + 1
