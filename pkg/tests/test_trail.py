import math

import numpy as np
import pytest

from primegrid.analytic import constant_c
from primegrid.errors import DataError, DomainError
from primegrid.signature import factor_signature, norm_one, sieve_big_omega, sieve_norms
from primegrid.trail import (
    PrimeStops,
    TrailCheckpoint,
    TrailManifest,
    TrailStore,
    advance,
    compute_trail,
    hop,
    l1_trail,
    linf_trail,
    primes_up_to,
    ratio_series,
    read_stops,
    stream_trail,
)

from conftest import trial_division_norm

FIRST_TEN_STOPS = [1, 2, 6, 8, 17, 21, 31, 35, 41, 57]


def brute_linf(n):
    return sum(max(trial_division_norm(k), trial_division_norm(k + 1)) for k in range(1, n))


def brute_l1(n):
    return sum(norm_one(factor_signature(k + 1)) + norm_one(factor_signature(k)) for k in range(1, n))


def test_hop():
    assert hop(0, 1) == 1
    assert hop(3, 2) == 3
    assert hop(2, 1) == 2


def test_first_ten_stops():
    _, stops = compute_trail(30)
    assert stops.values.tolist() == FIRST_TEN_STOPS
    assert linf_trail(29) == 57 and linf_trail(5) == 6


def test_linf_matches_brute_force():
    cp, stops = compute_trail(600)
    assert cp.cumsum_linf == brute_linf(600)
    primes = primes_up_to(600)
    assert stops.values.tolist() == [brute_linf(int(p)) for p in primes]


def test_stream_trail_rejects_misaligned_segment():
    with pytest.raises(DomainError):
        stream_trail(sieve_norms(5, 10), TrailCheckpoint.initial())


def test_segmentation_independence_small():
    ref_cp, ref = compute_trail(50_000)
    rng = np.random.default_rng(3)
    cp, stops, lo = TrailCheckpoint.initial(), PrimeStops(), 2
    while lo <= 50_000:
        hi = min(50_001, lo + int(rng.integers(1, 5000)))
        cp = stream_trail(sieve_norms(lo, hi), cp, stops)
        lo = hi
    assert cp == ref_cp
    assert np.array_equal(stops.values, ref.values)


def test_segment_size_and_threads_do_not_matter():
    a = compute_trail(200_000, segment_size=1 << 16)
    b = compute_trail(200_000, segment_size=7919, threads=4)
    assert a[0] == b[0]
    assert np.array_equal(a[1].values, b[1].values)


def test_ratio_series():
    primes = primes_up_to(100)
    _, stops = compute_trail(100)
    rs = ratio_series(stops, primes, 1)
    assert rs[0] == (1, 0.5)
    assert rs[9] == (10, 57 / 29)
    assert [k for k, _ in ratio_series(stops, primes, 5)] == [5, 10, 15, 20, 25]
    with pytest.raises(DomainError):
        ratio_series(stops, primes, 0)
    with pytest.raises(DomainError):
        ratio_series(stops, primes[:-1], 1)


def test_big_trail_checkpoints(big_trail, primes_1e6th):
    cp, stops = big_trail
    assert stops[10**5 - 1] == 2_974_210
    assert stops[10**6 - 1] == 35_437_380
    rs = dict(ratio_series(stops, primes_1e6th, 10**5))
    # the six digits after 2.2883, truncated
    assert math.floor(rs[10**5] * 1e10) == 22883660881
    assert math.floor(rs[10**6] * 1e10) == 22883697214


def test_l1_small():
    assert l1_trail(1) == 0
    assert l1_trail(10) == brute_l1(10)
    assert [l1_trail(n) for n in range(2, 60)] == [brute_l1(n) for n in range(2, 60)]
    assert l1_trail(5000, segment_size=777) == l1_trail(5000)


def l1_table(n):
    # L1(N) for N = 1..n from one pass of big-omega values
    om = sieve_big_omega(1, n + 1).astype(np.int64)
    return 2 * np.cumsum(om) - om


def test_l1_odd_at_primes():
    l1 = l1_table(10**4)
    assert l1[99] == l1_trail(100)
    for p in primes_up_to(10**4):
        assert l1[p - 1] % 2 == 1


def test_trail_ordering():
    n = 10**5
    l1 = l1_table(n)
    norms = sieve_norms(1, n + 1).norms.astype(np.int64)
    linf = np.concatenate(([0], np.cumsum(np.maximum(norms[1:], norms[:-1]))))
    assert linf[99] == linf_trail(100)
    nn = np.arange(1, n + 1)
    # L_inf(4) = 1 + 1 + 2 = 4, so the strict lower inequality starts at N = 5
    assert linf[3] == 4 and l1[3] > 4
    assert np.all((nn[4:] < linf[4:]) & (linf[4:] < l1[4:]))


def test_l1_sandwich():
    gamma = 0.5772156649015329
    for n in (10**3, 10**4, 10**5):
        val = l1_trail(n) + norm_one(factor_signature(n))
        assert 2 * n * (math.log(math.log(n)) - math.log(math.pi**2 / 6)) <= val
        assert val <= 2 * n * math.log(n) - 4 * (1 - gamma) * n + 50 * math.sqrt(n)


def test_linear_sandwich_1e7():
    c = constant_c()
    r = linf_trail(10**7) / 10**7
    assert c - 0.01 < r < 2 * c + 0.01


def test_linf_domain():
    with pytest.raises(DomainError):
        linf_trail(0)
    with pytest.raises(DomainError):
        l1_trail(0)
    assert linf_trail(1) == 0


def test_manifest_round_trip():
    m = TrailManifest(10, 1, 25, 4, "stops_2-9.u64", to_n=9)
    assert TrailManifest.from_json(m.to_json()) == m
    assert m.checkpoint == TrailCheckpoint(10, 1, 25, 4)
    with pytest.raises(DataError):
        TrailManifest.from_json('{"format_version": 99}')
    with pytest.raises(DataError):
        TrailManifest.from_json("not json")


def test_store_kill_and_resume_is_byte_identical(tmp_path):
    full = TrailStore.create(tmp_path / "full", TrailCheckpoint.initial(), 300_000)
    full.run(segment_size=10_000)
    part = TrailStore.create(tmp_path / "part", TrailCheckpoint.initial(), 300_000)
    part.run(segment_size=10_000, max_segments=7)
    # a crash between the stops append and the checkpoint write leaves extra bytes
    with open(part.stops_path, "ab") as fh:
        fh.write(b"\x01" * 24)
    again = TrailStore.open(tmp_path / "part")
    again.run(segment_size=10_000)
    assert again.stops_path.read_bytes() == full.stops_path.read_bytes()
    assert again.checkpoint_path.read_text() == full.checkpoint_path.read_text()
    _, ref = compute_trail(300_000)
    assert np.array_equal(read_stops(full.stops_path), ref.values)


def test_store_errors(tmp_path):
    TrailStore.create(tmp_path, TrailCheckpoint.initial(), 100)
    with pytest.raises(DataError):
        TrailStore.create(tmp_path, TrailCheckpoint.initial(), 100)
    with pytest.raises(DataError):
        TrailStore.open(tmp_path / "missing")
    (tmp_path / "bad.u64").write_bytes(b"\x00" * 5)
    with pytest.raises(DataError):
        read_stops(tmp_path / "bad.u64")


def test_stops_files_concatenate(tmp_path):
    cp, _ = compute_trail(100_000)
    a = TrailStore.create(tmp_path / "a", TrailCheckpoint.initial(), 100_000)
    a.run()
    b = TrailStore.create(tmp_path / "b", cp, 250_000)
    b.run(segment_size=30_000)
    joined = a.stops_path.read_bytes() + b.stops_path.read_bytes()
    c = TrailStore.create(tmp_path / "c", TrailCheckpoint.initial(), 250_000)
    c.run()
    assert joined == c.stops_path.read_bytes()
    assert b.stops().offset == cp.prime_count


def test_advance_callback_sees_every_segment():
    seen = []
    advance(TrailCheckpoint.initial(), 1001, segment_size=100, on_segment=lambda cp, s: seen.append(cp.next_n))
    assert seen == list(range(102, 1001, 100)) + [1001]
