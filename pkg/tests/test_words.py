import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from primegrid.errors import DomainError, ResourceError
from primegrid.signature import factor_signature, iter_segments, norm_inf, sieve_norms
from primegrid.words import (
    congruences_hold,
    contains_forbidden,
    crt,
    crt_locate,
    find_forbidden,
    is_forbidden,
    parse_word,
    scan_forbidden,
    search_word,
    word_norms,
)

WORD_LOCATIONS = [
    ("17,30", (2, 3), 1, 27_699_975_238_617_792_512),
    ("1,15,3,14", (2, 3, 5, 7), 7, 18_890_469_353_465_057_219_498),
    ("1,2,2,1,3,5,2,1", (3, 2, 5, 7, 11, 13, 17, 19), 16, 93_377_215_627_231_323),
]
SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_parse_word():
    assert parse_word("1111") == (1, 1, 1, 1)
    assert parse_word("17,30") == (17, 30)
    assert parse_word([1, 2]) == (1, 2)
    for bad in ("", "0", "1,-2"):
        with pytest.raises(DomainError):
            parse_word(bad)


def test_is_forbidden():
    assert is_forbidden((1, 1, 1, 1))
    assert not is_forbidden((1, 1, 1, 2))
    assert not is_forbidden((1, 1, 2))
    assert is_forbidden(parse_word("11121112"))
    assert not is_forbidden(parse_word("11131112"))
    assert is_forbidden((3,) * 16) and not is_forbidden((4,) * 16)
    assert contains_forbidden(parse_word("2111121"))
    assert not contains_forbidden(parse_word("1112111"))


def test_find_forbidden_synthetic():
    v = find_forbidden(np.ones(4, dtype=np.uint8), 3)
    assert [(x.family, x.start, x.length) for x in v] == [(1, 0, 4)]
    v = find_forbidden(np.array([1, 2, 1, 1, 2, 1, 1, 2]), 3)
    assert [(x.family, x.length) for x in v] == [(2, 8)]
    assert scan_forbidden(np.array([1, 2, 1, 2, 1]), 2) == []


def test_find_forbidden_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(30):
        letters = rng.integers(1, 4, size=40)
        got = {(v.family, v.start) for v in find_forbidden(letters, 4)}
        want = {
            (n, s)
            for n in range(1, 5)
            for s in range(0, 41 - 2 ** (n + 1))
            if is_forbidden(letters[s : s + 2 ** (n + 1)].tolist())
        }
        assert got == want


def test_true_norms_have_no_forbidden_words():
    for seg in iter_segments(2, 10**6 + 1):
        assert scan_forbidden(seg, 5) == []


def test_crt():
    assert crt([2, 3, 2], [3, 5, 7]) == (23, 105)
    with pytest.raises(DomainError):
        crt([0, 0], [4, 6])


def test_crt_locate_small_examples():
    assert crt_locate("111", (5, 2, 7)) == (5, 70)
    assert crt_locate("111", (2, 3, 5)) == (8, 30)
    with pytest.raises(DomainError):
        crt_locate("111", (2, 2, 5))
    with pytest.raises(DomainError):
        crt_locate("11", (2, 9))
    with pytest.raises(DomainError):
        crt_locate("11", (2, 3, 5))


def test_111_with_2_3_5_is_impossible():
    # x = 8 (mod 30), so x and x + 2 are both even; one of them is 0 mod 4
    x, m = crt_locate("111", (2, 3, 5))
    for k in range(4):
        loc = x + k * m
        assert loc % 2 == 0 and (loc % 4 == 0 or (loc + 2) % 4 == 0)
    assert search_word("111", (2, 3, 5), k_max=100) is None


def test_search_word_small():
    assert search_word("111", (5, 2, 7), k_max=0) == (5, 0)
    assert word_norms(5, 3) == [1, 1, 1]


@pytest.mark.parametrize("word,primes,k,location", WORD_LOCATIONS)
def test_word_locations(word, primes, k, location):
    w = parse_word(word)
    x, m = crt_locate(w, primes)
    assert x + k * m == location
    assert congruences_hold(location, w, primes)
    assert search_word(w, primes, k_max=k + 5, time_budget=60, total_budget=300) == (location, k)
    assert word_norms(location, len(w)) == list(w)


def test_word_location_witness():
    loc = WORD_LOCATIONS[0][3]
    assert loc % 2**17 == 0 and (loc + 1) % 3**30 == 0


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_crt_locate_property(data):
    n = data.draw(st.integers(1, 6))
    primes = data.draw(st.permutations(SMALL_PRIMES))[:n]
    word = data.draw(st.lists(st.integers(1, 6), min_size=n, max_size=n))
    x, m = crt_locate(word, primes)
    assert 1 <= x <= m == math.prod(p**w for p, w in zip(primes, word))
    assert congruences_hold(x, word, primes)
    for i, w in enumerate(word):
        assert norm_inf(factor_signature(x + i)) >= w


def test_found_locations_match_sieve():
    for word, primes in (("111", (5, 2, 7)), ("121", (3, 2, 5)), ("2112", (2, 3, 5, 7))):
        hit = search_word(word, primes, k_max=1000)
        assert hit is not None
        loc, _ = hit
        assert sieve_norms(loc, loc + len(parse_word(word))).norms.tolist() == list(parse_word(word))


def test_total_budget_raises():
    with pytest.raises(ResourceError):
        search_word("111", (2, 3, 5), k_max=10**9, total_budget=0.05)
