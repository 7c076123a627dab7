"""Lattice laws, counting, and text round-trips for the three abstract domains."""

import itertools

import numpy as np
import pytest

from absynth.bitvec import BitVec
from absynth.domains import (
    AbstractValue,
    Domain,
    beta,
    concretize,
    contains,
    count_values,
    enumerate_values,
    is_top,
    join,
    leq,
    meet,
    parse_value,
    sample,
    size,
    top,
)
from conftest import naive_alpha, naive_gamma

DOMAINS = list(Domain)
SMALL = (1, 2, 3)


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_enumeration_counts(domain):
    for w in (1, 2, 3, 4):
        vals = list(enumerate_values(domain, w))
        expect = 3 ** w if domain is Domain.KNOWN_BITS else (1 << w) * ((1 << w) + 1) // 2
        assert count_values(domain, w) == expect
        assert len(vals) == expect
        assert len(set(vals)) == expect
        for v in vals:
            assert not v.bottom
            assert naive_gamma(v), f"{v} enumerated but empty"
        # every value is reachable: distinct concretizations only for kb
        if domain is Domain.KNOWN_BITS:
            assert len({frozenset(naive_gamma(v)) for v in vals}) == expect


def test_totals_over_small_widths():
    assert sum(count_values(Domain.KNOWN_BITS, w) for w in (1, 2, 3, 4)) == 120
    for d in (Domain.URANGE, Domain.SRANGE):
        assert sum(count_values(d, w) for w in (1, 2, 3, 4)) == 185


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_membership_matches_gamma(domain):
    for w in SMALL:
        for v in enumerate_values(domain, w):
            g = naive_gamma(v)
            got = set(concretize(v))
            assert {c.bits for c in got} == g
            for c in range(1 << w):
                assert contains(v, BitVec(w, c)) == (c in g)


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_partial_order_is_gamma_inclusion(domain):
    for w in (1, 2):
        vals = list(enumerate_values(domain, w))
        for u, v in itertools.product(vals, repeat=2):
            assert leq(u, v) == (naive_gamma(u) <= naive_gamma(v)), (u, v)


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_meet_is_greatest_lower_bound(domain):
    for w in (1, 2):
        vals = list(enumerate_values(domain, w))
        bot = AbstractValue(domain, w, 0, 0, bottom=True)
        for u, v in itertools.product(vals, repeat=2):
            m = meet(u, v)
            inter = naive_gamma(u) & naive_gamma(v)
            if m.bottom:
                # the ranges and known bits both represent all intersections
                # of their own values exactly, so bottom means truly empty
                assert not inter
                continue
            assert naive_gamma(m) == naive_gamma(naive_alpha(inter, domain, w))
            assert leq(m, u) and leq(m, v)
            for x in vals:
                if leq(x, u) and leq(x, v):
                    assert leq(x, m)
        assert meet(bot, vals[0]).bottom and meet(vals[0], bot).bottom


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_join_is_least_upper_bound(domain):
    for w in (1, 2):
        vals = list(enumerate_values(domain, w))
        for u, v in itertools.product(vals, repeat=2):
            j = join(u, v)
            assert leq(u, j) and leq(v, j)
            for x in vals:
                if leq(u, x) and leq(v, x):
                    assert leq(j, x)


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_beta_is_exact_singleton(domain):
    for w in SMALL:
        for c in range(1 << w):
            v = beta(BitVec(w, c), domain)
            assert naive_gamma(v) == {c}


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_top_and_size(domain):
    for w in (1, 2, 3, 4, 8):
        t = top(domain, w)
        assert is_top(t)
        if w <= 4:
            assert naive_gamma(t) == set(range(1 << w))
        assert size(t) == (w if domain is Domain.KNOWN_BITS else w - 1)
    # imprecision is monotone in the order
    for w in (1, 2):
        for d in DOMAINS:
            vals = list(enumerate_values(d, w))
            for u, v in itertools.product(vals, repeat=2):
                if leq(u, v):
                    assert size(u) <= size(v)


def test_size_examples():
    assert size(parse_value("??01", Domain.KNOWN_BITS, 4)) == 2
    assert size(parse_value("0000", Domain.KNOWN_BITS, 4)) == 0
    assert size(parse_value("[5,5]", Domain.URANGE, 4)) == 0
    assert size(parse_value("[0,3]", Domain.URANGE, 4)) == 1
    assert size(parse_value("[0,15]", Domain.URANGE, 4)) == 3
    assert size(parse_value("[-8,7]", Domain.SRANGE, 4)) == 3


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_text_round_trip(domain):
    for w in SMALL:
        for v in enumerate_values(domain, w):
            assert parse_value(str(v), domain, w) == v
    with pytest.raises(ValueError):
        parse_value("?2?1", Domain.KNOWN_BITS, 4)
    with pytest.raises(ValueError):
        parse_value("[3,2]", Domain.URANGE, 4)


def test_signed_range_examples():
    v = parse_value("[-3,2]", Domain.SRANGE, 4)
    assert naive_gamma(v) == {13, 14, 15, 0, 1, 2}
    assert str(v) == "[-3,2]"
    with pytest.raises(ValueError):
        parse_value("[2,-3]", Domain.SRANGE, 4)


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.value)
def test_sampling_is_valid_and_covering(domain):
    rng = np.random.default_rng(7)
    for w in (1, 3, 8, 64):
        seen = set()
        for _ in range(300):
            v = sample(domain, w, rng)
            assert v.width == w and not v.bottom
            if w <= 3:
                assert naive_gamma(v)
                seen.add(v)
        if w == 1:
            assert len(seen) == count_values(domain, 1)
