"""Exact best transformers, test suites, and the scoring functions."""

import itertools

import numpy as np
import pytest

from absynth.concrete_ops import get_op
from absynth.domains import AbstractValue, Domain, enumerate_values, leq, parse_value, size
from absynth.dsl import parse_transformers, trivial_top
from absynth.oracle import (
    ScoringContext,
    TierPolicy,
    best_transformer,
    gen_suite,
    improvement_score,
    imprecise_subset,
    norm,
    soundness_score,
)
from conftest import naive_best

KB = Domain.KNOWN_BITS

AND_KB = """
fn f0(L.zero, L.one, R.zero, R.one) -> kb {
  %v0 = or L.zero R.zero
  %v1 = and L.one R.one
  return %v0, %v1
}
"""

OR_KB = """
fn f0(L.zero, L.one, R.zero, R.one) -> kb {
  %v0 = and L.zero R.zero
  %v1 = or L.one R.one
  return %v0, %v1
}
"""

XOR_KB = """
fn f0(L.zero, L.one, R.zero, R.one) -> kb {
  %v0 = and L.zero R.zero
  %v1 = and L.one R.one
  %v2 = or %v0 %v1
  %v3 = and L.zero R.one
  %v4 = and L.one R.zero
  %v5 = or %v3 %v4
  return %v2, %v5
}
"""

CLOSED_FORMS = {"And": AND_KB, "Or": OR_KB, "Xor": XOR_KB}


@pytest.mark.parametrize("op_id", ["And", "Or", "Xor", "Add", "Umax", "Abs", "PopCount"])
@pytest.mark.parametrize("domain", list(Domain), ids=lambda d: d.value)
def test_best_matches_brute_force(op_id, domain):
    op = get_op(op_id)
    rng = np.random.default_rng(1)
    for w in (1, 2, 3):
        vals = list(enumerate_values(domain, w))
        picks = [tuple(vals[rng.integers(len(vals))] for _ in range(op.arity))
                 for _ in range(25)]
        for inputs in picks:
            got = best_transformer(op, inputs, domain)
            want = naive_best(op, inputs, domain)
            assert got == want, (op_id, domain, w, inputs)


def test_best_toy_example():
    op = get_op("Umax")
    a = parse_value("[0,3]", Domain.URANGE, 4)
    b = parse_value("[2,2]", Domain.URANGE, 4)
    assert str(best_transformer(op, (a, b), Domain.URANGE)) == "[2,3]"


def test_best_refuses_wide_inputs():
    from absynth.domains import top
    with pytest.raises(ValueError):
        best_transformer(get_op("And"), (top(KB, 9), top(KB, 9)), KB)


def _small_suite(op_id="And", domain=KB, seed=0):
    policy = TierPolicy(small_widths=(1, 2, 3, 4), mid_widths=(), large_widths=())
    return gen_suite(get_op(op_id), domain, policy, np.random.default_rng(seed))


def test_suite_case_counts():
    suite = _small_suite()
    per_width = {t.width: len(t.best_a) for t in suite.tiers}
    assert per_width == {w: (3 ** w) ** 2 for w in (1, 2, 3, 4)}
    assert sum(per_width.values()) == 7380


def test_suite_is_deterministic_and_cached(tmp_path):
    policy = TierPolicy(small_widths=(1, 2), mid_widths=(5,), mid_samples=50,
                        large_widths=())
    op = get_op("Add")
    s1 = gen_suite(op, Domain.URANGE, policy, np.random.default_rng(9), cache_dir=tmp_path)
    s2 = gen_suite(op, Domain.URANGE, policy, np.random.default_rng(9), cache_dir=tmp_path)
    for t1, t2 in zip(s1.tiers, s2.tiers):
        assert all(np.array_equal(a, b) for a, b in zip(t1.slots, t2.slots))
        assert np.array_equal(t1.best_a, t2.best_a)
    assert list(tmp_path.iterdir())


def test_closed_forms_are_exact_on_small_widths():
    """The textbook known-bits transformers achieve the oracle everywhere."""
    for op_id, text in CLOSED_FORMS.items():
        (t,) = parse_transformers(text)
        suite = _small_suite(op_id)
        assert soundness_score(t, suite) == 1.0
        assert norm(t, suite) == norm(lambda tier, d: (tier.best_a, tier.best_b, tier.best_bottom), suite)


def test_soundness_counts_and_top_is_always_sound():
    suite = _small_suite()
    top_t = trivial_top("t", KB)
    assert soundness_score(top_t, suite) == 1.0
    bad = parse_transformers("""
fn f0(L.zero, L.one, R.zero, R.one) -> kb {
  return #all_ones, #zero
}
""")[0]
    # claiming "all bits zero" is only sound when the result is exactly 0
    s = soundness_score(bad, suite)
    assert 0.0 < s < 1.0


def test_norm_is_sum_of_sizes():
    suite = _small_suite("And", KB)
    top_t = trivial_top("t", KB)
    want = sum(t.width * len(t.best_a) for t in suite.tiers)
    assert norm(top_t, suite) == want
    # exact best over widths 1-4 for And on known bits, computed independently
    (and_t,) = parse_transformers(AND_KB)
    best_total = 0
    for w in (1, 2, 3, 4):
        for l, r in itertools.product(enumerate_values(KB, w), repeat=2):
            best_total += size(naive_best(get_op("And"), (l, r), KB))
    assert norm(and_t, suite) == best_total


def test_meet_norm_never_exceeds_either_member():
    suite = _small_suite("Add", Domain.URANGE)
    (f,) = parse_transformers("""
fn f0(L.lo, L.hi, R.lo, R.hi) -> cru {
  %v0 = add L.lo R.lo
  %v1 = add L.hi R.hi
  return %v0, %v1
}
""")
    g = trivial_top("g", Domain.URANGE)
    both = norm([f, g], suite)
    assert both <= min(norm([f], suite), norm([g], suite))


def test_improvement_closed_form():
    suite = _small_suite("And", KB)
    (f,) = parse_transformers(AND_KB)
    g = trivial_top("g", KB)
    # f is exact and below g, so it recovers exactly the gap between the
    # baseline's norm and the best achievable norm on the imprecise cases
    sub = imprecise_subset(suite, [g])
    imp = improvement_score(f, [g], suite, sub)
    want = (norm([g], suite, sub) - norm([f], suite, sub)) / norm([g], suite, sub)
    assert 0.0 < imp <= 1.0
    assert imp == pytest.approx(want)
    # a transformer cannot improve on itself
    assert improvement_score(g, [g], suite, sub) == 0.0
    # an exact meet leaves no imprecise cases, so the measure is undefined
    with pytest.raises(ZeroDivisionError):
        improvement_score(g, [f], suite, imprecise_subset(suite, [f]))


def test_scoring_context_matches_direct_scoring():
    suite = _small_suite("Xor", KB)
    g = trivial_top("g", KB)
    ctx = ScoringContext(suite, [g])
    rng = np.random.default_rng(2)
    from absynth.bitvec import DSL_SUBSETS
    from absynth.dsl import GuardedTransformer, random_program
    sub = imprecise_subset(suite, [g])
    for _ in range(10):
        t = GuardedTransformer(
            name="c", body=random_program("c", KB, rng, DSL_SUBSETS["full"], 8))
        s, i = ctx.score(t)
        assert s == pytest.approx(soundness_score(t, suite))
        if s > 0:
            assert i == pytest.approx(improvement_score(t, [g], suite, sub))
