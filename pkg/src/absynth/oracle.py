"""Ground truth and scoring.

Computes the best abstract transformer (abstraction of the image of the
concretization), generates tiered test suites, and scores candidate
transformers for soundness, improvement, and norm.

Tier layout:
  widths 1-4   exhaustive abstract pairs, exact best outputs
  widths 5-8   sampled abstract pairs, exact best (enumeration still cheap)
  widths 9-64  sampled abstract pairs, sampled concretizations; best
               outputs are under-approximations of the true best

Suites are immutable after generation and scoring is read-only; an
optional on-disk cache keyed by (op, domain, policy, seed) skips
regeneration across runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from . import batch
from .batch import U64
from .bitvec import BitVec
from .concrete_ops import ConcreteOp
from .domains import (
    AbstractValue,
    Domain,
    beta,
    count_values,
    enumerate_values,
    join,
    sample,
    top,
)
from .dsl import GuardedTransformer, eval_program_batch

_ENUM_BUDGET_WIDTH = 8


# ---- vectorized lattice helpers (single scalar width) ----------------


def _order(domain: Domain, x, width):
    return batch._sign_flip(x, width) if domain is Domain.SRANGE else x


def v_valid(domain: Domain, a, b, width):
    """Well-formedness of raw component arrays."""
    if domain is Domain.KNOWN_BITS:
        return (a & b) == U64(0)
    return _order(domain, a, width) <= _order(domain, b, width)


def v_size(domain: Domain, a, b, width, bottom):
    if domain is Domain.KNOWN_BITS:
        sz = batch.popcount(~(a | b) & batch.mask_of(width))
    else:
        gap = (b - a) & batch.mask_of(width)
        bl = batch.bit_length(gap)
        sz = np.where(bl == U64(0), U64(0), bl - U64(1))
    return np.where(bottom, U64(0), sz)


def v_contains_value(domain: Domain, ca, cb, cbot, ba, bb, bbot, width):
    """Order test: does candidate (c*) contain best (b*), i.e. b ⊑ c."""
    if domain is Domain.KNOWN_BITS:
        ok = ((ca & ~ba) == U64(0)) & ((cb & ~bb) == U64(0))
    else:
        ok = (_order(domain, ca, width) <= _order(domain, ba, width)) & (
            _order(domain, bb, width) <= _order(domain, cb, width)
        )
    return bbot | (ok & ~cbot)


def v_meet(domain: Domain, a1, b1, bot1, a2, b2, bot2, width):
    if domain is Domain.KNOWN_BITS:
        a, b = a1 | a2, b1 | b2
        bot = bot1 | bot2 | ((a & b) != U64(0))
    else:
        o1, o2 = _order(domain, a1, width), _order(domain, a2, width)
        a = np.where(o1 >= o2, a1, a2)
        h1, h2 = _order(domain, b1, width), _order(domain, b2, width)
        b = np.where(h1 <= h2, b1, b2)
        bot = bot1 | bot2 | (np.maximum(o1, o2) > np.minimum(h1, h2))
    return a, b, bot


def _top_components(domain: Domain, width: int) -> tuple[int, int]:
    t = top(domain, width)
    return t.a, t.b


# ---- precomputed concrete-op tables ----------------------------------

_table_cache: dict[tuple[str, int], tuple[np.ndarray, np.ndarray | None]] = {}


def op_table(op: ConcreteOp, width: int):
    """Full result table (and admissibility mask) at an enumerable width."""
    if width > _ENUM_BUDGET_WIDTH:
        raise ValueError(f"width {width} exceeds the enumeration budget")
    key = (op.id, width)
    if key not in _table_cache:
        n = 1 << width
        xs = np.arange(n, dtype=U64)
        w = U64(width)
        if op.arity == 1:
            f = np.asarray(op.batch_fn(xs, w), dtype=U64)
            a = None if op.batch_constraint is None else np.asarray(op.batch_constraint(xs, w))
        else:
            g1, g2 = np.meshgrid(xs, xs, indexing="ij")
            f = np.asarray(op.batch_fn(g1.ravel(), g2.ravel(), w), dtype=U64).reshape(n, n)
            a = None
            if op.batch_constraint is not None:
                a = np.asarray(op.batch_constraint(g1.ravel(), g2.ravel(), w)).reshape(n, n)
        _table_cache[key] = (f, a)
    return _table_cache[key]


def _gamma_indices(v: AbstractValue) -> np.ndarray:
    """Concrete members of v as uint64 indices (width <= budget)."""
    w = v.width
    if v.bottom:
        return np.empty(0, dtype=U64)
    if v.domain is Domain.KNOWN_BITS:
        xs = np.arange(1 << w, dtype=U64)
        return xs[((xs & U64(v.a)) == U64(0)) & ((xs & U64(v.one)) == U64(v.one))]
    lo, hi = v.a, v.b
    span = (hi - lo) & ((1 << w) - 1)
    return (U64(lo) + np.arange(span + 1, dtype=U64)) & v_full_mask(w)


def v_full_mask(width: int):
    return batch.mask_of(np.uint64(width))


def _alpha_of_values(domain: Domain, vals: np.ndarray, width: int) -> AbstractValue:
    if vals.size == 0:
        return AbstractValue.make_bottom(domain, width)
    mask = int(v_full_mask(width))
    if domain is Domain.KNOWN_BITS:
        one = int(np.bitwise_and.reduce(vals))
        zero = int(np.bitwise_and.reduce(~vals)) & mask
        return AbstractValue(domain, width, zero, one)
    order = _order(domain, vals, U64(width))
    lo = int(vals[np.argmin(order)])
    hi = int(vals[np.argmax(order)])
    return AbstractValue(domain, width, lo, hi)


# per-left-value partial reductions, cached per (op, width, left value)
_stage1_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _stage1(op: ConcreteOp, left: AbstractValue):
    """Reduce the op table over the left concretization.

    Returns (reduced[y], count[y]) where reduced[y] aggregates
    F[x, y] over admissible x in gamma(left): bitwise AND of values and
    of complements for KnownBits outputs is recovered later, so here we
    keep per-y (and_vals, or_vals) for KB and (min, max) for ranges by
    storing two arrays.
    """
    key = (op.id, left)
    if key in _stage1_cache:
        return _stage1_cache[key]
    f, adm = op_table(op, left.width)
    ix = _gamma_indices(left)
    sub = f[ix]  # (k, n)
    if adm is not None:
        ok = adm[ix]
    else:
        ok = np.ones(sub.shape, dtype=bool)
    cnt = ok.sum(axis=0).astype(U64)
    mask = v_full_mask(left.width)
    and_vals = np.bitwise_and.reduce(np.where(ok, sub, mask), axis=0) if sub.size else np.full(f.shape[1], mask)
    or_vals = np.bitwise_or.reduce(np.where(ok, sub, U64(0)), axis=0) if sub.size else np.zeros(f.shape[1], dtype=U64)
    res = (np.stack([and_vals, or_vals]), cnt)
    if len(_stage1_cache) > 4096:
        _stage1_cache.clear()
    _stage1_cache[key] = res
    return res


def best_transformer(op: ConcreteOp, inputs: tuple[AbstractValue, ...], domain: Domain | None = None) -> AbstractValue:
    """Abstraction of the op's image over the inputs' concretizations.

    Exact; refuses widths above the enumeration budget.
    """
    dom = domain or inputs[0].domain
    width = inputs[0].width
    if width > _ENUM_BUDGET_WIDTH:
        raise ValueError(f"width {width} exceeds the enumeration budget")
    if any(v.bottom for v in inputs):
        return AbstractValue.make_bottom(dom, width)
    f, adm = op_table(op, width)
    if op.arity == 1:
        ix = _gamma_indices(inputs[0])
        vals = f[ix]
        if adm is not None:
            vals = vals[adm[ix]]
        return _alpha_of_values(dom, vals, width)
    ix2 = _gamma_indices(inputs[1])
    if dom is Domain.KNOWN_BITS:
        (stacked, cnt) = _stage1(op, inputs[0])
        and_vals, or_vals = stacked[0][ix2], stacked[1][ix2]
        ok = cnt[ix2] > 0
        if not ok.any():
            return AbstractValue.make_bottom(dom, width)
        mask = int(v_full_mask(width))
        one = int(np.bitwise_and.reduce(np.where(ok, and_vals, v_full_mask(width))))
        zero = int(np.bitwise_and.reduce(np.where(ok, ~or_vals, v_full_mask(width)))) & mask
        return AbstractValue(dom, width, zero, one)
    # ranges: reuse the raw table with a gathered submatrix
    ix1 = _gamma_indices(inputs[0])
    sub = f[np.ix_(ix1, ix2)]
    if adm is not None:
        keep = adm[np.ix_(ix1, ix2)]
        vals = sub[keep]
    else:
        vals = sub.ravel()
    return _alpha_of_values(dom, vals, width)


# ---- suites ----------------------------------------------------------


@dataclass(frozen=True)
class TierPolicy:
    small_widths: tuple[int, ...] = (1, 2, 3, 4)
    mid_widths: tuple[int, ...] = (5, 6, 7, 8)
    large_widths: tuple[int, ...] = (64,)
    mid_samples: int = 1000
    large_samples: int = 10000
    large_concrete_samples: int = 10000

    def key(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, default=str)


@dataclass(frozen=True)
class Tier:
    width: int
    # component arrays, 2 per abstract input (a, b interleaved)
    slots: tuple[np.ndarray, ...]
    best_a: np.ndarray
    best_b: np.ndarray
    best_bottom: np.ndarray
    exact: bool

    @property
    def n(self) -> int:
        return len(self.best_a)


@dataclass(frozen=True)
class TestCase:
    inputs: tuple[AbstractValue, ...]
    best_output: AbstractValue
    exhaustive_concrete: bool


@dataclass(frozen=True)
class TestSuite:
    op_id: str
    domain: Domain
    arity: int
    tiers: tuple[Tier, ...]
    policy: TierPolicy

    def cases(self) -> Iterator[TestCase]:
        for t in self.tiers:
            dom, w = self.domain, t.width
            for i in range(t.n):
                ins = tuple(
                    AbstractValue(dom, w, int(t.slots[2 * k][i]), int(t.slots[2 * k + 1][i]))
                    for k in range(self.arity)
                )
                if t.best_bottom[i]:
                    out = AbstractValue.make_bottom(dom, w)
                else:
                    out = AbstractValue(dom, w, int(t.best_a[i]), int(t.best_b[i]))
                yield TestCase(ins, out, t.exact)


def _sample_concrete(domain: Domain, a, b, width: int, rng: np.random.Generator, n: int):
    """Uniform-ish concrete members of one abstract value, vectorized."""
    rnd = rng.integers(0, 1 << 64, n, dtype=U64)
    mask = v_full_mask(width)
    if domain is Domain.KNOWN_BITS:
        unknown = ~(a | b) & mask
        return (rnd & unknown) | b  # b holds the known-one bits
    span = (b - a) & mask
    if int(span) == int(mask) and width == 64:
        return rnd
    return (a + rnd % (span + U64(1))) & mask


def _best_sampled(op: ConcreteOp, domain: Domain, slots, width: int, rng, k: int):
    """Under-approximate best via sampled admissible concretizations."""
    n = len(slots[0])
    w = U64(width)
    mask = v_full_mask(width)
    out_a = np.zeros(n, dtype=U64)
    out_b = np.zeros(n, dtype=U64)
    out_bot = np.ones(n, dtype=bool)
    have = np.zeros(n, dtype=bool)
    for i in range(n):
        c1 = _sample_concrete(domain, slots[0][i], slots[1][i], width, rng, k)
        args = [c1]
        if op.arity == 2:
            args.append(_sample_concrete(domain, slots[2][i], slots[3][i], width, rng, k))
        if op.batch_constraint is not None:
            ok = np.asarray(op.batch_constraint(*args, w))
            args = [a[ok] for a in args]
        if len(args[0]) == 0:
            continue
        vals = np.asarray(op.batch_fn(*args, w), dtype=U64)
        v = _alpha_of_values(domain, vals, width)
        out_a[i], out_b[i], out_bot[i] = v.a, v.b, False
        have[i] = True
    return out_a, out_b, out_bot


def _exhaustive_tier(op: ConcreteOp, domain: Domain, width: int) -> Tier:
    values = list(enumerate_values(domain, width))
    if op.arity == 1:
        pairs = [(v,) for v in values]
    else:
        pairs = [(l, r) for l in values for r in values]
    return _exact_tier(op, domain, width, pairs)


def _exact_tier(op: ConcreteOp, domain: Domain, width: int, pairs) -> Tier:
    n = len(pairs)
    slots = [np.empty(n, dtype=U64) for _ in range(2 * op.arity)]
    ba = np.zeros(n, dtype=U64)
    bb = np.zeros(n, dtype=U64)
    bbot = np.zeros(n, dtype=bool)
    for i, ins in enumerate(pairs):
        for k, v in enumerate(ins):
            slots[2 * k][i], slots[2 * k + 1][i] = v.a, v.b
        best = best_transformer(op, ins, domain)
        if best.bottom:
            bbot[i] = True
        else:
            ba[i], bb[i] = best.a, best.b
    return Tier(width, tuple(slots), ba, bb, bbot, exact=True)


def gen_suite(
    op: ConcreteOp,
    domain: Domain,
    policy: TierPolicy,
    rng: np.random.Generator,
    cache_dir: str | Path | None = None,
) -> TestSuite:
    """Build (or load) the tiered suite for one op and domain."""
    seed_probe = int(rng.integers(0, 1 << 32))  # consumed either way, keys the cache
    cache_path = None
    if cache_dir is not None:
        tag = hashlib.sha256(
            f"{op.id}|{domain.value}|{policy.key()}|{seed_probe}|v1".encode()
        ).hexdigest()[:24]
        cache_path = Path(cache_dir) / f"suite_{tag}.npz"
        if cache_path.exists():
            return _load_suite(cache_path, op, domain, policy)
    sub_rng = np.random.default_rng(seed_probe)
    tiers: list[Tier] = []
    for w in policy.small_widths:
        tiers.append(_exhaustive_tier(op, domain, w))
    for w in policy.mid_widths:
        pairs = [
            tuple(sample(domain, w, sub_rng) for _ in range(op.arity))
            for _ in range(policy.mid_samples)
        ]
        tiers.append(_exact_tier(op, domain, w, pairs))
    for w in policy.large_widths:
        tiers.append(_large_tier(op, domain, w, policy, sub_rng))
    suite = TestSuite(op.id, domain, op.arity, tuple(tiers), policy)
    if cache_path is not None:
        _save_suite(suite, cache_path)
    return suite


def _large_tier(op, domain, w, policy, rng) -> Tier:
    kept_slots = [[] for _ in range(2 * op.arity)]
    kept = 0
    attempts = 0
    pend_a, pend_b, pend_bot = [], [], []
    while kept < policy.large_samples and attempts < policy.large_samples * 20:
        attempts += 1
        ins = tuple(sample(domain, w, rng) for _ in range(op.arity))
        slots = [np.array([x], dtype=U64) for v in ins for x in (v.a, v.b)]
        a, b, bot = _best_sampled(op, domain, slots, w, rng, policy.large_concrete_samples)
        if bot[0]:
            continue  # empty admissible set: skip, excluded from the count
        for j, s in enumerate(slots):
            kept_slots[j].append(s[0])
        pend_a.append(a[0])
        pend_b.append(b[0])
        pend_bot.append(False)
        kept += 1
    return Tier(
        w,
        tuple(np.array(s, dtype=U64) for s in kept_slots),
        np.array(pend_a, dtype=U64),
        np.array(pend_b, dtype=U64),
        np.array(pend_bot, dtype=bool),
        exact=False,
    )


def _save_suite(suite: TestSuite, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {}
    meta = []
    for i, t in enumerate(suite.tiers):
        meta.append({"width": t.width, "exact": t.exact, "n_slots": len(t.slots)})
        for j, s in enumerate(t.slots):
            payload[f"t{i}_s{j}"] = s
        payload[f"t{i}_ba"] = t.best_a
        payload[f"t{i}_bb"] = t.best_b
        payload[f"t{i}_bot"] = t.best_bottom
    payload["meta"] = np.frombuffer(
        json.dumps({"tiers": meta, "op": suite.op_id, "domain": suite.domain.value}).encode(),
        dtype=np.uint8,
    )
    np.savez_compressed(path, **payload)


def _load_suite(path: Path, op: ConcreteOp, domain: Domain, policy: TierPolicy) -> TestSuite:
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta"]))
        tiers = []
        for i, tm in enumerate(meta["tiers"]):
            slots = tuple(z[f"t{i}_s{j}"] for j in range(tm["n_slots"]))
            tiers.append(
                Tier(tm["width"], slots, z[f"t{i}_ba"], z[f"t{i}_bb"], z[f"t{i}_bot"], tm["exact"])
            )
    return TestSuite(op.id, domain, op.arity, tuple(tiers), policy)


# ---- evaluating transformers on tiers --------------------------------

TransformerLike = GuardedTransformer | Sequence[GuardedTransformer] | Callable


def eval_on_tier(f: TransformerLike, tier: Tier, domain: Domain):
    """Raw (a, b, bottom) arrays of f's output on every tier case.

    f may be one guarded transformer, a sequence (interpreted as the
    meet), or a callable (tier, domain) -> (a, b, bottom).
    """
    if callable(f) and not isinstance(f, GuardedTransformer):
        return f(tier, domain)
    fs = [f] if isinstance(f, GuardedTransformer) else list(f)
    w = U64(tier.width)
    n = tier.n
    ta, tb = _top_components(domain, tier.width)
    acc_a = np.full(n, U64(ta))
    acc_b = np.full(n, U64(tb))
    acc_bot = np.zeros(n, dtype=bool)
    for t in fs:
        out_a, out_b = eval_program_batch(t.body, tier.slots, w)
        valid = v_valid(domain, out_a, out_b, w)
        if t.cond is not None:
            (flag,) = eval_program_batch(t.cond, tier.slots, w)
            active = flag != U64(0)
        else:
            active = np.ones(n, dtype=bool)
        # inactive -> top; active but ill-formed -> bottom
        cur_a = np.where(active, out_a, U64(ta))
        cur_b = np.where(active, out_b, U64(tb))
        cur_bot = active & ~valid
        cur_a = np.where(cur_bot, U64(ta), cur_a)
        cur_b = np.where(cur_bot, U64(tb), cur_b)
        acc_a, acc_b, acc_bot = v_meet(domain, acc_a, acc_b, acc_bot, cur_a, cur_b, cur_bot, w)
    return acc_a, acc_b, acc_bot


def soundness_score(f: TransformerLike, suite: TestSuite) -> float:
    good = 0
    total = 0
    for tier in suite.tiers:
        a, b, bot = eval_on_tier(f, tier, suite.domain)
        ok = v_contains_value(
            suite.domain, a, b, bot, tier.best_a, tier.best_b, tier.best_bottom, U64(tier.width)
        )
        good += int(ok.sum())
        total += tier.n
    return good / total if total else 1.0


Subset = dict[int, np.ndarray]  # tier index -> boolean mask


def norm(f: TransformerLike, suite: TestSuite, subset: Subset | None = None) -> int:
    total = 0
    for i, tier in enumerate(suite.tiers):
        a, b, bot = eval_on_tier(f, tier, suite.domain)
        sz = v_size(suite.domain, a, b, U64(tier.width), bot)
        if subset is not None:
            sz = sz[subset.get(i, np.zeros(tier.n, dtype=bool))]
        total += int(sz.sum())
    return total


def imprecise_subset(suite: TestSuite, g_meet: TransformerLike) -> Subset:
    """Cases where the current meet is strictly above the best output."""
    out: Subset = {}
    for i, tier in enumerate(suite.tiers):
        a, b, bot = eval_on_tier(g_meet, tier, suite.domain)
        same_bot = bot & tier.best_bottom
        eq = (~bot & ~tier.best_bottom & (a == tier.best_a) & (b == tier.best_b)) | same_bot
        out[i] = ~eq
    return out


def improvement_score(
    f: TransformerLike, g_meet: TransformerLike, suite: TestSuite, subset: Subset | None = None
) -> float:
    """Precision gain of f over the meet g, counted only where f is sound."""
    gain = 0
    denom = 0
    for i, tier in enumerate(suite.tiers):
        w = U64(tier.width)
        mask = None if subset is None else subset.get(i)
        ga, gb, gbot = eval_on_tier(g_meet, tier, suite.domain)
        fa, fb, fbot = eval_on_tier(f, tier, suite.domain)
        sound = v_contains_value(
            suite.domain, fa, fb, fbot, tier.best_a, tier.best_b, tier.best_bottom, w
        )
        ma, mb, mbot = v_meet(suite.domain, fa, fb, fbot, ga, gb, gbot, w)
        g_sz = v_size(suite.domain, ga, gb, w, gbot)
        m_sz = v_size(suite.domain, ma, mb, w, mbot)
        delta = np.where(sound, g_sz - m_sz, U64(0))
        if mask is not None:
            delta, g_sz = delta[mask], g_sz[mask]
        gain += int(delta.sum())
        denom += int(g_sz.sum())
    if denom == 0:
        raise ZeroDivisionError("current meet already has zero norm on this selection")
    return gain / denom


def v_top(domain: Domain, widths):
    """Per-element top components for an array of widths."""
    mask = batch.mask_of(widths)
    zeros = np.zeros_like(mask)
    if domain is Domain.KNOWN_BITS:
        return zeros, zeros
    if domain is Domain.URANGE:
        return zeros, mask
    sign = U64(1) << (np.asarray(widths, dtype=U64) - U64(1))
    return sign, mask >> U64(1)


class ScoringContext:
    """Precomputed state for repeated candidate scoring inside one MCMC round.

    Soundness is measured on the full suite; improvement only on the
    imprecise subset, against the frozen meet g. Tiers are flattened
    into single arrays with per-element widths so one candidate costs
    one vectorized pass.
    """

    def __init__(self, suite: TestSuite, g_meet: TransformerLike, subset: Subset | None = None):
        self.suite = suite
        self.domain = suite.domain
        if subset is None:
            subset = imprecise_subset(suite, g_meet)
        n_slots = 2 * suite.arity
        slot_parts: list[list[np.ndarray]] = [[] for _ in range(n_slots)]
        width_parts, ba, bb, bbot, ga_p, gb_p, gbot_p, mask_p = [], [], [], [], [], [], [], []
        for i, tier in enumerate(suite.tiers):
            if tier.n == 0:
                continue
            ga, gb, gbot = eval_on_tier(g_meet, tier, suite.domain)
            for j in range(n_slots):
                slot_parts[j].append(tier.slots[j])
            width_parts.append(np.full(tier.n, U64(tier.width)))
            ba.append(tier.best_a)
            bb.append(tier.best_b)
            bbot.append(tier.best_bottom)
            ga_p.append(ga)
            gb_p.append(gb)
            gbot_p.append(gbot)
            mask_p.append(subset.get(i, np.ones(tier.n, dtype=bool)))
        self.slots = tuple(np.concatenate(p) for p in slot_parts)
        self.widths = np.concatenate(width_parts)
        self.best_a, self.best_b = np.concatenate(ba), np.concatenate(bb)
        self.best_bottom = np.concatenate(bbot)
        self.g_a, self.g_b = np.concatenate(ga_p), np.concatenate(gb_p)
        self.g_bot = np.concatenate(gbot_p)
        self.mask = np.concatenate(mask_p)
        self.top_a, self.top_b = v_top(self.domain, self.widths)
        self.g_sz = v_size(self.domain, self.g_a, self.g_b, self.widths, self.g_bot)
        self.norm_g = int(self.g_sz[self.mask].sum())
        self.n_total = len(self.widths)

    def eval_flat(self, f: GuardedTransformer | Sequence[GuardedTransformer]):
        fs = [f] if isinstance(f, GuardedTransformer) else list(f)
        acc_a, acc_b = self.top_a.copy(), self.top_b.copy()
        acc_bot = np.zeros(self.n_total, dtype=bool)
        for t in fs:
            out_a, out_b = eval_program_batch(t.body, self.slots, self.widths)
            valid = v_valid(self.domain, out_a, out_b, self.widths)
            if t.cond is not None:
                (flag,) = eval_program_batch(t.cond, self.slots, self.widths)
                active = flag != U64(0)
                cur_a = np.where(active, out_a, self.top_a)
                cur_b = np.where(active, out_b, self.top_b)
                cur_bot = active & ~valid
            else:
                cur_a, cur_b, cur_bot = out_a, out_b, ~valid
            cur_a = np.where(cur_bot, self.top_a, cur_a)
            cur_b = np.where(cur_bot, self.top_b, cur_b)
            acc_a, acc_b, acc_bot = v_meet(
                self.domain, acc_a, acc_b, acc_bot, cur_a, cur_b, cur_bot, self.widths
            )
        return acc_a, acc_b, acc_bot

    def score(self, f) -> tuple[float, float]:
        """(soundness, improvement) of one candidate."""
        fa, fb, fbot = self.eval_flat(f)
        sound = v_contains_value(
            self.domain, fa, fb, fbot, self.best_a, self.best_b, self.best_bottom, self.widths
        )
        good = int(sound.sum())
        improvement = 0.0
        if self.norm_g > 0:
            ma, mb, mbot = v_meet(
                self.domain, fa, fb, fbot, self.g_a, self.g_b, self.g_bot, self.widths
            )
            m_sz = v_size(self.domain, ma, mb, self.widths, mbot)
            delta = np.where(sound & self.mask, self.g_sz - m_sz, U64(0))
            improvement = int(delta.sum()) / self.norm_g
        return good / self.n_total, improvement
