"""Primitive semantics checked against slow, independent re-implementations."""

import itertools

import pytest

from absynth.bitvec import (
    BitVec,
    ConstKind,
    DslOpcode,
    DSL_SUBSETS,
    arity,
    constant,
    eval_primitive,
)


def test_canonical_construction():
    assert BitVec.of(-1, 4).bits == 0xF
    assert BitVec.of(16, 4).bits == 0
    assert BitVec(8, 0x80).signed == -128
    assert BitVec(8, 0x7F).signed == 127
    with pytest.raises(ValueError):
        BitVec(4, 16)
    with pytest.raises(ValueError):
        BitVec(0, 0)
    with pytest.raises(ValueError):
        BitVec(65, 0)


def test_constants():
    assert constant(ConstKind.ZERO, 7).bits == 0
    assert constant(ConstKind.ONE, 1).bits == 1
    assert constant(ConstKind.ALL_ONES, 5).bits == 0b11111
    assert constant(ConstKind.WIDTH, 8).bits == 8
    assert constant(ConstKind.WIDTH, 64).bits == 64
    # the width constant truncates when the width cannot represent itself
    assert constant(ConstKind.WIDTH, 1).bits == 1
    assert constant(ConstKind.WIDTH, 2).bits == 2


def _ref_primitive(op: DslOpcode, vals: list[int], w: int) -> int:
    """Slow reference: string and loop based, python int arithmetic."""
    mask = (1 << w) - 1

    def s(u):
        return u - (1 << w) if u >= 1 << (w - 1) else u

    def clamp(k):
        return k if k < w else w

    x = vals[0]
    if op is DslOpcode.NEG:
        return x ^ mask
    if op is DslOpcode.SET_SIGN_BIT:
        return x | (1 << (w - 1))
    if op is DslOpcode.CLEAR_SIGN_BIT:
        return x & (mask >> 1)
    if op in (DslOpcode.COUNT_LEFT_ZERO, DslOpcode.COUNT_LEFT_ONE,
              DslOpcode.COUNT_RIGHT_ZERO, DslOpcode.COUNT_RIGHT_ONE):
        bits = f"{x:0{w}b}"
        target = "0" if "ZERO" in op.name else "1"
        run = bits[::-1] if "RIGHT" in op.name else bits
        n = 0
        for ch in run:
            if ch != target:
                break
            n += 1
        return n & mask
    if op is DslOpcode.IF_THEN_ELSE:
        return vals[1] if x else vals[2]
    y = vals[1]
    if op is DslOpcode.AND:
        return x & y
    if op is DslOpcode.OR:
        return x | y
    if op is DslOpcode.XOR:
        return x ^ y
    if op is DslOpcode.ADD:
        return (x + y) % (1 << w)
    if op is DslOpcode.SUB:
        return (x - y) % (1 << w)
    if op is DslOpcode.MUL:
        return (x * y) % (1 << w)
    if op is DslOpcode.UMAX:
        return max(x, y)
    if op is DslOpcode.UMIN:
        return min(x, y)
    if op is DslOpcode.SMAX:
        return x if s(x) >= s(y) else y
    if op is DslOpcode.SMIN:
        return x if s(x) <= s(y) else y
    if op is DslOpcode.UDIV:
        return x // y if y else 0
    if op is DslOpcode.UREM:
        return x - y * (x // y) if y else 0
    if op is DslOpcode.SDIV:
        if y == 0:
            return 0
        import math
        q = math.trunc(s(x) / s(y)) if s(y) else 0
        # trunc division can overflow only at INT_MIN / -1, which wraps
        return q % (1 << w)
    if op is DslOpcode.SREM:
        if y == 0:
            return 0
        import math
        return (s(x) - s(y) * math.trunc(s(x) / s(y))) % (1 << w)
    if op is DslOpcode.SHL:
        return (x * (2 ** y)) % (1 << w) if y < w else 0
    if op is DslOpcode.LSHR:
        return x // (2 ** y) if y < w else 0
    if op is DslOpcode.ASHR:
        if y >= w:
            return mask if s(x) < 0 else 0
        return (s(x) >> y) % (1 << w)
    if op is DslOpcode.SET_HIGH_BITS:
        k = clamp(y)
        return x | (mask ^ (mask >> k))
    if op is DslOpcode.SET_LOW_BITS:
        return x | ((1 << clamp(y)) - 1)
    if op is DslOpcode.CLEAR_LOW_BITS:
        return x & ~((1 << clamp(y)) - 1) & mask
    if op is DslOpcode.CLEAR_HIGH_BITS:
        k = clamp(y)
        return x & (mask >> k)
    raise AssertionError(op)


@pytest.mark.parametrize("op", list(DslOpcode), ids=lambda o: o.value)
def test_primitive_matches_reference(op):
    for w in (1, 2, 3, 4):
        n = arity(op)
        space = itertools.product(range(1 << w), repeat=n)
        if n == 3 and w == 4:
            space = itertools.islice(space, 0, None, 7)
        for vals in space:
            got = eval_primitive(op, [BitVec(w, v) for v in vals], w)
            assert got.width == w
            assert got.bits == _ref_primitive(op, list(vals), w), (op, w, vals)


def test_primitive_spot_checks():
    w = 8
    bv = lambda v: BitVec.of(v, w)
    assert eval_primitive(DslOpcode.ASHR, [bv(0x80), bv(200)], w).bits == 0xFF
    assert eval_primitive(DslOpcode.SHL, [bv(1), bv(64)], w).bits == 0
    assert eval_primitive(DslOpcode.UDIV, [bv(5), bv(0)], w).bits == 0
    assert eval_primitive(DslOpcode.SDIV, [bv(0x80), bv(0xFF)], w).bits == 0x80
    assert eval_primitive(DslOpcode.COUNT_RIGHT_ZERO, [bv(0)], w).bits == 8
    assert eval_primitive(DslOpcode.SET_HIGH_BITS, [bv(0), bv(255)], w).bits == 0xFF


def test_dsl_subsets():
    assert DSL_SUBSETS["full"] == tuple(DslOpcode)
    assert set(DSL_SUBSETS["basic"]) == {
        DslOpcode.AND, DslOpcode.OR, DslOpcode.XOR,
        DslOpcode.NEG, DslOpcode.ADD, DslOpcode.SUB,
    }
    full, bitext = set(DSL_SUBSETS["full"]), set(DSL_SUBSETS["bitext"])
    assert full - bitext == {
        DslOpcode.MUL, DslOpcode.UDIV, DslOpcode.SDIV,
        DslOpcode.UREM, DslOpcode.SREM,
    }
    assert len(DslOpcode) == 29
