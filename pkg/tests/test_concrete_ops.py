"""Concrete operation semantics against independent re-implementations."""

import itertools

import numpy as np
import pytest

from absynth.bitvec import BitVec
from absynth.concrete_ops import EXCLUDED, OPS, admissible_pairs, apply, get_op
from absynth.domains import Domain, parse_value

ALL_IDS = [
    "Add", "Sub", "Mul", "And", "Or", "Xor", "Udiv", "Sdiv", "Modu", "Mods",
    "Umax", "Umin", "Smax", "Smin", "Abds", "Abdu",
    "AvgFloorU", "AvgFloorS", "AvgCeilU", "AvgCeilS",
    "UaddSat", "UsubSat", "SshlSat", "UshlSat",
    "Shl", "Lshr", "Ashr", "AshrExact", "LshrExact", "UdivExact", "SdivExact",
    "AddNsw", "AddNuw", "AddNswNuw", "SubNsw", "SubNuw", "SubNswNuw",
    "ShlNsw", "ShlNuw", "ShlNswNuw",
    "Abs", "CountRZero", "CountLZero", "PopCount",
]


def _s(u, w):
    return u - (1 << w) if u >= 1 << (w - 1) else u


def _ref(op_id: str, x: int, y: int | None, w: int):
    """Independent model: returns the result bits, or None when excluded.

    Written with signed python arithmetic and explicit overflow predicates,
    deliberately avoiding the package's helper structure.
    """
    m = (1 << w) - 1
    sx = _s(x, w)
    sy = _s(y, w) if y is not None else None
    lo, hi = -(1 << (w - 1)), (1 << (w - 1)) - 1

    if op_id == "Add":
        return (x + y) & m
    if op_id == "Sub":
        return (x - y) & m
    if op_id == "Mul":
        return (x * y) & m
    if op_id == "And":
        return x & y
    if op_id == "Or":
        return x | y
    if op_id == "Xor":
        return x ^ y
    if op_id == "Udiv":
        return None if y == 0 else x // y
    if op_id == "Sdiv":
        if y == 0:
            return None
        q = abs(sx) // abs(sy)
        return (-q if (sx < 0) != (sy < 0) else q) & m
    if op_id == "Modu":
        return None if y == 0 else x % y
    if op_id == "Mods":
        if y == 0:
            return None
        r = abs(sx) % abs(sy)
        return (-r if sx < 0 else r) & m
    if op_id == "Umax":
        return max(x, y)
    if op_id == "Umin":
        return min(x, y)
    if op_id == "Smax":
        return x if sx >= sy else y
    if op_id == "Smin":
        return x if sx <= sy else y
    if op_id == "Abds":
        return abs(sx - sy) & m
    if op_id == "Abdu":
        return abs(x - y)
    if op_id == "AvgFloorU":
        return (x + y) // 2
    if op_id == "AvgFloorS":
        return ((sx + sy) >> 1) & m
    if op_id == "AvgCeilU":
        return (x + y + 1) // 2
    if op_id == "AvgCeilS":
        return (-((-sx - sy) >> 1)) & m
    if op_id == "UaddSat":
        return min(x + y, m)
    if op_id == "UsubSat":
        return max(x - y, 0)
    if op_id == "SshlSat":
        if y > w:
            return None
        full = sx * (2 ** y)
        return (max(lo, min(hi, full))) & m if not lo <= full <= hi else full & m
    if op_id == "UshlSat":
        if y > w:
            return None
        return min(x * (2 ** y), m)
    if op_id == "Shl":
        return None if y > w else (x << y) & m if y < w else 0
    if op_id == "Lshr":
        return None if y > w else (x >> y) if y < w else 0
    if op_id == "Ashr":
        if y > w:
            return None
        return (sx >> min(y, w - 1)) & m
    if op_id in ("AshrExact", "LshrExact"):
        # admissible only when no set bit is shifted out
        if y > w or x & ((1 << min(y, w)) - 1):
            return None
        if y >= w:
            return 0 if (x == 0 or op_id == "LshrExact") else m
        return (sx >> y) & m if op_id == "AshrExact" else x >> y
    if op_id == "UdivExact":
        return x // y if y != 0 and x % y == 0 else None
    if op_id == "SdivExact":
        if y == 0:
            return None
        if abs(sx) % abs(sy) != 0:
            return None
        q = abs(sx) // abs(sy)
        return (-q if (sx < 0) != (sy < 0) else q) & m
    if op_id == "AddNsw":
        return (x + y) & m if lo <= sx + sy <= hi else None
    if op_id == "AddNuw":
        return (x + y) & m if x + y <= m else None
    if op_id == "AddNswNuw":
        return (x + y) & m if lo <= sx + sy <= hi and x + y <= m else None
    if op_id == "SubNsw":
        return (x - y) & m if lo <= sx - sy <= hi else None
    if op_id == "SubNuw":
        return (x - y) & m if x >= y else None
    if op_id == "SubNswNuw":
        return (x - y) & m if lo <= sx - sy <= hi and x >= y else None
    if op_id in ("ShlNsw", "ShlNuw", "ShlNswNuw"):
        if y > w:
            return None
        shifted = (x << y) & m if y < w else 0
        nuw = x * (2 ** y) <= m
        nsw = lo <= sx * (2 ** y) <= hi
        ok = {"ShlNsw": nsw, "ShlNuw": nuw, "ShlNswNuw": nsw and nuw}[op_id]
        return shifted if ok else None
    if op_id == "Abs":
        return abs(sx) & m
    if op_id == "CountRZero":
        return len(f"{x:0{w}b}") - len(f"{x:0{w}b}".rstrip("0")) if x else w
    if op_id == "CountLZero":
        return w - x.bit_length()
    if op_id == "PopCount":
        return f"{x:b}".count("1")
    raise AssertionError(op_id)


def test_registry_is_exactly_the_expected_ops():
    assert sorted(OPS) == sorted(ALL_IDS)
    assert len(OPS) == 44
    for op_id in ("MulNsw", "UMulSat", "SAddSat"):
        with pytest.raises(KeyError):
            get_op(op_id)


@pytest.mark.parametrize("op_id", ALL_IDS)
def test_scalar_matches_reference(op_id):
    op = get_op(op_id)
    for w in (1, 2, 3, 4):
        n = 1 << w
        for x in range(n):
            args2 = range(n) if op.arity == 2 else (None,)
            for y in args2:
                expect = _ref(op_id, x, y, w)
                vals = [BitVec(w, x)] + ([BitVec(w, y)] if y is not None else [])
                got = apply(op, vals)
                if expect is None:
                    assert got is EXCLUDED, (op_id, w, x, y)
                else:
                    assert got is not EXCLUDED and got.bits == expect, (op_id, w, x, y)


@pytest.mark.parametrize("op_id", ALL_IDS)
def test_batch_matches_scalar(op_id):
    op = get_op(op_id)
    for w in (3, 5, 64):
        rng = np.random.default_rng(hash(op_id) % 2**32)
        xs = rng.integers(0, 1 << 63, size=200, dtype=np.uint64) & np.uint64((1 << w) - 1)
        ys = rng.integers(0, 1 << 63, size=200, dtype=np.uint64) & np.uint64((1 << w) - 1)
        ys = np.minimum(ys, np.uint64(w + 1)) if "Shl" in op_id or "shr" in op_id.lower() else ys
        args = [xs] + ([ys] if op.arity == 2 else [])
        out = op.batch_fn(*args, w)
        adm = op.batch_constraint(*args, w) if op.batch_constraint is not None else None
        for i in range(len(xs)):
            vals = [BitVec(w, int(a[i])) for a in args]
            scalar = apply(op, vals)
            if scalar is EXCLUDED:
                assert adm is not None and not bool(adm[i]), (op_id, w, i)
            else:
                if adm is not None:
                    assert bool(adm[i])
                assert int(out[i]) == scalar.bits, (op_id, w, i)


def test_frozen_examples():
    w = 4
    assert apply(get_op("Abds"), [BitVec(w, 8), BitVec(w, 7)]).bits == 15
    assert apply(get_op("AvgFloorU"), [BitVec(8, 255), BitVec(8, 1)]).bits == 128
    assert apply(get_op("AvgCeilU"), [BitVec(8, 255), BitVec(8, 254)]).bits == 255
    assert apply(get_op("UaddSat"), [BitVec(8, 200), BitVec(8, 100)]).bits == 255
    assert apply(get_op("UsubSat"), [BitVec(8, 3), BitVec(8, 7)]).bits == 0
    assert apply(get_op("Abs"), [BitVec(4, 8)]).bits == 8
    assert apply(get_op("PopCount"), [BitVec(8, 0b1011)]).bits == 3
    assert apply(get_op("Shl"), [BitVec(4, 1), BitVec(4, 4)]).bits == 0
    assert apply(get_op("Shl"), [BitVec(4, 1), BitVec(4, 5)]) is EXCLUDED
    assert apply(get_op("Udiv"), [BitVec(4, 6), BitVec(4, 0)]) is EXCLUDED


def test_admissible_pairs_filters_constraint():
    op = get_op("Udiv")
    a = parse_value("[0,3]", Domain.URANGE, 4)
    b = parse_value("[0,1]", Domain.URANGE, 4)
    empty, pairs = admissible_pairs(op, (a, b))
    got = {(p[0].bits, p[1].bits) for p in pairs}
    assert not empty
    assert got == {(x, 1) for x in range(4)}

    zero = parse_value("[0,0]", Domain.URANGE, 4)
    empty, pairs = admissible_pairs(op, (a, zero))
    assert empty and not list(pairs)
