"""Catalogue of concrete integer operations targeted by synthesis.

40 binary and 4 unary operations with LLVM-style semantics. Each entry
has a constraint predicate (e.g. nonzero divisor, in-range shift amount,
no-overflow flags); applying an operation outside its constraint yields
the out-of-band Excluded marker, which simply removes the tuple from
concretization sets.

Each operation carries both a scalar semantics (ints) and a vectorized
one (uint64 arrays at a single width) used by the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import batch
from .bitvec import BitVec
from .domains import AbstractValue, concretize

U64 = np.uint64


class _Excluded:
    __slots__ = ()

    def __repr__(self) -> str:
        return "Excluded"


EXCLUDED = _Excluded()


@dataclass(frozen=True)
class ConcreteOp:
    id: str
    arity: int
    # scalar: (unsigned args, width) -> unsigned result, defined when constraint holds
    fn: Callable[..., int]
    # constraint over unsigned args at the width; None means total
    constraint: Callable[..., bool] | None
    # vectorized twins over uint64 arrays at one scalar width
    batch_fn: Callable[..., np.ndarray]
    batch_constraint: Callable[..., np.ndarray] | None


def _sgn(x: int, w: int) -> int:
    return x - (1 << w) if x >> (w - 1) else x


def _trunc(v: int, w: int) -> int:
    return v & ((1 << w) - 1)


def _sfits(v: int, w: int) -> bool:
    return -(1 << (w - 1)) <= v < 1 << (w - 1)


def _sdiv(x: int, y: int, w: int) -> int:
    sx, sy = _sgn(x, w), _sgn(y, w)
    q = abs(sx) // abs(sy)
    return _trunc(-q if (sx < 0) != (sy < 0) else q, w)


def _srem(x: int, y: int, w: int) -> int:
    sx, sy = _sgn(x, w), _sgn(y, w)
    r = abs(sx) % abs(sy)
    return _trunc(-r if sx < 0 else r, w)


def _shl(x: int, s: int, w: int) -> int:
    return _trunc(x << s, w) if s < w else 0


def _lshr(x: int, s: int, w: int) -> int:
    return x >> s if s < w else 0


def _ashr(x: int, s: int, w: int) -> int:
    if s >= w:
        return (1 << w) - 1 if x >> (w - 1) else 0
    return _trunc(_sgn(x, w) >> s, w)


def _clamp_signed(v: int, w: int) -> int:
    return max(-(1 << (w - 1)), min(v, (1 << (w - 1)) - 1))


# ---- vectorized building blocks (scalar width) -----------------------


def _b_sgn(x, w):
    return batch.to_signed(x, w)


def _b_mask(w):
    return batch.mask_of(w)


def _b_uadd_ovf(x, y, w):
    return (x + y) & _b_mask(w) < x


def _b_sadd_ovf(x, y, w):
    s = _b_sgn(x, w) + _b_sgn(y, w)  # exact for w <= 63; w == 64 handled below
    if int(w) == 64:
        r = (x + y) & _b_mask(w)
        same = (_b_sgn(x, w) >= 0) == (_b_sgn(y, w) >= 0)
        return same & ((_b_sgn(r, w) >= 0) != (_b_sgn(x, w) >= 0))
    return ~((-(1 << (int(w) - 1)) <= s) & (s < 1 << (int(w) - 1)))


def _b_ssub_ovf(x, y, w):
    if int(w) == 64:
        r = (x - y) & _b_mask(w)
        diff_sign = (_b_sgn(x, w) >= 0) != (_b_sgn(y, w) >= 0)
        return diff_sign & ((_b_sgn(r, w) >= 0) != (_b_sgn(x, w) >= 0))
    s = _b_sgn(x, w) - _b_sgn(y, w)
    return ~((-(1 << (int(w) - 1)) <= s) & (s < 1 << (int(w) - 1)))


def _b_savg(x, y, w, ceil: bool):
    # floor/ceil of (sx + sy) / 2 via arithmetic shift of the 2w-safe sum
    sx, sy = _b_sgn(x, w), _b_sgn(y, w)
    if int(w) == 64:
        # halves trick: (a >> 1) + (b >> 1) + correction, exact for int64
        add = sx // 2 + sy // 2 + (sx % 2 + sy % 2 + (1 if ceil else 0)) // 2
        return add.astype(U64) & _b_mask(w)
    total = sx + sy + (1 if ceil else 0)
    return ((total >> 1).astype(U64)) & _b_mask(w)


OPS: dict[str, ConcreteOp] = {}


def _register(
    op_id: str,
    arity: int,
    fn,
    batch_fn,
    constraint=None,
    batch_constraint=None,
) -> None:
    OPS[op_id] = ConcreteOp(
        op_id,
        arity,
        fn,
        constraint,
        batch.wrapping(batch_fn),
        batch.wrapping(batch_constraint) if batch_constraint is not None else None,
    )


def _shift_ok(x, s, w):
    return s <= w


def _b_shift_ok(x, s, w):
    return s <= np.asarray(w, dtype=U64)


# ---- plain binary ops ------------------------------------------------

_register("Add", 2, lambda x, y, w: _trunc(x + y, w), lambda x, y, w: (x + y) & _b_mask(w))
_register("Sub", 2, lambda x, y, w: _trunc(x - y, w), lambda x, y, w: (x - y) & _b_mask(w))
_register("Mul", 2, lambda x, y, w: _trunc(x * y, w), lambda x, y, w: (x * y) & _b_mask(w))
_register("And", 2, lambda x, y, w: x & y, lambda x, y, w: x & y)
_register("Or", 2, lambda x, y, w: x | y, lambda x, y, w: x | y)
_register("Xor", 2, lambda x, y, w: x ^ y, lambda x, y, w: x ^ y)
_register("Umax", 2, lambda x, y, w: max(x, y), lambda x, y, w: np.maximum(x, y))
_register("Umin", 2, lambda x, y, w: min(x, y), lambda x, y, w: np.minimum(x, y))
_register(
    "Smax",
    2,
    lambda x, y, w: x if _sgn(x, w) >= _sgn(y, w) else y,
    lambda x, y, w: np.where(_b_sgn(x, w) >= _b_sgn(y, w), x, y),
)
_register(
    "Smin",
    2,
    lambda x, y, w: x if _sgn(x, w) <= _sgn(y, w) else y,
    lambda x, y, w: np.where(_b_sgn(x, w) <= _b_sgn(y, w), x, y),
)
_register(
    "Udiv",
    2,
    lambda x, y, w: x // y,
    lambda x, y, w: batch.udiv(x, y),
    constraint=lambda x, y, w: y != 0,
    batch_constraint=lambda x, y, w: y != U64(0),
)
_register(
    "Sdiv",
    2,
    _sdiv,
    lambda x, y, w: batch.sdiv(x, y, w),
    constraint=lambda x, y, w: y != 0,
    batch_constraint=lambda x, y, w: y != U64(0),
)
_register(
    "Modu",
    2,
    lambda x, y, w: x % y,
    lambda x, y, w: batch.urem(x, y),
    constraint=lambda x, y, w: y != 0,
    batch_constraint=lambda x, y, w: y != U64(0),
)
_register(
    "Mods",
    2,
    _srem,
    lambda x, y, w: batch.srem(x, y, w),
    constraint=lambda x, y, w: y != 0,
    batch_constraint=lambda x, y, w: y != U64(0),
)
_register(
    "Abds",
    2,
    lambda x, y, w: _trunc(abs(_sgn(x, w) - _sgn(y, w)), w),
    lambda x, y, w: np.where(_b_sgn(x, w) >= _b_sgn(y, w), (x - y), (y - x)) & _b_mask(w),
)
_register(
    "Abdu",
    2,
    lambda x, y, w: max(x, y) - min(x, y),
    lambda x, y, w: np.maximum(x, y) - np.minimum(x, y),
)
_register(
    "AvgFloorU",
    2,
    lambda x, y, w: (x + y) >> 1,
    lambda x, y, w: (x >> U64(1)) + (y >> U64(1)) + (x & y & U64(1)),
)
_register(
    "AvgCeilU",
    2,
    lambda x, y, w: (x + y + 1) >> 1,
    lambda x, y, w: (x >> U64(1)) + (y >> U64(1)) + ((x | y) & U64(1)),
)
_register(
    "AvgFloorS",
    2,
    lambda x, y, w: _trunc((_sgn(x, w) + _sgn(y, w)) >> 1, w),
    lambda x, y, w: _b_savg(x, y, w, ceil=False),
)
_register(
    "AvgCeilS",
    2,
    lambda x, y, w: _trunc(-((-_sgn(x, w) - _sgn(y, w)) >> 1), w),
    lambda x, y, w: _b_savg(x, y, w, ceil=True),
)
_register(
    "UaddSat",
    2,
    lambda x, y, w: min(x + y, (1 << w) - 1),
    lambda x, y, w: np.where(_b_uadd_ovf(x, y, w), _b_mask(w), (x + y) & _b_mask(w)),
)
_register(
    "UsubSat",
    2,
    lambda x, y, w: max(x - y, 0),
    lambda x, y, w: np.where(x >= y, x - y, U64(0)),
)
_register(
    "Shl",
    2,
    _shl,
    lambda x, y, w: batch.shl(x, y, w),
    constraint=_shift_ok,
    batch_constraint=_b_shift_ok,
)
_register(
    "Lshr",
    2,
    _lshr,
    lambda x, y, w: batch.lshr(x, y, w),
    constraint=_shift_ok,
    batch_constraint=_b_shift_ok,
)
_register(
    "Ashr",
    2,
    _ashr,
    lambda x, y, w: batch.ashr(x, y, w),
    constraint=_shift_ok,
    batch_constraint=_b_shift_ok,
)
_register(
    "UshlSat",
    2,
    lambda x, y, w: min(x << y, (1 << w) - 1) if y <= w else None,
    lambda x, y, w: np.where(
        batch.lshr(batch.shl(x, y, w), y, w) == x, batch.shl(x, y, w), _b_mask(w)
    ),
    constraint=_shift_ok,
    batch_constraint=_b_shift_ok,
)
_register(
    "SshlSat",
    2,
    lambda x, y, w: _trunc(_clamp_signed(_sgn(x, w) << y, w), w) if y <= w else None,
    lambda x, y, w: np.where(
        batch.ashr(batch.shl(x, y, w), y, w) == x,
        batch.shl(x, y, w),
        np.where(
            _b_sgn(x, w) < 0,
            U64(1) << (np.asarray(w, dtype=U64) - U64(1)),
            _b_mask(w) >> U64(1),
        ),
    ),
    constraint=_shift_ok,
    batch_constraint=_b_shift_ok,
)

# ---- exact-division / exact-shift variants ---------------------------

_register(
    "UdivExact",
    2,
    lambda x, y, w: x // y,
    lambda x, y, w: batch.udiv(x, y),
    constraint=lambda x, y, w: y != 0 and x % y == 0,
    batch_constraint=lambda x, y, w: (y != U64(0)) & (batch.urem(x, y) == U64(0)),
)
_register(
    "SdivExact",
    2,
    _sdiv,
    lambda x, y, w: batch.sdiv(x, y, w),
    constraint=lambda x, y, w: y != 0 and _srem(x, y, w) == 0,
    batch_constraint=lambda x, y, w: (y != U64(0)) & (batch.srem(x, y, w) == U64(0)),
)
_register(
    "LshrExact",
    2,
    _lshr,
    lambda x, y, w: batch.lshr(x, y, w),
    constraint=lambda x, y, w: y <= w and x & ((1 << min(y, w)) - 1) == 0,
    batch_constraint=lambda x, y, w: (y <= np.asarray(w, dtype=U64))
    & ((x & batch.low_mask(np.minimum(y, np.asarray(w, dtype=U64)))) == U64(0)),
)
_register(
    "AshrExact",
    2,
    _ashr,
    lambda x, y, w: batch.ashr(x, y, w),
    constraint=lambda x, y, w: y <= w and x & ((1 << min(y, w)) - 1) == 0,
    batch_constraint=lambda x, y, w: (y <= np.asarray(w, dtype=U64))
    & ((x & batch.low_mask(np.minimum(y, np.asarray(w, dtype=U64)))) == U64(0)),
)

# ---- overflow-flag variants ------------------------------------------

_register(
    "AddNsw",
    2,
    lambda x, y, w: _trunc(x + y, w),
    lambda x, y, w: (x + y) & _b_mask(w),
    constraint=lambda x, y, w: _sfits(_sgn(x, w) + _sgn(y, w), w),
    batch_constraint=lambda x, y, w: ~_b_sadd_ovf(x, y, w),
)
_register(
    "AddNuw",
    2,
    lambda x, y, w: _trunc(x + y, w),
    lambda x, y, w: (x + y) & _b_mask(w),
    constraint=lambda x, y, w: x + y < 1 << w,
    batch_constraint=lambda x, y, w: ~_b_uadd_ovf(x, y, w),
)
_register(
    "AddNswNuw",
    2,
    lambda x, y, w: _trunc(x + y, w),
    lambda x, y, w: (x + y) & _b_mask(w),
    constraint=lambda x, y, w: _sfits(_sgn(x, w) + _sgn(y, w), w) and x + y < 1 << w,
    batch_constraint=lambda x, y, w: ~_b_sadd_ovf(x, y, w) & ~_b_uadd_ovf(x, y, w),
)
_register(
    "SubNsw",
    2,
    lambda x, y, w: _trunc(x - y, w),
    lambda x, y, w: (x - y) & _b_mask(w),
    constraint=lambda x, y, w: _sfits(_sgn(x, w) - _sgn(y, w), w),
    batch_constraint=lambda x, y, w: ~_b_ssub_ovf(x, y, w),
)
_register(
    "SubNuw",
    2,
    lambda x, y, w: _trunc(x - y, w),
    lambda x, y, w: (x - y) & _b_mask(w),
    constraint=lambda x, y, w: x >= y,
    batch_constraint=lambda x, y, w: x >= y,
)
_register(
    "SubNswNuw",
    2,
    lambda x, y, w: _trunc(x - y, w),
    lambda x, y, w: (x - y) & _b_mask(w),
    constraint=lambda x, y, w: _sfits(_sgn(x, w) - _sgn(y, w), w) and x >= y,
    batch_constraint=lambda x, y, w: ~_b_ssub_ovf(x, y, w) & (x >= y),
)
_register(
    "ShlNsw",
    2,
    _shl,
    lambda x, y, w: batch.shl(x, y, w),
    constraint=lambda x, y, w: y <= w and _sfits(_sgn(x, w) << y, w),
    batch_constraint=lambda x, y, w: (y <= np.asarray(w, dtype=U64))
    & (batch.ashr(batch.shl(x, y, w), y, w) == x),
)
_register(
    "ShlNuw",
    2,
    _shl,
    lambda x, y, w: batch.shl(x, y, w),
    constraint=lambda x, y, w: y <= w and x << y < 1 << w,
    batch_constraint=lambda x, y, w: (y <= np.asarray(w, dtype=U64))
    & (batch.lshr(batch.shl(x, y, w), y, w) == x),
)
_register(
    "ShlNswNuw",
    2,
    _shl,
    lambda x, y, w: batch.shl(x, y, w),
    constraint=lambda x, y, w: y <= w and _sfits(_sgn(x, w) << y, w) and x << y < 1 << w,
    batch_constraint=lambda x, y, w: (y <= np.asarray(w, dtype=U64))
    & (batch.ashr(batch.shl(x, y, w), y, w) == x)
    & (batch.lshr(batch.shl(x, y, w), y, w) == x),
)

# ---- unary ops -------------------------------------------------------

_register(
    "Abs",
    1,
    lambda x, w: _trunc(abs(_sgn(x, w)), w),
    lambda x, w: np.where(_b_sgn(x, w) < 0, (U64(0) - x) & _b_mask(w), x),
)
_register(
    "CountRZero",
    1,
    lambda x, w: w if x == 0 else (x & -x).bit_length() - 1,
    lambda x, w: batch.count_right_zero(x, w),
)
_register(
    "CountLZero",
    1,
    lambda x, w: w - x.bit_length(),
    lambda x, w: batch.count_left_zero(x, w),
)
_register(
    "PopCount",
    1,
    lambda x, w: x.bit_count(),
    lambda x, w: batch.popcount(x),
)


def get_op(op_id: str) -> ConcreteOp:
    try:
        return OPS[op_id]
    except KeyError:
        raise KeyError(f"unknown concrete op {op_id!r}; known: {sorted(OPS)}") from None


def apply(op: ConcreteOp, args: list[BitVec]):
    """Run the operation; returns a BitVec, or EXCLUDED outside the constraint."""
    if len(args) != op.arity:
        raise ValueError(f"{op.id} expects {op.arity} args")
    w = args[0].width
    raw = [a.bits for a in args]
    if op.constraint is not None and not op.constraint(*raw, w):
        return EXCLUDED
    return BitVec(w, op.fn(*raw, w))


def admissible_pairs(
    op: ConcreteOp, abstract_args: tuple[AbstractValue, ...]
) -> tuple[bool, Iterator[tuple[BitVec, ...]]]:
    """Concrete tuples inside the abstract args that satisfy the constraint.

    Returns (is_empty, iterator); the iterator is fresh and re-derivable.
    """
    if len(abstract_args) != op.arity:
        raise ValueError(f"{op.id} expects {op.arity} abstract args")

    def gen() -> Iterator[tuple[BitVec, ...]]:
        if op.arity == 1:
            for c in concretize(abstract_args[0]):
                if op.constraint is None or op.constraint(c.bits, c.width):
                    yield (c,)
            return
        for c1 in concretize(abstract_args[0]):
            for c2 in concretize(abstract_args[1]):
                if op.constraint is None or op.constraint(c1.bits, c2.bits, c1.width):
                    yield (c1, c2)

    empty = next(iter(gen()), None) is None
    return empty, gen()
