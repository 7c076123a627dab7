"""Vectorized evaluation kernels over uint64 arrays.

Candidate scoring has to run millions of program evaluations, so the
interpreter in dsl.py has a batch twin here: every DSL primitive is
implemented on numpy uint64 arrays with per-element widths. The scalar
interpreter stays the reference; tests cross-check the two.
"""

from __future__ import annotations

import functools

import numpy as np

from .bitvec import DslOpcode

U64 = np.uint64
_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


def wrapping(f):
    """Silence numpy's overflow warning; modular wraparound is intended."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore"):
            return f(*args, **kwargs)

    return wrapper


def mask_of(width):
    """(1 << width) - 1 for scalar or array widths in [1, 64]."""
    w = np.asarray(width, dtype=U64)
    return _FULL >> (U64(64) - w)


def popcount(x):
    return np.bitwise_count(x).astype(U64)


def bit_length(x):
    """Position of the highest set bit plus one; 0 for x == 0."""
    s = np.asarray(x, dtype=U64).copy()
    for k in (1, 2, 4, 8, 16, 32):
        s |= s >> U64(k)
    return popcount(s)


def floor_log2(x):
    """floor(log2(x)) for x > 0; returns 0 at x == 0."""
    bl = bit_length(x)
    return np.where(bl > U64(0), bl - U64(1), U64(0))


def to_signed(x, width):
    """Sign-extend width-bit patterns into int64 (exact for all widths)."""
    w = np.asarray(width, dtype=U64)
    sh = U64(64) - w
    return (np.asarray(x, dtype=U64) << sh).astype(np.int64) >> sh.astype(np.int64)


def from_signed(v, width):
    return v.astype(U64) & mask_of(width)


def low_mask(k):
    """Lowest-k-bits mask for k in [0, 64]."""
    k = np.asarray(k, dtype=U64)
    return np.where(k == U64(0), U64(0), _FULL >> (U64(64) - np.maximum(k, U64(1))))


def _shift_amount(y, width):
    return np.minimum(np.asarray(y, dtype=U64), U64(63))


def shl(x, y, width):
    w = np.asarray(width, dtype=U64)
    return np.where(y >= w, U64(0), (x << _shift_amount(y, w)) & mask_of(w))


def lshr(x, y, width):
    w = np.asarray(width, dtype=U64)
    return np.where(y >= w, U64(0), x >> _shift_amount(y, w))


def ashr(x, y, width):
    w = np.asarray(width, dtype=U64)
    m = mask_of(w)
    neg = (x >> (w - U64(1))) & U64(1)
    sx = to_signed(x, w)
    res = (sx >> _shift_amount(y, w).astype(np.int64)).astype(U64) & m
    return np.where(y >= w, np.where(neg != U64(0), m, U64(0)), res)


def _sign_flip(x, width):
    """XOR with the sign bit: unsigned order on the result is signed order."""
    w = np.asarray(width, dtype=U64)
    return np.asarray(x, dtype=U64) ^ (U64(1) << (w - U64(1)))


def udiv(x, y):
    safe = np.where(y == U64(0), U64(1), y)
    return np.where(y == U64(0), U64(0), x // safe)


def urem(x, y):
    safe = np.where(y == U64(0), U64(1), y)
    return np.where(y == U64(0), U64(0), x % safe)


@wrapping
def _magnitude(x, width):
    """|signed(x)| as an unsigned width-bit pattern (fits uint64)."""
    w = np.asarray(width, dtype=U64)
    neg = (x >> (w - U64(1))) != U64(0)
    return neg, np.where(neg, (U64(0) - x) & mask_of(w), x)


@wrapping
def sdiv(x, y, width):
    m = mask_of(width)
    nx, mx = _magnitude(x, width)
    ny, my = _magnitude(y, width)
    q = udiv(mx, my)
    q = np.where(nx ^ ny, (U64(0) - q) & m, q)
    return np.where(y == U64(0), U64(0), q)


@wrapping
def srem(x, y, width):
    m = mask_of(width)
    nx, mx = _magnitude(x, width)
    _, my = _magnitude(y, width)
    r = urem(mx, my)
    r = np.where(nx, (U64(0) - r) & m, r)
    return np.where(y == U64(0), U64(0), r)


@wrapping
def count_right_zero(x, width):
    w = np.asarray(width, dtype=U64)
    lowbit_minus1 = (x & (U64(0) - x)) - U64(1)
    return np.where(x == U64(0), w, popcount(np.where(x == U64(0), U64(0), lowbit_minus1)))


def count_left_zero(x, width):
    return np.asarray(width, dtype=U64) - bit_length(x)


@wrapping
def eval_opcode(op: DslOpcode, args, width):
    """One DSL primitive over uint64 arrays; mirrors bitvec.eval_primitive."""
    w = np.asarray(width, dtype=U64)
    m = mask_of(w)
    x = args[0]
    if op is DslOpcode.AND:
        return x & args[1]
    if op is DslOpcode.OR:
        return x | args[1]
    if op is DslOpcode.XOR:
        return x ^ args[1]
    if op is DslOpcode.NEG:
        return ~x & m
    if op is DslOpcode.ADD:
        return (x + args[1]) & m
    if op is DslOpcode.SUB:
        return (x - args[1]) & m
    if op is DslOpcode.MUL:
        return (x * args[1]) & m
    if op is DslOpcode.UMAX:
        return np.maximum(x, args[1])
    if op is DslOpcode.UMIN:
        return np.minimum(x, args[1])
    if op is DslOpcode.SMAX:
        return np.where(_sign_flip(x, w) >= _sign_flip(args[1], w), x, args[1])
    if op is DslOpcode.SMIN:
        return np.where(_sign_flip(x, w) <= _sign_flip(args[1], w), x, args[1])
    if op is DslOpcode.UDIV:
        return udiv(x, args[1])
    if op is DslOpcode.UREM:
        return urem(x, args[1])
    if op is DslOpcode.SDIV:
        return sdiv(x, args[1], w)
    if op is DslOpcode.SREM:
        return srem(x, args[1], w)
    if op is DslOpcode.SHL:
        return shl(x, args[1], w)
    if op is DslOpcode.LSHR:
        return lshr(x, args[1], w)
    if op is DslOpcode.ASHR:
        return ashr(x, args[1], w)
    if op is DslOpcode.SET_HIGH_BITS:
        k = np.minimum(args[1], w)
        return x | (m & ~low_mask(w - k))
    if op is DslOpcode.SET_LOW_BITS:
        k = np.minimum(args[1], w)
        return x | low_mask(k)
    if op is DslOpcode.CLEAR_LOW_BITS:
        k = np.minimum(args[1], w)
        return x & ~low_mask(k) & m
    if op is DslOpcode.CLEAR_HIGH_BITS:
        k = np.minimum(args[1], w)
        return x & low_mask(w - k)
    if op is DslOpcode.SET_SIGN_BIT:
        return x | (U64(1) << (w - U64(1)))
    if op is DslOpcode.CLEAR_SIGN_BIT:
        return x & ~(U64(1) << (w - U64(1))) & m
    if op is DslOpcode.COUNT_LEFT_ZERO:
        return count_left_zero(x, w)
    if op is DslOpcode.COUNT_LEFT_ONE:
        return count_left_zero(~x & m, w)
    if op is DslOpcode.COUNT_RIGHT_ZERO:
        return count_right_zero(x, w)
    if op is DslOpcode.COUNT_RIGHT_ONE:
        return count_right_zero(~x & m, w)
    if op is DslOpcode.IF_THEN_ELSE:
        return np.where(x != U64(0), args[1], args[2])
    raise AssertionError(f"unhandled opcode {op}")
