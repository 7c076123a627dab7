"""Fixed-width bitvector values and the semantics of the search DSL primitives.

Every value is an unsigned bit pattern of a declared width in [1, 64],
kept canonical (no bits above the width). All DSL primitives are total:
division by zero yields zero, out-of-range shifts yield the SMT-LIB fill
values, and bit-count results are returned at the operand's width.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

MAX_WIDTH = 64


@dataclass(frozen=True, slots=True)
class BitVec:
    """A canonical unsigned bit pattern of a fixed width."""

    width: int
    bits: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width {self.width} outside [1, {MAX_WIDTH}]")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"bits {self.bits:#x} not canonical at width {self.width}")

    @classmethod
    def of(cls, value: int, width: int) -> "BitVec":
        """Build from an arbitrary integer, truncating to the width."""
        return cls(width, value & ((1 << width) - 1))

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    @property
    def signed(self) -> int:
        """Two's-complement interpretation."""
        if self.bits >> (self.width - 1):
            return self.bits - (1 << self.width)
        return self.bits

    def __index__(self) -> int:
        return self.bits

    def __str__(self) -> str:
        return f"{self.bits:0{self.width}b}"


class DslOpcode(Enum):
    """The 29 primitives available to candidate programs."""

    # bitwise (neg is bitwise complement)
    AND = "and"
    OR = "or"
    XOR = "xor"
    NEG = "neg"
    # add
    ADD = "add"
    SUB = "sub"
    # max
    UMAX = "umax"
    UMIN = "umin"
    SMAX = "smax"
    SMIN = "smin"
    # mul
    MUL = "mul"
    UDIV = "udiv"
    SDIV = "sdiv"
    UREM = "urem"
    SREM = "srem"
    # shift
    SHL = "shl"
    ASHR = "ashr"
    LSHR = "lshr"
    # bit set/clear
    SET_HIGH_BITS = "set_high_bits"
    SET_LOW_BITS = "set_low_bits"
    CLEAR_LOW_BITS = "clear_low_bits"
    CLEAR_HIGH_BITS = "clear_high_bits"
    SET_SIGN_BIT = "set_sign_bit"
    CLEAR_SIGN_BIT = "clear_sign_bit"
    # bit counts
    COUNT_LEFT_ONE = "count_left_one"
    COUNT_LEFT_ZERO = "count_left_zero"
    COUNT_RIGHT_ONE = "count_right_one"
    COUNT_RIGHT_ZERO = "count_right_zero"
    # selection
    IF_THEN_ELSE = "if_then_else"


_UNARY = {
    DslOpcode.NEG,
    DslOpcode.SET_SIGN_BIT,
    DslOpcode.CLEAR_SIGN_BIT,
    DslOpcode.COUNT_LEFT_ONE,
    DslOpcode.COUNT_LEFT_ZERO,
    DslOpcode.COUNT_RIGHT_ONE,
    DslOpcode.COUNT_RIGHT_ZERO,
}


def arity(op: DslOpcode) -> int:
    if op in _UNARY:
        return 1
    if op is DslOpcode.IF_THEN_ELSE:
        return 3
    return 2


# DSL subsets for the ablation study: basic = bitwise + add;
# bitext = everything except the mul group.
_MUL_GROUP = {DslOpcode.MUL, DslOpcode.UDIV, DslOpcode.SDIV, DslOpcode.UREM, DslOpcode.SREM}
_BASIC = {DslOpcode.AND, DslOpcode.OR, DslOpcode.XOR, DslOpcode.NEG, DslOpcode.ADD, DslOpcode.SUB}

DSL_SUBSETS: dict[str, tuple[DslOpcode, ...]] = {
    "full": tuple(DslOpcode),
    "basic": tuple(op for op in DslOpcode if op in _BASIC),
    "bitext": tuple(op for op in DslOpcode if op not in _MUL_GROUP),
}


class ConstKind(Enum):
    ZERO = "zero"
    ONE = "one"
    ALL_ONES = "all_ones"
    WIDTH = "width"


def constant(kind: ConstKind, width: int) -> BitVec:
    if kind is ConstKind.ZERO:
        return BitVec(width, 0)
    if kind is ConstKind.ONE:
        return BitVec.of(1, width)
    if kind is ConstKind.ALL_ONES:
        return BitVec(width, (1 << width) - 1)
    return BitVec.of(width, width)


def _to_signed(bits: int, width: int) -> int:
    if bits >> (width - 1):
        return bits - (1 << width)
    return bits


def _clz(bits: int, width: int) -> int:
    return width - bits.bit_length()


def _ctz(bits: int, width: int) -> int:
    if bits == 0:
        return width
    return (bits & -bits).bit_length() - 1


def _bit_count_clamped(amount: int, width: int) -> int:
    """Second operand of the set/clear-bits primitives: clamp to [0, width]."""
    return min(amount, width)


def eval_primitive(op: DslOpcode, args: list[BitVec], width: int) -> BitVec:
    """Total semantics of one DSL primitive at the given width."""
    if len(args) != arity(op):
        raise ValueError(f"{op.value} expects {arity(op)} operands, got {len(args)}")
    for a in args:
        if a.width != width:
            raise ValueError(f"operand width {a.width} != {width}")
    mask = (1 << width) - 1
    x = args[0].bits

    if op is DslOpcode.NEG:
        return BitVec(width, ~x & mask)
    if op is DslOpcode.SET_SIGN_BIT:
        return BitVec(width, x | (1 << (width - 1)))
    if op is DslOpcode.CLEAR_SIGN_BIT:
        return BitVec(width, x & ~(1 << (width - 1)) & mask)
    if op is DslOpcode.COUNT_LEFT_ZERO:
        return BitVec.of(_clz(x, width), width)
    if op is DslOpcode.COUNT_LEFT_ONE:
        return BitVec.of(_clz(~x & mask, width), width)
    if op is DslOpcode.COUNT_RIGHT_ZERO:
        return BitVec.of(_ctz(x, width), width)
    if op is DslOpcode.COUNT_RIGHT_ONE:
        return BitVec.of(_ctz(~x & mask, width), width)

    if op is DslOpcode.IF_THEN_ELSE:
        return args[1] if x != 0 else args[2]

    y = args[1].bits
    if op is DslOpcode.AND:
        return BitVec(width, x & y)
    if op is DslOpcode.OR:
        return BitVec(width, x | y)
    if op is DslOpcode.XOR:
        return BitVec(width, x ^ y)
    if op is DslOpcode.ADD:
        return BitVec.of(x + y, width)
    if op is DslOpcode.SUB:
        return BitVec.of(x - y, width)
    if op is DslOpcode.MUL:
        return BitVec.of(x * y, width)
    if op is DslOpcode.UMAX:
        return BitVec(width, max(x, y))
    if op is DslOpcode.UMIN:
        return BitVec(width, min(x, y))
    if op is DslOpcode.SMAX:
        return args[0] if _to_signed(x, width) >= _to_signed(y, width) else args[1]
    if op is DslOpcode.SMIN:
        return args[0] if _to_signed(x, width) <= _to_signed(y, width) else args[1]
    if op is DslOpcode.UDIV:
        return BitVec(width, x // y if y else 0)
    if op is DslOpcode.UREM:
        return BitVec(width, x % y if y else 0)
    if op is DslOpcode.SDIV:
        if y == 0:
            return BitVec(width, 0)
        sx, sy = _to_signed(x, width), _to_signed(y, width)
        q = abs(sx) // abs(sy)
        if (sx < 0) != (sy < 0):
            q = -q
        return BitVec.of(q, width)
    if op is DslOpcode.SREM:
        if y == 0:
            return BitVec(width, 0)
        sx, sy = _to_signed(x, width), _to_signed(y, width)
        r = abs(sx) % abs(sy)
        if sx < 0:
            r = -r
        return BitVec.of(r, width)
    if op is DslOpcode.SHL:
        return BitVec.of(x << y, width) if y < width else BitVec(width, 0)
    if op is DslOpcode.LSHR:
        return BitVec(width, x >> y) if y < width else BitVec(width, 0)
    if op is DslOpcode.ASHR:
        negative = bool(x >> (width - 1))
        if y >= width:
            return BitVec(width, mask if negative else 0)
        return BitVec.of(_to_signed(x, width) >> y, width)
    if op is DslOpcode.SET_HIGH_BITS:
        k = _bit_count_clamped(y, width)
        return BitVec(width, x | (mask & ~((1 << (width - k)) - 1)))
    if op is DslOpcode.SET_LOW_BITS:
        k = _bit_count_clamped(y, width)
        return BitVec(width, x | ((1 << k) - 1))
    if op is DslOpcode.CLEAR_LOW_BITS:
        k = _bit_count_clamped(y, width)
        return BitVec(width, x & ~((1 << k) - 1) & mask)
    if op is DslOpcode.CLEAR_HIGH_BITS:
        k = _bit_count_clamped(y, width)
        return BitVec(width, x & ((1 << (width - k)) - 1))
    raise AssertionError(f"unhandled opcode {op}")
