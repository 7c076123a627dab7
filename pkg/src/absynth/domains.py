"""The three abstract domains: known bits, unsigned ranges, signed ranges.

An abstract value is a pair of bit patterns interpreted per domain:
(zero, one) masks for known bits, [lo, hi] endpoints for the range
domains. Bottom is an explicit variant so size() and contains() never
see ill-formed values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np

from .bitvec import BitVec


class Domain(Enum):
    KNOWN_BITS = "kb"
    URANGE = "cru"
    SRANGE = "crs"


def _signed(bits: int, width: int) -> int:
    if bits >> (width - 1):
        return bits - (1 << width)
    return bits


def _order_key(bits: int, width: int, domain: Domain) -> int:
    return _signed(bits, width) if domain is Domain.SRANGE else bits


@dataclass(frozen=True, slots=True)
class AbstractValue:
    """One lattice element. `a`/`b` are (zero, one) or (lo, hi) patterns."""

    domain: Domain
    width: int
    a: int
    b: int
    bottom: bool = False

    def __post_init__(self) -> None:
        if self.bottom:
            return
        mask = (1 << self.width) - 1
        if not (0 <= self.a <= mask and 0 <= self.b <= mask):
            raise ValueError("field out of range for width")
        if self.domain is Domain.KNOWN_BITS:
            if self.a & self.b:
                raise ValueError("known-zero and known-one masks overlap")
        elif _order_key(self.a, self.width, self.domain) > _order_key(self.b, self.width, self.domain):
            raise ValueError("inverted range")

    # -- constructors -------------------------------------------------

    @classmethod
    def known_bits(cls, zero: int, one: int, width: int) -> "AbstractValue":
        return cls(Domain.KNOWN_BITS, width, zero, one)

    @classmethod
    def urange(cls, lo: int, hi: int, width: int) -> "AbstractValue":
        return cls(Domain.URANGE, width, lo, hi)

    @classmethod
    def srange(cls, lo: int, hi: int, width: int) -> "AbstractValue":
        return cls(Domain.SRANGE, width, lo, hi)

    @classmethod
    def make_bottom(cls, domain: Domain, width: int) -> "AbstractValue":
        return cls(domain, width, 0, 0, bottom=True)

    # -- accessors ----------------------------------------------------

    @property
    def zero(self) -> int:
        return self.a

    @property
    def one(self) -> int:
        return self.b

    @property
    def lo(self) -> int:
        return self.a

    @property
    def hi(self) -> int:
        return self.b

    def __str__(self) -> str:
        if self.bottom:
            return f"{self.domain.value}:bottom/{self.width}"
        if self.domain is Domain.KNOWN_BITS:
            chars = []
            for i in reversed(range(self.width)):
                bit = 1 << i
                chars.append("0" if self.a & bit else "1" if self.b & bit else "?")
            return "".join(chars)
        if self.domain is Domain.SRANGE:
            return f"[{_signed(self.a, self.width)},{_signed(self.b, self.width)}]"
        return f"[{self.a},{self.b}]"


def parse_value(text: str, domain: Domain, width: int) -> AbstractValue:
    """Inverse of str() for the given domain and width."""
    text = text.strip()
    if text == f"{domain.value}:bottom/{width}" or text == "bottom":
        return AbstractValue.make_bottom(domain, width)
    if domain is Domain.KNOWN_BITS:
        if len(text) != width or any(c not in "01?" for c in text):
            raise ValueError(f"bad known-bits string {text!r} for width {width}")
        zero = one = 0
        for i, c in enumerate(text):
            bit = 1 << (width - 1 - i)
            if c == "0":
                zero |= bit
            elif c == "1":
                one |= bit
        return AbstractValue.known_bits(zero, one, width)
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"bad range literal {text!r}")
    lo_s, hi_s = text[1:-1].split(",")
    mask = (1 << width) - 1
    return AbstractValue(domain, width, int(lo_s) & mask, int(hi_s) & mask)


# -- lattice operations -----------------------------------------------


def top(domain: Domain, width: int) -> AbstractValue:
    if domain is Domain.KNOWN_BITS:
        return AbstractValue.known_bits(0, 0, width)
    if domain is Domain.URANGE:
        return AbstractValue.urange(0, (1 << width) - 1, width)
    return AbstractValue.srange(1 << (width - 1), (1 << (width - 1)) - 1, width)


def is_top(v: AbstractValue) -> bool:
    return not v.bottom and v == top(v.domain, v.width)


def beta(c: BitVec, domain: Domain) -> AbstractValue:
    """Abstraction of a single concrete value."""
    if domain is Domain.KNOWN_BITS:
        return AbstractValue.known_bits(~c.bits & c.mask, c.bits, c.width)
    return AbstractValue(domain, c.width, c.bits, c.bits)


def meet(x: AbstractValue, y: AbstractValue) -> AbstractValue:
    if x.domain is not y.domain or x.width != y.width:
        raise ValueError("meet across domains/widths")
    if x.bottom or y.bottom:
        return AbstractValue.make_bottom(x.domain, x.width)
    if x.domain is Domain.KNOWN_BITS:
        zero, one = x.a | y.a, x.b | y.b
        if zero & one:
            return AbstractValue.make_bottom(x.domain, x.width)
        return AbstractValue.known_bits(zero, one, x.width)
    key = lambda v: _order_key(v, x.width, x.domain)
    lo = max(x.a, y.a, key=key)
    hi = min(x.b, y.b, key=key)
    if key(lo) > key(hi):
        return AbstractValue.make_bottom(x.domain, x.width)
    return AbstractValue(x.domain, x.width, lo, hi)


def join(x: AbstractValue, y: AbstractValue) -> AbstractValue:
    if x.domain is not y.domain or x.width != y.width:
        raise ValueError("join across domains/widths")
    if x.bottom:
        return y
    if y.bottom:
        return x
    if x.domain is Domain.KNOWN_BITS:
        return AbstractValue.known_bits(x.a & y.a, x.b & y.b, x.width)
    key = lambda v: _order_key(v, x.width, x.domain)
    return AbstractValue(x.domain, x.width, min(x.a, y.a, key=key), max(x.b, y.b, key=key))


def leq(x: AbstractValue, y: AbstractValue) -> bool:
    """Partial order: x is at least as precise as y."""
    return meet(x, y) == x


def contains(v: AbstractValue, c: BitVec) -> bool:
    if v.width != c.width:
        raise ValueError("width mismatch")
    if v.bottom:
        return False
    if v.domain is Domain.KNOWN_BITS:
        return (c.bits & v.a) == 0 and (~c.bits & v.b) == 0
    key = lambda b: _order_key(b, v.width, v.domain)
    return key(v.a) <= key(c.bits) <= key(v.b)


def size(v: AbstractValue) -> int:
    """Imprecision measure: unknown-bit count, or floor-log2 of the gap."""
    if v.bottom:
        raise ValueError("bottom has no size")
    if v.domain is Domain.KNOWN_BITS:
        mask = (1 << v.width) - 1
        return (~(v.a | v.b) & mask).bit_count()
    gap = (v.b - v.a) & ((1 << v.width) - 1)
    return gap.bit_length() - 1 if gap else 0


def enumerate_values(domain: Domain, width: int) -> Iterator[AbstractValue]:
    """All non-bottom abstract values at one width (caller keeps width small)."""
    if domain is Domain.KNOWN_BITS:
        def rec(pos: int, zero: int, one: int) -> Iterator[AbstractValue]:
            if pos == width:
                yield AbstractValue.known_bits(zero, one, width)
                return
            bit = 1 << pos
            yield from rec(pos + 1, zero | bit, one)
            yield from rec(pos + 1, zero, one | bit)
            yield from rec(pos + 1, zero, one)

        yield from rec(0, 0, 0)
        return
    n = 1 << width
    offset = (1 << (width - 1)) if domain is Domain.SRANGE else 0
    mask = n - 1
    for lo in range(n):
        for hi in range(lo, n):
            yield AbstractValue(domain, width, (lo + offset) & mask, (hi + offset) & mask)


def count_values(domain: Domain, width: int) -> int:
    if domain is Domain.KNOWN_BITS:
        return 3**width
    n = 1 << width
    return n * (n + 1) // 2


def sample(domain: Domain, width: int, rng) -> AbstractValue:
    """Uniform per-bit {0,1,?} for known bits; two uniform endpoints for ranges.

    rng is a numpy Generator.
    """
    if domain is Domain.KNOWN_BITS:
        zero = one = 0
        for r in rng.integers(3, size=width).tolist():
            zero = (zero << 1) | (r == 0)
            one = (one << 1) | (r == 1)
        return AbstractValue.known_bits(zero, one, width)
    key = lambda b: _order_key(b, width, domain)
    p = int(rng.integers(0, 1 << width, dtype=np.uint64))
    q = int(rng.integers(0, 1 << width, dtype=np.uint64))
    if key(p) > key(q):
        p, q = q, p
    return AbstractValue(domain, width, p, q)


def concretize(v: AbstractValue) -> Iterator[BitVec]:
    """Enumerate the concretization set (caller keeps it small)."""
    if v.bottom:
        return
    if v.domain is Domain.KNOWN_BITS:
        mask = (1 << v.width) - 1
        unknown = ~(v.a | v.b) & mask
        free = [i for i in range(v.width) if unknown >> i & 1]
        for sel in range(1 << len(free)):
            bits = v.b
            for j, pos in enumerate(free):
                if sel >> j & 1:
                    bits |= 1 << pos
            yield BitVec(v.width, bits)
        return
    mask = (1 << v.width) - 1
    span = (v.b - v.a) & mask
    for d in range(span + 1):
        yield BitVec(v.width, (v.a + d) & mask)
