"""Reduced product of KnownBits with a range domain.

The reduction operator propagates information both ways until a
fixpoint: the range is clipped to the hull implied by the known bits,
and bits in the common prefix of the two range endpoints become known.
Both directions are plain meets, so reduction never loses precision;
contradictory components collapse to Bottom.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domains import AbstractValue, Domain, meet


@dataclass(frozen=True)
class ProductValue:
    kb: AbstractValue
    rng: AbstractValue

    def __post_init__(self):
        if self.kb.domain is not Domain.KNOWN_BITS or self.rng.domain is Domain.KNOWN_BITS:
            raise ValueError("product needs one KnownBits and one range component")
        if self.kb.width != self.rng.width:
            raise ValueError("components must share a width")

    @property
    def is_bottom(self) -> bool:
        return self.kb.bottom or self.rng.bottom

    def __str__(self) -> str:
        return f"({self.kb} , {self.rng})"


def _range_hull(kb: AbstractValue, domain: Domain) -> AbstractValue:
    """Tightest range containing every concrete value matching the bits."""
    w = kb.width
    mask = (1 << w) - 1
    if domain is Domain.URANGE:
        return AbstractValue(domain, w, kb.one, ~kb.zero & mask)
    sign = 1 << (w - 1)
    unknown = ~(kb.zero | kb.one) & mask
    lo = kb.one | (sign if not kb.zero & sign else 0)
    hi = kb.one | (unknown & ~sign)
    return AbstractValue(domain, w, lo, hi)


def _prefix_bits(rng: AbstractValue) -> AbstractValue:
    """Known bits implied by the range: the endpoints' common prefix.

    Endpoints are compared in their unsigned representation; a signed
    range straddling zero differs in the sign bit, so the prefix is
    empty there, which is exactly the sound answer.
    """
    w = rng.width
    mask = (1 << w) - 1
    lo, hi = rng.a, rng.b
    diff = lo ^ hi
    known = mask if diff == 0 else mask & ~((1 << diff.bit_length()) - 1)
    return AbstractValue(Domain.KNOWN_BITS, w, ~lo & known & mask, lo & known)


def reduce(p: ProductValue) -> ProductValue:
    """Mutually refine both components to a fixpoint (or Bottom)."""
    kb, rng = p.kb, p.rng
    w = kb.width
    for _ in range(2 * w):
        if kb.bottom or rng.bottom:
            bot_kb = AbstractValue.make_bottom(Domain.KNOWN_BITS, w)
            bot_rng = AbstractValue.make_bottom(rng.domain, w)
            return ProductValue(bot_kb, bot_rng)
        new_rng = meet(rng, _range_hull(kb, rng.domain))
        new_kb = kb if new_rng.bottom else meet(kb, _prefix_bits(new_rng))
        if new_kb == kb and new_rng == rng:
            break
        kb, rng = new_kb, new_rng
    if kb.bottom or rng.bottom:
        return ProductValue(
            AbstractValue.make_bottom(Domain.KNOWN_BITS, w),
            AbstractValue.make_bottom(p.rng.domain, w),
        )
    return ProductValue(kb, rng)
