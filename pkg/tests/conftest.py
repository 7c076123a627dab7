"""Shared naive reference implementations used as independent test oracles.

Everything here is written the slow, obvious way (python ints, explicit
loops, set arithmetic) so that agreement with the package is evidence,
not tautology.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from absynth.domains import AbstractValue, Domain


def naive_gamma(v: AbstractValue) -> set[int]:
    """Concretization computed directly from the component definitions."""
    if v.bottom:
        return set()
    w, mask = v.width, (1 << v.width) - 1
    out = set()
    for c in range(1 << w):
        if v.domain is Domain.KNOWN_BITS:
            ok = (c & v.a) == 0 and (c & v.b) == v.b
        elif v.domain is Domain.URANGE:
            ok = v.a <= c <= v.b
        else:
            lo = v.a - (1 << w) if v.a >> (w - 1) else v.a
            hi = v.b - (1 << w) if v.b >> (w - 1) else v.b
            sc = c - (1 << w) if c >> (w - 1) else c
            ok = lo <= sc <= hi
        if ok:
            out.add(c)
    assert all(0 <= c <= mask for c in out)
    return out


def naive_alpha(values: set[int], domain: Domain, width: int) -> AbstractValue:
    """Smallest abstract value covering a nonempty set of bit patterns."""
    assert values
    if domain is Domain.KNOWN_BITS:
        zero = one = (1 << width) - 1
        for c in values:
            one &= c
            zero &= ~c & ((1 << width) - 1)
        return AbstractValue(domain, width, zero, one)
    if domain is Domain.URANGE:
        return AbstractValue(domain, width, min(values), max(values))
    signed = {c - (1 << width) if c >> (width - 1) else c: c for c in values}
    return AbstractValue(domain, width, signed[min(signed)], signed[max(signed)])


def naive_leq(u: AbstractValue, v: AbstractValue) -> bool:
    return naive_gamma(u) <= naive_gamma(v)


def naive_best(op, inputs, domain: Domain) -> AbstractValue:
    """Exact best transformer by brute force over the concretizations."""
    width = inputs[0].width
    outs = set()
    gammas = [sorted(naive_gamma(v)) for v in inputs]
    if op.arity == 1:
        combos = [(a,) for a in gammas[0]]
    else:
        combos = [(a, b) for a in gammas[0] for b in gammas[1]]
    for combo in combos:
        if op.constraint is not None and not op.constraint(*combo, width):
            continue
        outs.add(op.fn(*combo, width) & ((1 << width) - 1))
    if not outs:
        return AbstractValue(domain, width, 0, 0, bottom=True)
    return naive_alpha(outs, domain, width)
