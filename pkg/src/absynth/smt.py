"""SMT-LIB2 export of per-width soundness queries.

The emitted query is satisfiable exactly when the candidate transformer
has a soundness counterexample at that width: well-formed abstract
inputs a, concrete members c of them satisfying the operation's
constraint, such that f(c) falls outside the candidate's output (an
ill-formed output concretizes to the empty set and so always violates).
`unsat` therefore certifies soundness at the width.

Division and remainder by zero yield zero in the DSL, so those
primitives are emitted with explicit guards rather than bare bvudiv.
"""

from __future__ import annotations

from .bitvec import DslOpcode
from .concrete_ops import ConcreteOp
from .domains import Domain
from .dsl import GuardedTransformer, Operand, Program
from .bitvec import ConstKind


def _bv(value: int, w: int) -> str:
    return f"(_ bv{value & ((1 << w) - 1)} {w})"


def _sign_bit(e: str, w: int) -> str:
    return f"((_ extract {w - 1} {w - 1}) {e})"


def _clz(e: str, w: int, invert: bool) -> str:
    x = f"(bvnot {e})" if invert else e
    expr = _bv(w, w)
    for i in range(w):  # outermost test ends up on the top bit
        expr = f"(ite (= ((_ extract {i} {i}) {x}) #b1) {_bv(w - 1 - i, w)} {expr})"
    return expr


def _ctz(e: str, w: int, invert: bool) -> str:
    x = f"(bvnot {e})" if invert else e
    expr = _bv(w, w)
    for i in range(w - 1, -1, -1):  # outermost test ends up on bit 0
        expr = f"(ite (= ((_ extract {i} {i}) {x}) #b1) {_bv(i, w)} {expr})"
    return expr


def _popcount(e: str, w: int) -> str:
    if w == 1:
        return e
    bits = [f"((_ zero_extend {w - 1}) ((_ extract {i} {i}) {e}))" for i in range(w)]
    expr = bits[0]
    for b in bits[1:]:
        expr = f"(bvadd {expr} {b})"
    return expr


def _guard_zero(divisor: str, raw: str, w: int) -> str:
    return f"(ite (= {divisor} {_bv(0, w)}) {_bv(0, w)} {raw})"


def prim_smt(op: DslOpcode, a: list[str], w: int) -> str:
    """One DSL primitive as an SMT bitvector expression."""
    ones = _bv((1 << w) - 1, w)
    O = DslOpcode
    match op:
        case O.AND:
            return f"(bvand {a[0]} {a[1]})"
        case O.OR:
            return f"(bvor {a[0]} {a[1]})"
        case O.XOR:
            return f"(bvxor {a[0]} {a[1]})"
        case O.NEG:
            return f"(bvnot {a[0]})"
        case O.ADD:
            return f"(bvadd {a[0]} {a[1]})"
        case O.SUB:
            return f"(bvsub {a[0]} {a[1]})"
        case O.UMAX:
            return f"(ite (bvuge {a[0]} {a[1]}) {a[0]} {a[1]})"
        case O.UMIN:
            return f"(ite (bvule {a[0]} {a[1]}) {a[0]} {a[1]})"
        case O.SMAX:
            return f"(ite (bvsge {a[0]} {a[1]}) {a[0]} {a[1]})"
        case O.SMIN:
            return f"(ite (bvsle {a[0]} {a[1]}) {a[0]} {a[1]})"
        case O.MUL:
            return f"(bvmul {a[0]} {a[1]})"
        case O.UDIV:
            return _guard_zero(a[1], f"(bvudiv {a[0]} {a[1]})", w)
        case O.SDIV:
            return _guard_zero(a[1], f"(bvsdiv {a[0]} {a[1]})", w)
        case O.UREM:
            return _guard_zero(a[1], f"(bvurem {a[0]} {a[1]})", w)
        case O.SREM:
            return _guard_zero(a[1], f"(bvsrem {a[0]} {a[1]})", w)
        case O.SHL:
            return f"(bvshl {a[0]} {a[1]})"
        case O.LSHR:
            return f"(bvlshr {a[0]} {a[1]})"
        case O.ASHR:
            return f"(bvashr {a[0]} {a[1]})"
        case O.SET_HIGH_BITS:
            return f"(bvor {a[0]} (bvnot (bvlshr {ones} {a[1]})))"
        case O.SET_LOW_BITS:
            return f"(bvor {a[0]} (bvnot (bvshl {ones} {a[1]})))"
        case O.CLEAR_HIGH_BITS:
            return f"(bvand {a[0]} (bvlshr {ones} {a[1]}))"
        case O.CLEAR_LOW_BITS:
            return f"(bvand {a[0]} (bvshl {ones} {a[1]}))"
        case O.SET_SIGN_BIT:
            return f"(bvor {a[0]} {_bv(1 << (w - 1), w)})"
        case O.CLEAR_SIGN_BIT:
            return f"(bvand {a[0]} {_bv((1 << (w - 1)) - 1, w)})"
        case O.COUNT_LEFT_ZERO:
            return _clz(a[0], w, invert=False)
        case O.COUNT_LEFT_ONE:
            return _clz(a[0], w, invert=True)
        case O.COUNT_RIGHT_ZERO:
            return _ctz(a[0], w, invert=False)
        case O.COUNT_RIGHT_ONE:
            return _ctz(a[0], w, invert=True)
        case O.IF_THEN_ELSE:
            return f"(ite (distinct {a[0]} {_bv(0, w)}) {a[1]} {a[2]})"
    raise ValueError(f"no SMT encoding for {op}")


def _operand_expr(o: Operand, slots, w: int) -> str:
    if o.kind == "reg":
        return f"%v{o.index}"
    if o.kind == "slot":
        return slots[o.index]
    value = {
        ConstKind.ZERO: 0,
        ConstKind.ONE: 1,
        ConstKind.ALL_ONES: (1 << w) - 1,
        ConstKind.WIDTH: w,
    }[o.const]
    return _bv(value, w)


def compile_program(prog: Program, w: int, body: str) -> str:
    """Wrap `body` (which may reference %ret0/%ret1) in the program's let chain."""
    expr = body
    for i, ret in enumerate(prog.rets):
        expr = expr.replace(f"%ret{i}", _operand_expr(ret, prog.slots, w))
    for i in range(len(prog.insts) - 1, -1, -1):
        inst = prog.insts[i]
        args = [_operand_expr(o, prog.slots, w) for o in inst.operands]
        expr = f"(let ((%v{i} {prim_smt(inst.opcode, args, w)})) {expr})"
    return expr


# ---- concrete operation encodings ------------------------------------


def _uadd_ovf(x, y, w):
    return f"(bvult (bvadd {x} {y}) {x})"


def _sadd_ovf(x, y, w):
    s = lambda e: _sign_bit(e, w)
    return f"(and (= {s(x)} {s(y)}) (distinct {s(f'(bvadd {x} {y})')} {s(x)}))"


def _ssub_ovf(x, y, w):
    s = lambda e: _sign_bit(e, w)
    return f"(and (distinct {s(x)} {s(y)}) (distinct {s(f'(bvsub {x} {y})')} {s(x)}))"


def _avg(x, y, w, shift, parity):
    half = f"(bvadd ({shift} {x} {_bv(1, w)}) ({shift} {y} {_bv(1, w)}))"
    return f"(bvadd {half} (bvand ({parity} {x} {y}) {_bv(1, w)}))"


def concrete_smt(op: ConcreteOp, c: list[str], w: int) -> str:
    """The concrete operation's result as an SMT expression."""
    i = op.id
    ones = _bv((1 << w) - 1, w)
    zero = _bv(0, w)
    if i in ("Add", "AddNsw", "AddNuw", "AddNswNuw"):
        return f"(bvadd {c[0]} {c[1]})"
    if i in ("Sub", "SubNsw", "SubNuw", "SubNswNuw"):
        return f"(bvsub {c[0]} {c[1]})"
    if i == "Mul":
        return f"(bvmul {c[0]} {c[1]})"
    if i == "And":
        return f"(bvand {c[0]} {c[1]})"
    if i == "Or":
        return f"(bvor {c[0]} {c[1]})"
    if i == "Xor":
        return f"(bvxor {c[0]} {c[1]})"
    if i in ("Udiv", "UdivExact"):
        return _guard_zero(c[1], f"(bvudiv {c[0]} {c[1]})", w)
    if i in ("Sdiv", "SdivExact"):
        return _guard_zero(c[1], f"(bvsdiv {c[0]} {c[1]})", w)
    if i == "Modu":
        return _guard_zero(c[1], f"(bvurem {c[0]} {c[1]})", w)
    if i == "Mods":
        return _guard_zero(c[1], f"(bvsrem {c[0]} {c[1]})", w)
    if i == "Umax":
        return f"(ite (bvuge {c[0]} {c[1]}) {c[0]} {c[1]})"
    if i == "Umin":
        return f"(ite (bvule {c[0]} {c[1]}) {c[0]} {c[1]})"
    if i == "Smax":
        return f"(ite (bvsge {c[0]} {c[1]}) {c[0]} {c[1]})"
    if i == "Smin":
        return f"(ite (bvsle {c[0]} {c[1]}) {c[0]} {c[1]})"
    if i == "Abds":
        return f"(ite (bvsge {c[0]} {c[1]}) (bvsub {c[0]} {c[1]}) (bvsub {c[1]} {c[0]}))"
    if i == "Abdu":
        return f"(ite (bvuge {c[0]} {c[1]}) (bvsub {c[0]} {c[1]}) (bvsub {c[1]} {c[0]}))"
    if i == "AvgFloorU":
        return _avg(c[0], c[1], w, "bvlshr", "bvand")
    if i == "AvgCeilU":
        return _avg(c[0], c[1], w, "bvlshr", "bvor")
    if i == "AvgFloorS":
        return _avg(c[0], c[1], w, "bvashr", "bvand")
    if i == "AvgCeilS":
        return _avg(c[0], c[1], w, "bvashr", "bvor")
    if i == "UaddSat":
        return f"(ite {_uadd_ovf(c[0], c[1], w)} {ones} (bvadd {c[0]} {c[1]}))"
    if i == "UsubSat":
        return f"(ite (bvuge {c[0]} {c[1]}) (bvsub {c[0]} {c[1]}) {zero})"
    if i == "UshlSat":
        shl = f"(bvshl {c[0]} {c[1]})"
        return f"(ite (= (bvlshr {shl} {c[1]}) {c[0]}) {shl} {ones})"
    if i == "SshlSat":
        shl = f"(bvshl {c[0]} {c[1]})"
        sat = (
            f"(ite (bvslt {c[0]} {zero}) {_bv(1 << (w - 1), w)} "
            f"{_bv((1 << (w - 1)) - 1, w)})"
        )
        return f"(ite (= (bvashr {shl} {c[1]}) {c[0]}) {shl} {sat})"
    if i in ("Shl", "ShlNsw", "ShlNuw", "ShlNswNuw"):
        return f"(bvshl {c[0]} {c[1]})"
    if i in ("Lshr", "LshrExact"):
        return f"(bvlshr {c[0]} {c[1]})"
    if i in ("Ashr", "AshrExact"):
        return f"(bvashr {c[0]} {c[1]})"
    if i == "Abs":
        return f"(ite (bvslt {c[0]} {zero}) (bvneg {c[0]}) {c[0]})"
    if i == "CountRZero":
        return _ctz(c[0], w, invert=False)
    if i == "CountLZero":
        return _clz(c[0], w, invert=False)
    if i == "PopCount":
        return _popcount(c[0], w)
    raise ValueError(f"no SMT encoding for concrete op {i}")


def constraint_smt(op: ConcreteOp, c: list[str], w: int) -> str | None:
    """The operation's admissibility constraint; None when total."""
    i = op.id
    zero = _bv(0, w)
    width = _bv(w, w)
    nonzero_divisor = f"(distinct {c[1]} {zero})" if op.arity == 2 else None
    shift_ok = f"(bvule {c[1]} {width})" if op.arity == 2 else None
    if i in ("Udiv", "Sdiv", "Modu", "Mods"):
        return nonzero_divisor
    if i == "UdivExact":
        return f"(and {nonzero_divisor} (= (bvurem {c[0]} {c[1]}) {zero}))"
    if i == "SdivExact":
        return f"(and {nonzero_divisor} (= (bvsrem {c[0]} {c[1]}) {zero}))"
    if i in ("Shl", "Lshr", "Ashr", "UshlSat", "SshlSat"):
        return shift_ok
    if i == "LshrExact":
        return f"(and {shift_ok} (= (bvshl (bvlshr {c[0]} {c[1]}) {c[1]}) {c[0]}))"
    if i == "AshrExact":
        return f"(and {shift_ok} (= (bvshl (bvlshr {c[0]} {c[1]}) {c[1]}) {c[0]}))"
    if i == "AddNsw":
        return f"(not {_sadd_ovf(c[0], c[1], w)})"
    if i == "AddNuw":
        return f"(not {_uadd_ovf(c[0], c[1], w)})"
    if i == "AddNswNuw":
        return f"(and (not {_sadd_ovf(c[0], c[1], w)}) (not {_uadd_ovf(c[0], c[1], w)}))"
    if i == "SubNsw":
        return f"(not {_ssub_ovf(c[0], c[1], w)})"
    if i == "SubNuw":
        return f"(bvuge {c[0]} {c[1]})"
    if i == "SubNswNuw":
        return f"(and (not {_ssub_ovf(c[0], c[1], w)}) (bvuge {c[0]} {c[1]}))"
    if i == "ShlNsw":
        return f"(and {shift_ok} (= (bvashr (bvshl {c[0]} {c[1]}) {c[1]}) {c[0]}))"
    if i == "ShlNuw":
        return f"(and {shift_ok} (= (bvlshr (bvshl {c[0]} {c[1]}) {c[1]}) {c[0]}))"
    if i == "ShlNswNuw":
        return (
            f"(and {shift_ok} (= (bvashr (bvshl {c[0]} {c[1]}) {c[1]}) {c[0]})"
            f" (= (bvlshr (bvshl {c[0]} {c[1]}) {c[1]}) {c[0]}))"
        )
    return None


# ---- the full query --------------------------------------------------


def _well_formed(domain: Domain, a: str, b: str, w: int) -> str:
    if domain is Domain.KNOWN_BITS:
        return f"(= (bvand {a} {b}) {_bv(0, w)})"
    cmp = "bvule" if domain is Domain.URANGE else "bvsle"
    return f"({cmp} {a} {b})"


def _contains(domain: Domain, a: str, b: str, c: str, w: int) -> str:
    if domain is Domain.KNOWN_BITS:
        return f"(and (= (bvand {c} {a}) {_bv(0, w)}) (= (bvand {c} {b}) {b}))"
    cmp = "bvule" if domain is Domain.URANGE else "bvsle"
    return f"(and ({cmp} {a} {c}) ({cmp} {c} {b}))"


def export_smt(candidate: GuardedTransformer, op: ConcreteOp, domain: Domain, width: int) -> str:
    """The soundness query for one candidate at one width."""
    w = width
    slots = candidate.body.slots
    c_names = [f"c{k}" for k in range(op.arity)]
    lines = [
        f"; soundness of {candidate.name} for {op.id} on {domain.value}, width {w}",
        "; sat = counterexample exists, unsat = sound at this width",
        "(set-logic QF_BV)",
    ]
    for s in slots:
        lines.append(f"(declare-const {s} (_ BitVec {w}))")
    for cn in c_names:
        lines.append(f"(declare-const {cn} (_ BitVec {w}))")
    for k in range(op.arity):
        a, b = slots[2 * k], slots[2 * k + 1]
        lines.append(f"(assert {_well_formed(domain, a, b, w)})")
        lines.append(f"(assert {_contains(domain, a, b, c_names[k], w)})")
    constr = constraint_smt(op, c_names, w)
    if constr is not None:
        lines.append(f"(assert {constr})")
    f_res = concrete_smt(op, c_names, w)
    wf_out = _well_formed(domain, "%ret0", "%ret1", w)
    misses = f"(not {_contains(domain, '%ret0', '%ret1', f_res, w)})"
    violation = compile_program(candidate.body, w, f"(or (not {wf_out}) {misses})")
    if candidate.cond is not None:
        active = compile_program(candidate.cond, w, "%ret0")
        violation = f"(and (distinct {active} {_bv(0, w)}) {violation})"
    lines.append(f"(assert {violation})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
