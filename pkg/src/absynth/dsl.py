"""Straight-line transformer programs over abstract-value components.

A transformer for a binary operation takes the component bitvectors of
the two abstract inputs (for example L.zero, L.one, R.zero, R.one for
known-bits) as read-only slots, runs a fixed-length sequence of
primitive instructions in SSA form, and returns one bitvector per
output component. Condition programs are the same shape but return a
single value interpreted as a boolean (nonzero = true).

Text format::

    fn umax_cru(L.lo, L.hi, R.lo, R.hi) -> cru {
      %v0 = umax L.lo R.lo
      %v1 = umax L.hi R.hi
      return %v0, %v1
    }

A guarded transformer is a `_cond` and a `_body` function plus a
`guard <name>` directive tying them together.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import batch
from .bitvec import BitVec, ConstKind, DslOpcode, arity, constant, eval_primitive
from .domains import AbstractValue, Domain, top

# component slot names per domain, for each of the two inputs L and R
_COMPONENTS = {
    Domain.KNOWN_BITS: ("zero", "one"),
    Domain.URANGE: ("lo", "hi"),
    Domain.SRANGE: ("lo", "hi"),
}

_CONST_TEXT = {
    ConstKind.ZERO: "#zero",
    ConstKind.ONE: "#one",
    ConstKind.ALL_ONES: "#all_ones",
    ConstKind.WIDTH: "#width",
}
_TEXT_CONST = {v: k for k, v in _CONST_TEXT.items()}


def slot_names(domain: Domain, num_inputs: int = 2) -> tuple[str, ...]:
    """Input slot identifiers, e.g. ("L.zero", "L.one", "R.zero", "R.one")."""
    prefixes = ("L", "R", "S")[:num_inputs]
    return tuple(f"{p}.{c}" for p in prefixes for c in _COMPONENTS[domain])


@dataclass(frozen=True, slots=True)
class Operand:
    """A register (%vN), an input slot, or a symbolic constant."""

    kind: str  # "reg" | "slot" | "const"
    index: int = 0
    const: ConstKind = ConstKind.ZERO

    def text(self, slots: Sequence[str]) -> str:
        if self.kind == "reg":
            return f"%v{self.index}"
        if self.kind == "slot":
            return slots[self.index]
        return _CONST_TEXT[self.const]


@dataclass(frozen=True, slots=True)
class Instruction:
    opcode: DslOpcode
    operands: tuple[Operand, ...]


@dataclass(frozen=True)
class Program:
    """A fixed-length straight-line function over abstract components."""

    name: str
    domain: Domain
    slots: tuple[str, ...]
    insts: tuple[Instruction, ...]
    rets: tuple[Operand, ...]
    is_condition: bool = False

    def __post_init__(self):
        for i, inst in enumerate(self.insts):
            if len(inst.operands) != arity(inst.opcode):
                raise ValueError(f"{self.name}: arity mismatch at %v{i}")
            for op in inst.operands:
                self._check_operand(op, i)
        want = 1 if self.is_condition else len(_COMPONENTS[self.domain])
        if len(self.rets) != want:
            raise ValueError(f"{self.name}: expected {want} return values")
        for op in self.rets:
            self._check_operand(op, len(self.insts))

    def _check_operand(self, op: Operand, line: int) -> None:
        if op.kind == "reg" and not 0 <= op.index < line:
            raise ValueError(
                f"{self.name}: %v{op.index} used before definition at line {line}"
            )
        if op.kind == "slot" and not 0 <= op.index < len(self.slots):
            raise ValueError(f"{self.name}: bad slot index {op.index}")

    def __str__(self) -> str:
        ret_ty = "cond" if self.is_condition else self.domain.value
        lines = [f"fn {self.name}({', '.join(self.slots)}) -> {ret_ty} {{"]
        for i, inst in enumerate(self.insts):
            ops = " ".join(o.text(self.slots) for o in inst.operands)
            lines.append(f"  %v{i} = {inst.opcode.value} {ops}".rstrip())
        lines.append(f"  return {', '.join(o.text(self.slots) for o in self.rets)}")
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class GuardedTransformer:
    """Body applied only when the condition holds; top otherwise."""

    name: str
    body: Program
    cond: Program | None = None

    @property
    def domain(self) -> Domain:
        return self.body.domain

    def __str__(self) -> str:
        if self.cond is None:
            return str(self.body)
        return f"{self.cond}\n{self.body}\nguard {self.name}"


# ---- evaluation ------------------------------------------------------


def _resolve(op: Operand, regs: list[BitVec], slot_vals: Sequence[BitVec], width: int):
    if op.kind == "reg":
        return regs[op.index]
    if op.kind == "slot":
        return slot_vals[op.index]
    return constant(op.const, width)


def eval_program(prog: Program, slot_vals: Sequence[BitVec], width: int) -> tuple[BitVec, ...]:
    live = _live_registers(prog)
    regs: list[BitVec | None] = []
    for i, inst in enumerate(prog.insts):
        if i in live:
            args = [_resolve(o, regs, slot_vals, width) for o in inst.operands]
            regs.append(eval_primitive(inst.opcode, args, width))
        else:
            regs.append(None)
    return tuple(_resolve(o, regs, slot_vals, width) for o in prog.rets)


def eval_transformer(
    t: GuardedTransformer, inputs: Sequence[AbstractValue], width: int
) -> AbstractValue:
    """Apply a guarded transformer to abstract inputs.

    Bottom inputs map to Bottom. A failed condition yields top. A body
    whose returned components violate the domain invariant (overlapping
    known bits, inverted range) yields Bottom.
    """
    dom = t.domain
    if any(v.bottom for v in inputs):
        return AbstractValue.make_bottom(dom, width)
    slot_vals = [BitVec(width, c) for v in inputs for c in (v.a, v.b)]
    if t.cond is not None:
        (flag,) = eval_program(t.cond, slot_vals, width)
        if flag.bits == 0:
            return top(dom, width)
    a, b = (r.bits for r in eval_program(t.body, slot_vals, width))
    return components_to_value(dom, width, a, b)


def components_to_value(dom: Domain, width: int, a: int, b: int) -> AbstractValue:
    try:
        return AbstractValue(dom, width, a, b)
    except ValueError:
        return AbstractValue.make_bottom(dom, width)


def _live_registers(prog: Program) -> set[int]:
    """Registers reachable backward from the returns; the evaluators skip
    everything else, which matters because mutation keeps a large pool of
    mostly dead lines."""
    live: set[int] = set()
    work = [o.index for o in prog.rets if o.kind == "reg"]
    while work:
        i = work.pop()
        if i in live:
            continue
        live.add(i)
        work.extend(
            o.index for o in prog.insts[i].operands if o.kind == "reg"
        )
    return live


def eval_program_batch(
    prog: Program, slot_arrays: Sequence[np.ndarray], width
) -> tuple[np.ndarray, ...]:
    """Vectorized twin of eval_program over parallel input arrays."""
    mask = batch.mask_of(np.asarray(width, dtype=np.uint64))
    consts = {
        ConstKind.ZERO: np.uint64(0),
        ConstKind.ONE: np.uint64(1),
        ConstKind.ALL_ONES: mask,
        ConstKind.WIDTH: np.asarray(width, dtype=np.uint64),
    }
    regs: list[np.ndarray | None] = []

    def get(o: Operand):
        if o.kind == "reg":
            return regs[o.index]
        if o.kind == "slot":
            return slot_arrays[o.index]
        return consts[o.const]

    live = _live_registers(prog)
    for i, inst in enumerate(prog.insts):
        if i in live:
            regs.append(batch.eval_opcode(inst.opcode, [get(o) for o in inst.operands], width))
        else:
            regs.append(None)
    shape = np.shape(slot_arrays[0])
    return tuple(np.broadcast_to(np.asarray(get(o), dtype=np.uint64), shape) for o in prog.rets)


# ---- random construction and mutation --------------------------------


def _operand_pool(n_regs: int, n_slots: int) -> list[Operand]:
    pool = [Operand("reg", i) for i in range(n_regs)]
    pool += [Operand("slot", i) for i in range(n_slots)]
    pool += [Operand("const", const=k) for k in ConstKind]
    return pool


def _random_operand(rng: np.random.Generator, line: int, n_slots: int) -> Operand:
    pool = _operand_pool(line, n_slots)
    return pool[rng.integers(len(pool))]


def _sample_opcode(rng: np.random.Generator, opcodes: Sequence[DslOpcode], weights) -> DslOpcode:
    if weights is None:
        return opcodes[rng.integers(len(opcodes))]
    w = np.array([weights.get(op, 1.0) for op in opcodes], dtype=float)
    return opcodes[rng.choice(len(opcodes), p=w / w.sum())]


def random_program(
    name: str,
    domain: Domain,
    rng: np.random.Generator,
    opcodes: Sequence[DslOpcode],
    n_lines: int,
    is_condition: bool = False,
    weights: dict[DslOpcode, float] | None = None,
    num_inputs: int = 2,
) -> Program:
    slots = slot_names(domain, num_inputs)
    insts = []
    for i in range(n_lines):
        opc = _sample_opcode(rng, opcodes, weights)
        ops = tuple(_random_operand(rng, i, len(slots)) for _ in range(arity(opc)))
        insts.append(Instruction(opc, ops))
    n_ret = 1 if is_condition else len(_COMPONENTS[domain])
    # the outputs are the last n_ret registers, a fixed frame the search
    # never moves; mutations reshape the expressions feeding them instead
    rets = tuple(
        Operand("reg", i) for i in range(n_lines - n_ret, n_lines)
    )
    return Program(name, domain, slots, tuple(insts), rets, is_condition)


def mutate(
    prog: Program,
    rng: np.random.Generator,
    opcodes: Sequence[DslOpcode],
    weights: dict[DslOpcode, float] | None = None,
) -> Program:
    """One MCMC move: pick a body line uniformly, then with equal
    probability replace a single operand or replace the opcode with a
    freshly sampled one and new operands. The return frame is fixed."""
    n = len(prog.insts)
    line = int(rng.integers(n))
    n_slots = len(prog.slots)
    inst = prog.insts[line]
    if rng.random() < 0.5 and inst.operands:
        ops = list(inst.operands)
        ops[rng.integers(len(ops))] = _random_operand(rng, line, n_slots)
        new_inst = Instruction(inst.opcode, tuple(ops))
    else:
        opc = _sample_opcode(rng, opcodes, weights)
        ops = tuple(_random_operand(rng, line, n_slots) for _ in range(arity(opc)))
        new_inst = Instruction(opc, ops)
    insts = list(prog.insts)
    insts[line] = new_inst
    return replace(prog, insts=tuple(insts))


# ---- parsing ---------------------------------------------------------


class DslParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_FN_RE = re.compile(r"fn\s+([\w.]+)\s*\(([^)]*)\)\s*->\s*(\w+)\s*\{")
_INST_RE = re.compile(r"%v(\d+)\s*=\s*([\w]+)\s*(.*)")

_OPCODES_BY_NAME = {op.value: op for op in DslOpcode}


def _parse_operand(tok: str, slots: Sequence[str], defined: int, line_no: int) -> Operand:
    if tok.startswith("%v"):
        try:
            idx = int(tok[2:])
        except ValueError:
            raise DslParseError(line_no, f"bad register {tok!r}")
        if not 0 <= idx < defined:
            raise DslParseError(line_no, f"{tok} used before definition")
        return Operand("reg", idx)
    if tok.startswith("#"):
        if tok not in _TEXT_CONST:
            raise DslParseError(line_no, f"unknown constant {tok!r}")
        return Operand("const", const=_TEXT_CONST[tok])
    if tok in slots:
        return Operand("slot", slots.index(tok))
    raise DslParseError(line_no, f"unknown operand {tok!r}")


def _split_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        for part in raw.split(";"):
            part = part.split("//")[0].strip()
            if part:
                out.append((i, part))
    return out


def parse_programs(text: str) -> list[Program | str]:
    """Parse fn blocks and guard directives in order of appearance.

    Returns Program objects and (for `guard <name>` lines) bare names.
    """
    items: list[Program | str] = []
    lines = _split_lines(text)
    i = 0
    while i < len(lines):
        no, line = lines[i]
        if line.startswith("guard"):
            parts = line.split()
            if len(parts) != 2:
                raise DslParseError(no, "expected: guard <name>")
            items.append(parts[1])
            i += 1
            continue
        m = _FN_RE.fullmatch(line)
        if m is None:
            raise DslParseError(no, f"expected fn header or guard, got {line!r}")
        name, slot_text, ret_ty = m.groups()
        is_cond = ret_ty == "cond"
        if not is_cond and ret_ty not in {d.value for d in Domain}:
            raise DslParseError(no, f"unknown return type {ret_ty!r}")
        slots = tuple(s.strip() for s in slot_text.split(",") if s.strip())
        insts: list[Instruction] = []
        rets: tuple[Operand, ...] | None = None
        i += 1
        while True:
            if i >= len(lines):
                raise DslParseError(no, f"unterminated fn {name!r}")
            no2, body = lines[i]
            i += 1
            if body == "}":
                break
            if body.startswith("return"):
                toks = body[len("return"):].replace(",", " ").split()
                rets = tuple(_parse_operand(t, slots, len(insts), no2) for t in toks)
                continue
            m2 = _INST_RE.fullmatch(body)
            if m2 is None:
                raise DslParseError(no2, f"cannot parse instruction {body!r}")
            idx, opc_name, rest = m2.groups()
            if int(idx) != len(insts):
                raise DslParseError(no2, f"expected %v{len(insts)}, got %v{idx}")
            if opc_name not in _OPCODES_BY_NAME:
                raise DslParseError(no2, f"unknown opcode {opc_name!r}")
            opc = _OPCODES_BY_NAME[opc_name]
            toks = rest.replace(",", " ").split()
            if len(toks) != arity(opc):
                raise DslParseError(no2, f"{opc_name} takes {arity(opc)} operands")
            ops = tuple(_parse_operand(t, slots, len(insts), no2) for t in toks)
            insts.append(Instruction(opc, ops))
        if rets is None:
            raise DslParseError(no, f"fn {name!r} has no return")
        dom = Domain(ret_ty) if not is_cond else _infer_cond_domain(slots)
        items.append(Program(name, dom, slots, tuple(insts), rets, is_cond))
    return items


def _infer_cond_domain(slots: Sequence[str]) -> Domain:
    comps = {s.split(".", 1)[1] for s in slots if "." in s}
    if comps == {"zero", "one"}:
        return Domain.KNOWN_BITS
    return Domain.URANGE  # lo/hi slots; signedness lives in the body fn


def parse_transformers(text: str) -> list[GuardedTransformer]:
    """Parse a transformer set: plain fns plus cond/body/guard triples."""
    items = parse_programs(text)
    progs = {p.name: p for p in items if isinstance(p, Program)}
    guarded_names = [it for it in items if isinstance(it, str)]
    used: set[str] = set()
    out: list[GuardedTransformer] = []
    for name in guarded_names:
        cond, body = progs.get(f"{name}_cond"), progs.get(f"{name}_body")
        if cond is None or body is None:
            raise ValueError(f"guard {name}: missing {name}_cond or {name}_body fn")
        out.append(GuardedTransformer(name, body, cond))
        used.update((cond.name, body.name))
    for p in items:
        if isinstance(p, Program) and p.name not in used:
            if p.is_condition:
                raise ValueError(f"condition fn {p.name!r} has no guard directive")
            out.append(GuardedTransformer(p.name, p))
    return out


def trivial_top(name: str, domain: Domain, num_inputs: int = 2) -> GuardedTransformer:
    """The always-top transformer, the sound fallback."""
    slots = slot_names(domain, num_inputs)
    if domain is Domain.KNOWN_BITS:
        rets = (Operand("const", const=ConstKind.ZERO), Operand("const", const=ConstKind.ZERO))
        insts: tuple[Instruction, ...] = ()
    elif domain is Domain.URANGE:
        rets = (Operand("const", const=ConstKind.ZERO), Operand("const", const=ConstKind.ALL_ONES))
        insts = ()
    else:
        insts = (
            Instruction(
                DslOpcode.SET_SIGN_BIT, (Operand("const", const=ConstKind.ZERO),)
            ),
            Instruction(
                DslOpcode.CLEAR_SIGN_BIT, (Operand("const", const=ConstKind.ALL_ONES),)
            ),
        )
        rets = (Operand("reg", 0), Operand("reg", 1))
    return GuardedTransformer(name, Program(name, domain, slots, insts, rets))
