"""MCMC inner loop: Metropolis search over transformer programs.

Each chain runs a fixed number of propose/accept steps. Plain chains
mutate a whole function body; abduction chains take an unsound but
precise body from the pool, freeze it, and search only for a condition
under which it becomes sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bitvec import DSL_SUBSETS, DslOpcode
from .domains import Domain
from .dsl import GuardedTransformer, Program, mutate, random_program, trivial_top
from .oracle import ScoringContext

PLAIN = "function"
ABDUCTION = "condition"


@dataclass(frozen=True)
class SearchConfig:
    n_step: int = 1000
    temperature: float = 0.1
    chains: int = 100
    abduction_fraction: float = 0.30
    seed: int = 0
    # cost weights per candidate kind: functions favor precision,
    # conditions favor soundness
    lambda_fn: float = 1.0
    kappa_fn: float = 3.0
    lambda_cond: float = 3.0
    kappa_cond: float = 1.0
    body_lines: int = 30
    cond_lines: int = 6
    top_k: int = 3
    dsl_subset: str = "full"

    def __post_init__(self):
        if self.n_step < 1 or self.temperature <= 0:
            raise ValueError("need n_step >= 1 and temperature > 0")
        if not 0 <= self.abduction_fraction <= 1:
            raise ValueError("abduction_fraction must be in [0, 1]")
        if min(self.lambda_fn, self.kappa_fn, self.lambda_cond, self.kappa_cond) < 0:
            raise ValueError("cost weights must be nonnegative")
        if self.dsl_subset not in DSL_SUBSETS:
            raise ValueError(f"unknown DSL subset {self.dsl_subset!r}")

    def weights_for(self, kind: str) -> tuple[float, float]:
        if kind == ABDUCTION:
            return self.lambda_cond, self.kappa_cond
        return self.lambda_fn, self.kappa_fn

    @property
    def opcodes(self) -> tuple[DslOpcode, ...]:
        return tuple(DSL_SUBSETS[self.dsl_subset])


def update_weights(f_s) -> dict[DslOpcode, float]:
    """weight(op) = 1 + number of occurrences of op across F^s programs."""
    w: dict[DslOpcode, float] = {}
    for t in f_s:
        for prog in (t.body, t.cond):
            if prog is None:
                continue
            for inst in prog.insts:
                w[inst.opcode] = w.get(inst.opcode, 1.0) + 1.0
    return w


@dataclass(frozen=True)
class Candidate:
    transformer: GuardedTransformer
    kind: str
    soundness: float
    improvement: float
    lam: float
    kap: float

    @property
    def cost(self) -> float:
        return cost(self.soundness, self.improvement, self.lam, self.kap)


def metropolis_accepts(cost_drop: float, temperature: float, p: float) -> bool:
    """Accept when the cost drop beats a log-uniform threshold.

    With p drawn uniformly from [0, 1) this accepts any improvement and
    accepts a worsening of d with probability exp(-d / temperature).
    """
    return cost_drop > temperature * (math.log(p) if p > 0.0 else -math.inf)


def cost(soundness: float, improvement: float, lam: float, kap: float) -> float:
    return lam * (1.0 - soundness) + kap * (1.0 - improvement)


def init_for_kind(
    kind: str,
    pool,
    domain: Domain,
    cfg: SearchConfig,
    weights,
    rng: np.random.Generator,
    tag: str,
    num_inputs: int = 2,
) -> tuple[str, GuardedTransformer]:
    """Fresh chain start; abduction falls back to plain when the pool is empty."""
    ops = cfg.opcodes
    if kind == ABDUCTION and pool:
        body = pool[int(rng.integers(len(pool)))]
        cond = random_program(
            f"{tag}_cond", domain, rng, ops, cfg.cond_lines, is_condition=True,
            weights=weights, num_inputs=num_inputs,
        )
        body = replace(body.body, name=f"{tag}_body")
        return ABDUCTION, GuardedTransformer(tag, body, cond)
    body = random_program(f"{tag}_body", domain, rng, ops, cfg.body_lines,
                          weights=weights, num_inputs=num_inputs)
    return PLAIN, GuardedTransformer(tag, body)


def _propose(
    t: GuardedTransformer, kind: str, cfg: SearchConfig, weights, rng
) -> GuardedTransformer:
    ops = cfg.opcodes
    if kind == ABDUCTION:
        # the body is frozen; only the condition moves
        return replace(t, cond=mutate(t.cond, rng, ops, weights))
    return replace(t, body=mutate(t.body, rng, ops, weights))


@dataclass
class ChainResult:
    kind: str
    best_sound: Candidate
    top: list[Candidate] = field(default_factory=list)
    proposed: int = 0
    accepted: int = 0


def mcmc_run(
    kind: str,
    init: GuardedTransformer,
    ctx: ScoringContext,
    cfg: SearchConfig,
    weights,
    rng: np.random.Generator,
) -> ChainResult:
    """One Metropolis chain.

    Tracks the lowest-cost fully sound candidate (falling back to the
    trivial top transformer if none is seen) and the top-K lowest-cost
    candidates overall, sound or not.
    """
    lam, kap = cfg.weights_for(kind)

    def make(t: GuardedTransformer) -> Candidate:
        s, i = ctx.score(t)
        return Candidate(t, kind, s, i, lam, kap)

    cur = make(init)
    best_sound: Candidate | None = None
    top: list[Candidate] = []

    def note(c: Candidate) -> None:
        nonlocal best_sound
        if c.soundness >= 1.0 and (best_sound is None or c.cost < best_sound.cost):
            best_sound = c
        top.append(c)
        top.sort(key=lambda x: x.cost)
        del top[cfg.top_k :]

    note(cur)
    accepted = 0
    for _ in range(cfg.n_step):
        prop = make(_propose(cur.transformer, kind, cfg, weights, rng))
        note(prop)
        if metropolis_accepts(cur.cost - prop.cost, cfg.temperature, rng.random()):
            cur = prop
            accepted += 1
    if best_sound is None:
        t = trivial_top(init.name, ctx.suite.domain, len(init.body.slots) // 2)
        best_sound = make(t)
    return ChainResult(kind, best_sound, top, cfg.n_step, accepted)
