"""Synthesis orchestrator.

Runs rounds of MCMC chains, verifies the surviving candidates, and
maintains the sound set F^s (whose meet is the synthesized transformer)
and the pool F^p of unsound-but-precise bodies used to seed condition
abduction. Terminates on a stall in the meet's norm or on budget, then
greedily removes redundant members.

Soundness is certified exhaustively at small widths; optionally the
verifier also emits per-width SMT-LIB2 queries for an external solver,
and candidates whose only evidence is an unanswered query are treated
as unsound.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle, search, smt
from .batch import U64
from .bitvec import BitVec
from .concrete_ops import ConcreteOp, get_op
from .domains import AbstractValue, Domain, contains, enumerate_values, sample
from .dsl import GuardedTransformer, trivial_top

PRECISE_POOL_CAP = 15
_EXHAUSTIVE_PAIR_BUDGET = 250_000


@dataclass(frozen=True)
class OuterConfig:
    search: search.SearchConfig = field(default_factory=search.SearchConfig)
    outer_iters: int = 20
    time_budget: float | None = 600.0
    stall_limit: int = 2
    verify_width: int = 8
    verify_samples: int = 20_000
    abduction: bool = True
    emit_smt_dir: str | None = None
    smt_widths: tuple[int, ...] = (16, 32, 64)
    suite_policy: oracle.TierPolicy = field(
        default_factory=lambda: oracle.TierPolicy(
            mid_samples=200, mid_widths=(5, 6, 7, 8), large_widths=()
        )
    )


@dataclass(frozen=True)
class Verdict:
    status: str  # "sound" | "unsound" | "unknown"
    witness: tuple[tuple[AbstractValue, ...], tuple[BitVec, ...]] | None = None
    smt_files: tuple[str, ...] = ()


@dataclass
class TransformerSet:
    members: list[GuardedTransformer] = field(default_factory=list)

    def meet_eval(self):
        """Evaluator usable wherever the oracle accepts a transformer."""
        return list(self.members) if self.members else _top_eval

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def text(self) -> str:
        return "\n\n".join(str(t) for t in self.members)


def _top_eval(tier, domain):
    a, b = oracle.v_top(domain, np.full(tier.n, U64(tier.width)))
    return a, b, np.zeros(tier.n, dtype=bool)


@dataclass
class PrecisePool:
    cap: int = PRECISE_POOL_CAP
    members: list[tuple[float, GuardedTransformer]] = field(default_factory=list)

    def offer(self, improvement: float, t: GuardedTransformer) -> None:
        self.members.append((improvement, t))
        self.members.sort(key=lambda kv: -kv[0])
        del self.members[self.cap :]

    def bodies(self) -> list[GuardedTransformer]:
        return [t for _, t in self.members]


@dataclass
class SynthesisReport:
    op_id: str
    domain: str
    seed: int
    iterations: list[dict] = field(default_factory=list)
    final_programs: str = ""
    final_norm: int = 0
    best_norm: int = 0
    certified_width: int = 0
    # wall-clock measurements live apart from the deterministic payload,
    # so reports with equal (seed, config) stay byte-identical elsewhere
    timing: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


# ---- verification ----------------------------------------------------

# verification tiers depend only on (op, domain, width, sample count):
# the sampled ones use a fixed derived seed so verdicts are reproducible
# regardless of run seed or call order
_verify_tier_cache: dict[tuple, oracle.Tier] = {}


def _verify_tier(op: ConcreteOp, domain: Domain, w: int, n_samples: int) -> oracle.Tier:
    n_abs = oracle.count_values(domain, w)
    exhaustive = n_abs**op.arity <= _EXHAUSTIVE_PAIR_BUDGET
    key = (op.id, domain, w, None if exhaustive else n_samples)
    if key not in _verify_tier_cache:
        if exhaustive:
            tier = oracle._exhaustive_tier(op, domain, w)
        else:
            rng = np.random.default_rng((0xA55, w))
            pairs = [
                tuple(sample(domain, w, rng) for _ in range(op.arity))
                for _ in range(n_samples)
            ]
            tier = oracle._exact_tier(op, domain, w, pairs)
        _verify_tier_cache[key] = tier
    return _verify_tier_cache[key]


def _check_tier(candidate, tier: oracle.Tier, domain: Domain):
    """Index of the first violated case in a tier, or None."""
    a, b, bot = oracle.eval_on_tier(candidate, tier, domain)
    ok = oracle.v_contains_value(
        domain, a, b, bot, tier.best_a, tier.best_b, tier.best_bottom, U64(tier.width)
    )
    bad = np.flatnonzero(~ok)
    return None if bad.size == 0 else int(bad[0])


def _witness_at(candidate, tier, domain, op: ConcreteOp, idx):
    """Reconstruct the violating abstract tuple and one concrete tuple."""
    w = tier.width
    ins = tuple(
        AbstractValue(domain, w, int(tier.slots[2 * k][idx]), int(tier.slots[2 * k + 1][idx]))
        for k in range(op.arity)
    )
    a, b, bot = oracle.eval_on_tier(candidate, tier, domain)
    if bot[idx]:
        out = AbstractValue.make_bottom(domain, w)
    else:
        out = AbstractValue(domain, w, int(a[idx]), int(b[idx]))
    f, adm = oracle.op_table(op, w)
    gammas = [oracle._gamma_indices(v) for v in ins]
    if op.arity == 1:
        for x in gammas[0]:
            if adm is not None and not adm[x]:
                continue
            if not contains(out, BitVec(w, int(f[x]))):
                return ins, (BitVec(w, int(x)),)
    else:
        for x in gammas[0]:
            for y in gammas[1]:
                if adm is not None and not adm[x, y]:
                    continue
                if not contains(out, BitVec(w, int(f[x, y]))):
                    return ins, (BitVec(w, int(x)), BitVec(w, int(y)))
    return ins, ()


def verify(
    candidate,
    op: ConcreteOp,
    domain: Domain,
    cfg: OuterConfig | None = None,
) -> Verdict:
    """Soundness check against the best transformer.

    Exhaustive over all abstract tuples at widths 1-4 (and beyond while
    the pair count stays within budget); dense abstract sampling with
    exhaustive concretization up to the configured verify width. If an
    SMT output directory is configured, per-width queries are exported
    for wider bitwidths and the verdict becomes "unknown" rather than
    "sound", since only an external solver can discharge them.
    """
    cfg = cfg or OuterConfig()
    for w in range(1, cfg.verify_width + 1):
        tier = _verify_tier(op, domain, w, cfg.verify_samples)
        idx = _check_tier(candidate, tier, domain)
        if idx is not None:
            return Verdict("unsound", _witness_at(candidate, tier, domain, op, idx))
    files = []
    if cfg.emit_smt_dir is not None:
        out_dir = Path(cfg.emit_smt_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        name = candidate.name if isinstance(candidate, GuardedTransformer) else "meet"
        for w in cfg.smt_widths:
            text = smt.export_smt(candidate, op, domain, w)
            path = out_dir / f"{op.id}_{domain.value}_{name}_{w}.smt2"
            path.write_text(text)
            files.append(str(path))
        return Verdict("unknown", smt_files=tuple(files))
    return Verdict("sound")


# ---- redundancy ------------------------------------------------------


def remove_redundant(f_s: TransformerSet, suite: oracle.TestSuite) -> TransformerSet:
    """Greedy pass in insertion order: drop members whose removal does
    not change the meet's norm on the suite."""
    members = list(f_s.members)
    kept = list(members)
    for t in members:
        if len(kept) <= 1:
            break
        trial = [u for u in kept if u is not t]
        if oracle.norm(trial, suite) == oracle.norm(kept, suite):
            kept = trial
    return TransformerSet(kept)


# ---- the outer loop --------------------------------------------------


def synthesize(
    op_id: str, domain: Domain, cfg: OuterConfig | None = None
) -> tuple[TransformerSet, SynthesisReport]:
    cfg = cfg or OuterConfig()
    op = get_op(op_id)
    scfg = cfg.search
    t_start = time.monotonic()
    suite = oracle.gen_suite(op, domain, cfg.suite_policy, np.random.default_rng(scfg.seed))
    f_s = TransformerSet()
    f_p = PrecisePool()
    weights: dict | None = None
    report = SynthesisReport(op.id, domain.value, scfg.seed)
    best_norm = oracle.norm(_best_eval, suite)
    report.best_norm = best_norm
    stall = 0
    n_members = 0
    ctx: oracle.ScoringContext | None = None

    for rnd in range(cfg.outer_iters):
        iter_t0 = time.monotonic()
        g = f_s.meet_eval()
        cur_norm = oracle.norm(g, suite)
        if cur_norm <= best_norm:
            break  # already exact on the suite, nothing left to gain
        ctx = oracle.ScoringContext(suite, g)
        n_abd = round(scfg.chains * scfg.abduction_fraction) if cfg.abduction else 0
        roles = [search.ABDUCTION] * n_abd + [search.PLAIN] * (scfg.chains - n_abd)
        results = []
        for chain_no, want in enumerate(roles):
            rng = np.random.default_rng((scfg.seed, rnd, chain_no))
            kind, init = search.init_for_kind(
                want, f_p.bodies(), domain, scfg, weights, rng,
                f"c{rnd}_{chain_no}", num_inputs=op.arity,
            )
            results.append(search.mcmc_run(kind, init, ctx, scfg, weights, rng))
            if cfg.time_budget is not None and time.monotonic() - t_start > cfg.time_budget:
                break

        verified = rejected = 0
        survivors: list = []
        seen_texts: set[str] = set()
        for r in results:
            for c in [r.best_sound, *r.top]:
                if c.soundness < 1.0:
                    continue
                text = str(c.transformer)
                if text in seen_texts:
                    continue
                seen_texts.add(text)
                survivors.append(c)
        candidates = sorted(survivors, key=lambda c: c.cost)
        for cand in candidates:
            if cand.improvement <= 0.0:
                continue  # adds nothing over the current meet (incl. trivial top)
            # eager subsumption: skip if the current meet already refines it
            trial = f_s.members + [cand.transformer]
            if oracle.norm(trial, suite) >= oracle.norm(f_s.meet_eval(), suite):
                continue
            verdict = verify(cand.transformer, op, domain, cfg)
            if verdict.status == "sound":
                member = _renamed(cand.transformer, f"f{n_members}")
                n_members += 1
                f_s.members.append(member)
                verified += 1
            else:
                rejected += 1
        for r in results:
            for c in r.top:
                if c.soundness < 1.0 and c.improvement > 0.0:
                    f_p.offer(c.improvement, c.transformer)
        weights = search.update_weights(f_s.members)
        new_norm = oracle.norm(f_s.meet_eval(), suite)
        report.iterations.append(
            {
                "round": rnd,
                "chains": len(results),
                "proposed": sum(r.proposed for r in results),
                "verified": verified,
                "rejected": rejected,
                "norm": new_norm,
                "seed": scfg.seed,
                "weights": {k.value: v for k, v in (weights or {}).items()},
            }
        )
        report.timing[f"round_{rnd}"] = round(time.monotonic() - iter_t0, 3)
        stall = stall + 1 if new_norm >= cur_norm else 0
        if stall >= cfg.stall_limit:
            break
        if cfg.time_budget is not None and time.monotonic() - t_start > cfg.time_budget:
            break

    if not f_s.members:
        f_s.members.append(trivial_top("f0", domain, op.arity))
    f_s = remove_redundant(f_s, suite)
    report.final_programs = f_s.text()
    report.final_norm = oracle.norm(f_s.meet_eval(), suite)
    report.certified_width = 4
    report.timing["total"] = round(time.monotonic() - t_start, 3)
    return f_s, report


def _best_eval(tier, domain):
    return tier.best_a.copy(), tier.best_b.copy(), tier.best_bottom.copy()


def _renamed(t: GuardedTransformer, name: str) -> GuardedTransformer:
    from dataclasses import replace

    body = replace(t.body, name=f"{name}_body" if t.cond is not None else name)
    cond = None if t.cond is None else replace(t.cond, name=f"{name}_cond")
    return GuardedTransformer(name, body, cond)
