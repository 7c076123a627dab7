"""Command-line front end: synthesis runs and the evaluation harness.

Commands:
  synth         synthesize a transformer set for one op and domain
  eval          precision table for transformer files (8-bit exact% or
                64-bit normalized norm) against the best transformer
  product-eval  KnownBits x range reduced-product precision table
  export-smt    per-width SMT-LIB2 soundness queries for a transformer file

The harness never synthesizes; it consumes program-text files produced
by `synth` (or written by hand, e.g. a reference transformer to
compare against). Default output directory comes from ABSYNTH_OUT.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle, outer, search, smt
from .batch import U64
from .concrete_ops import ConcreteOp, get_op
from .domains import AbstractValue, Domain, is_top, meet, sample, top
from .dsl import GuardedTransformer, eval_transformer, parse_transformers
from .product import ProductValue, reduce as reduce_product

_DOMAINS = {"kb": Domain.KNOWN_BITS, "cru": Domain.URANGE, "crs": Domain.SRANGE}

EVAL_TESTS_8 = 1000
EVAL_TESTS_64 = 10000
EVAL_CONCRETE_64 = 10000


@dataclass
class EvalRow:
    op_id: str
    domain: str
    width: int
    n_tests: int
    metric: str  # "exact_pct" | "norm_per_test"
    columns: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)

    def table(self) -> str:
        head = f"{self.op_id} / {self.domain} / width {self.width} ({self.n_tests} tests, {self.metric})"
        rows = [head, "-" * len(head)]
        for name, val in self.columns.items():
            rows.append(f"  {name:<10} {val:10.4f}")
        return "\n".join(rows)


# ---- eval harness ----------------------------------------------------


def _sample_nonempty_pairs(op: ConcreteOp, domain: Domain, width: int, n: int, rng):
    """Rejection-sample abstract tuples whose admissible set is nonempty;
    returns a Tier with exact best outputs."""
    pairs = []
    while len(pairs) < n:
        ins = tuple(sample(domain, width, rng) for _ in range(op.arity))
        if not oracle.best_transformer(op, ins, domain).bottom:
            pairs.append(ins)
    return oracle._exact_tier(op, domain, width, pairs)


def _exact_pct(f, tier: oracle.Tier, domain: Domain) -> float:
    a, b, bot = oracle.eval_on_tier(f, tier, domain)
    hit = (~bot & ~tier.best_bottom & (a == tier.best_a) & (b == tier.best_b)) | (
        bot & tier.best_bottom
    )
    return 100.0 * float(hit.mean())


def _norm_per_test(f, tier: oracle.Tier, domain: Domain) -> float:
    a, b, bot = oracle.eval_on_tier(f, tier, domain)
    sz = oracle.v_size(domain, a, b, U64(tier.width), bot)
    return float(sz.sum()) / tier.n


def evaluate(
    op: ConcreteOp,
    domain: Domain,
    width: int,
    sources: dict[str, list[GuardedTransformer]],
    seed: int = 0,
    n_tests: int | None = None,
) -> EvalRow:
    """Precision columns for named transformer sets, plus top and
    (when two sets are given) their meet."""
    rng = np.random.default_rng(seed)
    named = dict(sources)
    if len(sources) >= 2:
        named["meet"] = [t for ts in sources.values() for t in ts]
    if width <= oracle._ENUM_BUDGET_WIDTH:
        n = n_tests or EVAL_TESTS_8
        tier = _sample_nonempty_pairs(op, domain, width, n, rng)
        row = EvalRow(op.id, domain.value, width, n, "exact_pct")
        row.columns["top"] = _exact_pct(outer._top_eval, tier, domain)
        for name, ts in named.items():
            row.columns[name] = _exact_pct(ts, tier, domain)
    else:
        n = n_tests or EVAL_TESTS_64
        policy = oracle.TierPolicy(
            small_widths=(), mid_widths=(), large_widths=(width,),
            large_samples=n, large_concrete_samples=EVAL_CONCRETE_64,
        )
        tier = oracle._large_tier(op, domain, width, policy, rng)
        row = EvalRow(op.id, domain.value, width, tier.n, "norm_per_test")
        row.columns["top"] = _norm_per_test(outer._top_eval, tier, domain)
        for name, ts in named.items():
            row.columns[name] = _norm_per_test(ts, tier, domain)
    return row


# ---- product eval ----------------------------------------------------


def _sample_product(rng_domain: Domain, width: int, rng) -> ProductValue:
    while True:
        p = ProductValue(sample(Domain.KNOWN_BITS, width, rng), sample(rng_domain, width, rng))
        r = reduce_product(p)
        if not r.is_bottom:
            return r


def _product_best_kb(op: ConcreteOp, inputs: list[ProductValue]) -> AbstractValue:
    """Exact best KnownBits output over the product concretization."""
    w = inputs[0].kb.width
    f, adm = oracle.op_table(op, w)
    members = []
    for p in inputs:
        xs = oracle._gamma_indices(p.kb)
        in_rng = np.isin(xs, oracle._gamma_indices(p.rng))
        members.append(xs[in_rng])
    if any(m.size == 0 for m in members):
        return AbstractValue.make_bottom(Domain.KNOWN_BITS, w)
    if op.arity == 1:
        vals = f[members[0]]
        if adm is not None:
            vals = vals[adm[members[0]]]
    else:
        sub = f[np.ix_(members[0], members[1])]
        vals = sub[adm[np.ix_(members[0], members[1])]] if adm is not None else sub.ravel()
    return oracle._alpha_of_values(Domain.KNOWN_BITS, vals, w)


def _apply_meet(ts: list[GuardedTransformer], ins: list[AbstractValue], width: int) -> AbstractValue:
    acc = top(ins[0].domain, width)
    for t in ts:
        acc = meet(acc, eval_transformer(t, ins, width))
    return acc


def product_evaluate(
    op: ConcreteOp,
    rng_domain: Domain,
    width: int,
    kb_ts: list[GuardedTransformer],
    rng_ts: list[GuardedTransformer],
    seed: int = 0,
    n_tests: int | None = None,
) -> EvalRow:
    """KnownBits precision with and without range-assisted reduction."""
    rng = np.random.default_rng(seed)
    n = n_tests or (EVAL_TESTS_8 if width <= oracle._ENUM_BUDGET_WIDTH else EVAL_TESTS_64)
    exact_mode = width <= oracle._ENUM_BUDGET_WIDTH
    metric = "exact_pct" if exact_mode else "norm_per_test"
    row = EvalRow(op.id, f"kb x {rng_domain.value}", width, n, metric)
    hits = {"top": 0.0, "kb-only": 0.0, "reduced": 0.0}
    for _ in range(n):
        ins = [_sample_product(rng_domain, width, rng) for _ in range(op.arity)]
        kb_out = _apply_meet(kb_ts, [p.kb for p in ins], width)
        rng_out = _apply_meet(rng_ts, [p.rng for p in ins], width)
        if kb_out.bottom or rng_out.bottom:
            reduced_kb = AbstractValue.make_bottom(Domain.KNOWN_BITS, width)
        else:
            reduced_kb = reduce_product(ProductValue(kb_out, rng_out)).kb
        if exact_mode:
            best = _product_best_kb(op, ins)
            hits["top"] += is_top(best) if not best.bottom else False
            hits["kb-only"] += kb_out == best
            hits["reduced"] += reduced_kb == best or (reduced_kb.bottom and best.bottom)
        else:
            from .domains import size

            hits["top"] += width
            hits["kb-only"] += 0 if kb_out.bottom else size(kb_out)
            hits["reduced"] += 0 if reduced_kb.bottom else size(reduced_kb)
    scale = 100.0 / n if exact_mode else 1.0 / n
    row.columns = {k: v * scale for k, v in hits.items()}
    return row


# ---- commands --------------------------------------------------------


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get("ABSYNTH_OUT", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_transformers(path: str, domain: Domain) -> list[GuardedTransformer]:
    ts = parse_transformers(Path(path).read_text())
    for t in ts:
        body_dom = t.body.domain
        # range bodies parse as cru slots; signedness is the caller's domain
        if domain is Domain.KNOWN_BITS and body_dom is not Domain.KNOWN_BITS:
            raise SystemExit(f"{path}: transformer domain {body_dom.value} != kb")
        if domain is not Domain.KNOWN_BITS and body_dom is Domain.KNOWN_BITS:
            raise SystemExit(f"{path}: transformer domain kb != {domain.value}")
    return ts


def cmd_synth(args) -> int:
    domain = _DOMAINS[args.domain]
    scfg = search.SearchConfig(
        n_step=args.inner_steps,
        chains=args.chains,
        seed=args.seed,
        dsl_subset=args.dsl,
    )
    cfg = outer.OuterConfig(
        search=scfg,
        outer_iters=args.outer_iters,
        time_budget=args.time_budget,
        verify_width=args.verify_width,
        abduction=not args.no_abduction,
        emit_smt_dir=args.emit_smt,
    )
    f_s, report = outer.synthesize(args.op, domain, cfg)
    d = _out_dir(args)
    base = f"{args.op}_{args.domain}"
    (d / f"{base}_transformers.txt").write_text(f_s.text() + "\n")
    (d / f"{base}_report.json").write_text(report.to_json() + "\n")
    print(f"wrote {d / (base + '_transformers.txt')} ({len(f_s)} transformers)")
    print(f"final norm {report.final_norm} (best possible {report.best_norm})")
    return 0


def cmd_eval(args) -> int:
    domain = _DOMAINS[args.domain]
    op = get_op(args.op)
    sources = {"synth": _load_transformers(args.transformers, domain)}
    if args.external:
        sources["external"] = _load_transformers(args.external, domain)
    row = evaluate(op, domain, args.width, sources, seed=args.seed, n_tests=args.n_tests)
    print(row.table())
    if args.out:
        path = _out_dir(args) / f"{args.op}_{args.domain}_eval_{args.width}.json"
        path.write_text(row.to_json() + "\n")
        print(f"wrote {path}")
    return 0


def cmd_product_eval(args) -> int:
    rng_domain = _DOMAINS[args.range_domain]
    if rng_domain is Domain.KNOWN_BITS:
        raise SystemExit("--range-domain must be cru or crs")
    op = get_op(args.op)
    kb_ts = _load_transformers(args.kb_transformers, Domain.KNOWN_BITS)
    rng_ts = _load_transformers(args.range_transformers, rng_domain)
    row = product_evaluate(op, rng_domain, args.width, kb_ts, rng_ts, seed=args.seed, n_tests=args.n_tests)
    print(row.table())
    if args.out:
        path = _out_dir(args) / f"{args.op}_product_eval_{args.width}.json"
        path.write_text(row.to_json() + "\n")
        print(f"wrote {path}")
    return 0


def cmd_export_smt(args) -> int:
    domain = _DOMAINS[args.domain]
    op = get_op(args.op)
    ts = _load_transformers(args.transformers, domain)
    d = _out_dir(args)
    for t in ts:
        for w in args.width:
            path = d / f"{op.id}_{args.domain}_{t.name}_{w}.smt2"
            path.write_text(smt.export_smt(t, op, domain, w))
            print(f"wrote {path}")
    return 0


def _add_common(p, with_domain=True):
    p.add_argument("--op", required=True, help="concrete operation id, e.g. Add, Modu, Umax")
    if with_domain:
        p.add_argument("--domain", required=True, choices=sorted(_DOMAINS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default $ABSYNTH_OUT or .)")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="absynth", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a transformer set")
    _add_common(p)
    p.add_argument("--chains", type=int, default=100)
    p.add_argument("--inner-steps", type=int, default=1000)
    p.add_argument("--outer-iters", type=int, default=20)
    p.add_argument("--time-budget", type=float, default=600.0, help="seconds")
    p.add_argument("--dsl", choices=("full", "basic", "bitext"), default="full")
    p.add_argument("--no-abduction", action="store_true")
    p.add_argument("--verify-width", type=int, default=8)
    p.add_argument("--emit-smt", default=None, metavar="DIR")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("eval", help="precision table for transformer files")
    _add_common(p)
    p.add_argument("--transformers", required=True)
    p.add_argument("--external", default=None)
    p.add_argument("--width", type=int, choices=(8, 64), default=8)
    p.add_argument("--n-tests", type=int, default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("product-eval", help="reduced-product precision table")
    _add_common(p, with_domain=False)
    p.add_argument("--kb-transformers", required=True)
    p.add_argument("--range-transformers", required=True)
    p.add_argument("--range-domain", required=True, choices=("cru", "crs"))
    p.add_argument("--width", type=int, choices=(8, 64), default=8)
    p.add_argument("--n-tests", type=int, default=None)
    p.set_defaults(fn=cmd_product_eval)

    p = sub.add_parser("export-smt", help="emit SMT-LIB2 soundness queries")
    _add_common(p)
    p.add_argument("--transformers", required=True)
    p.add_argument("--width", type=int, nargs="+", default=[16, 32, 64])
    p.set_defaults(fn=cmd_export_smt)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except KeyError as e:
        ap.error(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
