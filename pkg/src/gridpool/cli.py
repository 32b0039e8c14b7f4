"""Command-line front end.

Thin adapters only: every subcommand parses arguments, calls the library
and serializes the result.  Exit codes: 0 success, 1 infeasible design or
validation failure, 2 usage / configuration / I/O errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys
from dataclasses import dataclass, asdict

from . import design as _design
from . import decoder as _decoder
from . import harness as _harness
from . import optimize as _optimize
from . import rates as _rates
from .loads import INF

__all__ = ["CommandOutcome", "run_command", "main"]


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str]


class _Usage(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _parse_precision(text: str) -> int | float:
    if text.lower() in ("inf", "infinite", "infinity"):
        return INF
    return int(text)


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _parse_precisions(text: str) -> list:
    return [_parse_precision(tok) for tok in text.split(",") if tok]


def _json_ready(obj) -> dict:
    out = {}
    for key, value in asdict(obj).items():
        out[key] = "inf" if value == INF else value
    return out


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="gridpool")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("GRIDPOOL_THREADS", "1")),
                        help="worker process cap (env GRIDPOOL_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="build, certify and export a pool design")
    p_design.add_argument("--n", type=int, required=True)
    p_design.add_argument("--L", type=int, required=True)
    p_design.add_argument("--out", help="membership CSV path")
    p_design.add_argument("--certify", action="store_true",
                          help="exhaustively verify the multipool properties")

    p_decode = sub.add_parser("decode", help="decode measured pool values")
    p_decode.add_argument("--design", required=True, help="design membership CSV")
    p_decode.add_argument("--measurements", required=True, help="pool_index,value CSV")
    p_decode.add_argument("--out", required=True, help="per-item result CSV")

    p_bounds = sub.add_parser("bounds", help="closed-form rate bounds as JSON")
    p_bounds.add_argument("--regime", choices=["exact", "np-zero", "poisson"],
                          default="exact")
    p_bounds.add_argument("--n", type=int)
    p_bounds.add_argument("--L", type=int)
    p_bounds.add_argument("--p", type=float)
    p_bounds.add_argument("--K", type=_parse_precision)
    p_bounds.add_argument("--lam", type=float, help="pool intensity for the poisson regime")
    p_bounds.add_argument("--sweep-out", help="write a rates-vs-L CSV instead of JSON")
    p_bounds.add_argument("--L-max", type=int, default=14)
    p_bounds.add_argument("--K-list", type=_parse_precisions,
                          default=[1, 2, 5, 10, INF])

    p_opt = sub.add_parser("optimize", help="choose (n, L) for tolerances")
    p_opt.add_argument("--regime", choices=["fixed", "vanishing", "asymptotic"],
                       required=True)
    p_opt.add_argument("--p", type=float, required=True)
    p_opt.add_argument("--K", type=_parse_precision, default=INF)
    p_opt.add_argument("--L", type=int)
    p_opt.add_argument("--epsilon", type=float)
    p_opt.add_argument("--eta", type=float)
    p_opt.add_argument("--alpha", type=float)
    p_opt.add_argument("--beta", type=float)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo sweep to CSV")
    p_sim.add_argument("--config", help="JSON file mirroring the sweep configuration")
    p_sim.add_argument("--seed", type=int, help="master seed (overrides config)")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--n-values", type=_parse_ints)
    p_sim.add_argument("--L-max", type=int)
    p_sim.add_argument("--p-values", type=_parse_floats)
    p_sim.add_argument("--K-values", type=_parse_precisions)
    p_sim.add_argument("--replicates", type=int)

    p_cmp = sub.add_parser("compare", help="optimized grid efficiency vs baselines")
    p_cmp.add_argument("--p-values", type=_parse_floats,
                       default=list(_harness.DEFAULT_P_VALUES))
    p_cmp.add_argument("--K", type=_parse_precision, default=30)
    p_cmp.add_argument("--epsilons", type=_parse_floats, default=[0.02, 0.08, 0.2])
    p_cmp.add_argument("--eta", type=float, default=0.01)
    p_cmp.add_argument("--replicates", type=int, default=200)
    p_cmp.add_argument("--seed", type=int)
    p_cmp.add_argument("--n-values", type=_parse_ints,
                       default=list(_harness.DEFAULT_N_VALUES))
    p_cmp.add_argument("--L-max", type=int, default=14)
    p_cmp.add_argument("--baseline-items", type=int, default=10_000)
    p_cmp.add_argument("--baseline-c", type=float, default=math.log(2.0))
    p_cmp.add_argument("--baseline-C", type=float, default=1.0 / math.log(2.0))
    p_cmp.add_argument("--out", required=True)
    return parser


def _require(args, names) -> None:
    missing = [name for name in names if getattr(args, name.lstrip("-").replace("-", "_")) is None]
    if missing:
        raise _Usage(f"missing required flags for this mode: {', '.join(missing)}")


def _cmd_design(args) -> CommandOutcome:
    design = _design.build_design(args.n, args.L)
    if args.certify:
        _design.certify_design(design)
        print(f"certified multipool: n={args.n} L={args.L} "
              f"({design.n_pools} pools, {args.n * args.n} items)")
    artifacts = []
    if args.out:
        design.to_csv(args.out)
        artifacts.append(args.out)
        print(f"wrote {args.out}")
    return CommandOutcome(0, artifacts)


def _cmd_decode(args) -> CommandOutcome:
    design = _design.GridDesign.from_csv(args.design)
    meas = _decoder.Measurements.from_csv(args.measurements, n=design.n, L=design.L)
    result = _decoder.decode(design, meas)
    result.to_csv(args.out)
    print(f"wrote {args.out}")
    return CommandOutcome(0, [args.out])


def _bounds_sweep(args) -> CommandOutcome:
    import csv as _csv

    _require(args, ["--lam"])
    with open(args.sweep_out, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "L", "K", "fnr", "fpr", "fnr_exact"])
        for K in args.K_list:
            for L in range(1, args.L_max + 1):
                fnr = _rates.poisson_fnr(args.lam, L, K)
                fpr = _rates.poisson_fpr_bound(args.lam, L, K)
                w.writerow([format(args.lam, ".17g"), L, "inf" if K == INF else K,
                            format(fnr, ".17g"), format(fpr, ".17g"),
                            int(K == INF)])
    print(f"wrote {args.sweep_out}")
    return CommandOutcome(0, [args.sweep_out])


def _cmd_bounds(args) -> CommandOutcome:
    if args.sweep_out:
        return _bounds_sweep(args)
    k_out = "inf" if args.K == INF else args.K
    if args.regime == "poisson":
        _require(args, ["--lam", "--L", "--K"])
        bounds = _rates.RateBounds(
            fnr_bound=_rates.poisson_fnr(args.lam, args.L, args.K),
            fpr_bound=_rates.poisson_fpr_bound(args.lam, args.L, args.K),
            regime="poisson",
            inputs={"lambda": args.lam, "L": args.L, "K": k_out},
        )
        payload = {**asdict(bounds), "fnr_is_exact": args.K == INF}
    else:
        _require(args, ["--n", "--L", "--p", "--K"])
        if args.regime == "np-zero":
            fnr, fpr = _rates.np_zero_equivalents(args.n, args.L, args.p, args.K)
            regime = "np_to_zero"
        else:
            fnr = _rates.fnr_bound(args.n, args.L, args.p, args.K)
            fpr = _rates.fpr_bound(args.n, args.L, args.p, args.K)
            regime = "exact"
        bounds = _rates.RateBounds(
            fnr_bound=fnr, fpr_bound=fpr, regime=regime,
            inputs={"n": args.n, "L": args.L, "p": args.p, "K": k_out},
        )
        payload = asdict(bounds)
    print(json.dumps(payload, indent=2))
    return CommandOutcome(0, [])


def _cmd_optimize(args) -> CommandOutcome:
    spec = _optimize.ToleranceSpec(epsilon=args.epsilon, eta=args.eta,
                                   alpha=args.alpha, beta=args.beta)
    if args.regime == "fixed":
        _require(args, ["--L", "--epsilon"])
        choice = _optimize.choose_n_fixed(args.p, args.K, args.L, spec)
    elif args.regime == "vanishing":
        _require(args, ["--L", "--alpha"])
        choice = _optimize.choose_n_vanishing(args.p, args.K, args.L, spec)
    else:
        _require(args, ["--epsilon"])
        choice = _optimize.optimal_design_asymptotic(args.p, args.epsilon)
    print(json.dumps(_json_ready(choice), indent=2))
    return CommandOutcome(0, [])


def _resolve_seed(seed) -> int:
    if seed is None:
        seed = secrets.randbits(63)
        print(f"derived master seed: {seed}", file=sys.stderr)
    return seed


def _cmd_simulate(args) -> CommandOutcome:
    if args.config:
        config = _harness.SweepConfig.from_json(args.config)
    else:
        config = _harness.SweepConfig()
    overrides = {}
    if args.n_values is not None:
        overrides["n_values"] = tuple(args.n_values)
    if args.L_max is not None:
        overrides["L_max"] = args.L_max
    if args.p_values is not None:
        overrides["p_values"] = tuple(args.p_values)
    if args.K_values is not None:
        overrides["K_values"] = tuple(args.K_values)
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.seed is not None:
        seed = args.seed
    elif args.config:
        seed = config.master_seed
    else:
        seed = None
    overrides["master_seed"] = _resolve_seed(seed)
    if overrides:
        config = _harness.SweepConfig(**{**asdict(config), **overrides})
    cells = _harness.run_sweep(config, workers=max(1, args.threads))
    _harness.write_results_csv(cells, args.out, master_seed=config.master_seed)
    print(f"wrote {args.out} ({len(cells)} cells)")
    return CommandOutcome(0, [args.out])


def _cmd_compare(args) -> CommandOutcome:
    seed = _resolve_seed(args.seed)
    rows = _harness.run_compare(
        p_values=args.p_values, K=args.K, epsilons=args.epsilons, eta=args.eta,
        replicates=args.replicates, master_seed=seed,
        n_values=tuple(args.n_values), L_max=args.L_max,
        baseline_items=args.baseline_items, c=args.baseline_c, C=args.baseline_C,
        workers=max(1, args.threads),
    )
    _harness.write_compare_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return CommandOutcome(0, [args.out])


_HANDLERS = {
    "design": _cmd_design,
    "decode": _cmd_decode,
    "bounds": _cmd_bounds,
    "optimize": _cmd_optimize,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def run_command(argv) -> CommandOutcome:
    """Parse and execute one subcommand; never raises for expected failures."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return CommandOutcome(2, [])
    try:
        return _HANDLERS[args.command](args)
    except (_design.DesignError, _optimize.Infeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return CommandOutcome(1, [])
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(2, [])
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(2, [])


def main() -> None:
    sys.exit(run_command(sys.argv[1:]).exit_code)
