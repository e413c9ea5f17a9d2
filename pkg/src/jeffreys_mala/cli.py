"""Command-line interface.

Subcommands:

* ``sample``     — run the prior sampler for a named model over a box.
* ``experiment`` — reproduce a bundled experiment (coin | sv | weibull).
* ``validate``   — run the oracle/invariant self-checks.

Exit codes: 0 success, 2 configuration error, 3 estimation failure,
4 validation failure.  The default output directory comes from
``JEFFREYS_MALA_OUTPUT`` (falling back to ./results).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

from .errors import (
    ChainInitError,
    ContractViolationError,
    DegenerateFilterError,
    DegenerateSmootherError,
    DomainError,
    EstimationFailedError,
    SingularFimError,
)
from .experiments import DEFAULT_SEED, ExperimentConfig, run_experiment, run_sample

_CONFIG_ERRORS = (ContractViolationError, DomainError)
_ESTIMATION_ERRORS = (
    EstimationFailedError,
    DegenerateFilterError,
    DegenerateSmootherError,
    SingularFimError,
    ChainInitError,
)


def _default_output() -> str:
    return os.environ.get("JEFFREYS_MALA_OUTPUT", "results")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"master seed (default {DEFAULT_SEED}, recorded in metadata)")
    parser.add_argument("-o", "--output", default=None,
                        help="output directory (default $JEFFREYS_MALA_OUTPUT or ./results)")
    parser.add_argument("--tau", type=float, default=None, help="MALA step size")
    parser.add_argument("--iters", type=int, default=None,
                        help="retained samples per realization")
    parser.add_argument("--burn-in", type=int, default=None,
                        help="extra burn-in steps (default iters // 10)")
    parser.add_argument("--delta", type=float, default=None,
                        help="one-point perturbation step")
    parser.add_argument("--particles", type=int, default=1000)
    parser.add_argument("--t-len", type=int, default=1000,
                        help="simulated series length per information estimate")
    parser.add_argument("--mc-runs", type=int, default=25,
                        help="replicates per reference-grid estimate")
    parser.add_argument("--chain-mc-runs", type=int, default=1,
                        help="replicates per chain-time estimate")
    parser.add_argument("--realizations", type=int, default=None)
    parser.add_argument("--bins", type=int, default=50)
    parser.add_argument("--grid-points", type=int, default=13)
    parser.add_argument("--curve-points", type=int, default=501)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--quick", action="store_true",
                        help="desk-scale preset (sv: T=200, N=2000, particles=500)")
    parser.add_argument("--fim-draws", type=int, default=200,
                        help="simulated draws per empirical information estimate")
    parser.add_argument("--n-train", type=int, default=1000)
    parser.add_argument("--n-obs", type=int, default=200)
    parser.add_argument("--k", dest="k_neighbors", type=int, default=5)
    parser.add_argument("--n-validation", type=int, default=1000)
    parser.add_argument("--thin", type=int, default=3)


def _config_from(args: argparse.Namespace, experiment: str) -> ExperimentConfig:
    mapping = dict(
        experiment=experiment,
        seed=args.seed,
        output_dir=args.output if args.output is not None else _default_output(),
        tau=args.tau,
        iterations=args.iters,
        burn_in=args.burn_in,
        delta=args.delta,
        particles=args.particles,
        t_len=args.t_len,
        mc_runs=args.mc_runs,
        chain_mc_runs=args.chain_mc_runs,
        realizations=args.realizations,
        bins=args.bins,
        grid_points=args.grid_points,
        curve_points=args.curve_points,
        workers=args.workers,
        quick=args.quick,
        fim_draws=args.fim_draws,
        n_train=args.n_train,
        n_obs=args.n_obs,
        k_neighbors=args.k_neighbors,
        n_validation=args.n_validation,
        thin=args.thin,
    )
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in mapping.items() if k in known})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jeffreys-mala",
        description="Gradient-driven MCMC sampling of sqrt-information priors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="sample the prior for a named model")
    p_sample.add_argument("--model", required=True, choices=["coin", "sv", "weibull", "lgss"])
    p_sample.add_argument("--lower", type=float, nargs="+", default=None)
    p_sample.add_argument("--upper", type=float, nargs="+", default=None)
    _add_common(p_sample)

    p_exp = sub.add_parser("experiment", help="reproduce a bundled experiment")
    p_exp.add_argument("name", choices=["coin", "sv", "weibull"])
    _add_common(p_exp)

    p_val = sub.add_parser("validate", help="run the self-check suite")
    p_val.add_argument("--quick", action="store_true", help="subset finishing in under a minute")
    p_val.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sample":
            cfg = _config_from(args, "sample")
            meta = run_sample(cfg, args.model, args.lower, args.upper)
            print(f"wrote artifacts to {cfg.output_dir} (config {meta['config_hash'][:12]})")
            return 0
        if args.command == "experiment":
            cfg = _config_from(args, args.name)
            meta = run_experiment(cfg)
            print(f"wrote artifacts to {cfg.output_dir} (config {meta['config_hash'][:12]})")
            return 0
        if args.command == "validate":
            from .validate import run_checks

            results = run_checks(seed=args.seed, quick=args.quick)
            failed = [r for r in results if not r.ok]
            if failed:
                print(f"{len(failed)}/{len(results)} checks failed")
                return 4
            print(f"all {len(results)} checks passed")
            return 0
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _ESTIMATION_ERRORS as exc:
        print(f"estimation failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
