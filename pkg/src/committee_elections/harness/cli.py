"""Command line entry point: ``committee-elections <verb> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from ..analytics import (
    BoundInapplicableError,
    BudgetExceededError,
    ToleranceSpec,
    lottery_failure,
    lottery_success,
    min_committee_size,
)
from ..distributions import NumericInstabilityError
from ..signal_model import SignalParams, posterior
from ..strategies import QuadratureError
from .config import ConfigError, ExperimentSpec, load_config
from .experiments import rows_to_csv, run_experiment, spec_metadata, write_results
from .figures import FIGURE_IDS, UnknownFigureError, reproduce_figure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", help="YAML experiment file")
    g.add_argument("--seed", type=int, help="override the config seed")
    g.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    g.add_argument("--out", help="CSV output path (a .json sidecar is written next to it)")
    g.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    g.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="committee-elections", parents=[common])
    sub = parser.add_subparsers(dest="verb", required=True)

    post = sub.add_parser("posterior", parents=[common], help="posterior honesty of raw signal(s)")
    post.add_argument("signals", type=float, nargs="+")
    post.add_argument("--p", type=float, default=0.75)
    post.add_argument("--p-h", type=float, default=0.75)
    post.add_argument("--p-m", type=float, default=0.5)
    post.add_argument("--sigma", type=float, default=0.1)

    for verb, text in (
        ("success-exact", "closed-form success for threshold voters"),
        ("simulate", "Monte Carlo success estimate"),
        ("sweep", "run the config's sweep with its engine"),
    ):
        sub.add_parser(verb, parents=[common], help=text)

    size = sub.add_parser("committee-size", parents=[common], help="minimum committee size for a target failure")
    size.add_argument("--target", type=float, required=True)
    size.add_argument("--method", choices=("lottery", "voting"), default="lottery")
    size.add_argument("--p", type=float, default=0.8)
    size.add_argument("--rho", default="1/3")
    size.add_argument("--k-max", type=int, default=100_000)

    lot = sub.add_parser("lottery", parents=[common], help="lottery success probability")
    lot.add_argument("--k", type=int, required=True)
    lot.add_argument("--p", type=float, required=True)
    lot.add_argument("--rho", default="1/3")
    lot.add_argument("--mode", choices=("exact", "chernoff"), default="exact")

    rep = sub.add_parser("reproduce", parents=[common], help="regenerate a figure's data")
    rep.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    return parser


def _spec(args, engine: str | None = None) -> ExperimentSpec:
    if not args.config:
        raise ConfigError("--config is required for this command", "<args>")
    spec = load_config(args.config, args.out)
    if args.seed is not None:
        spec = replace(spec, settings=replace(spec.settings, seed=args.seed))
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    if engine is not None:
        try:
            spec = replace(spec, engine=engine)
        except ValueError as exc:
            raise ConfigError(str(exc), args.config) from None
    return spec


def _emit_rows(args, spec: ExperimentSpec, out) -> None:
    rows = run_experiment(spec, workers=args.threads, timing=args.timing)
    if args.out:
        write_results(rows, args.out, spec_metadata(spec))
    else:
        out.write(rows_to_csv(rows))


def _run(args, out) -> int:
    verb = args.verb
    if verb == "posterior":
        params = SignalParams(args.p, args.p_h, args.p_m, args.sigma)
        for s in args.signals:
            out.write(f"{s!r},{posterior(s, params)!r}\n")
        return EXIT_OK
    if verb in ("success-exact", "simulate", "sweep"):
        engine = {"success-exact": "exact", "simulate": "mc", "sweep": None}[verb]
        _emit_rows(args, _spec(args, engine), out)
        return EXIT_OK
    if verb == "lottery":
        tol = ToleranceSpec(args.rho)
        result = {
            "k": args.k,
            "p": args.p,
            "rho": str(tol.rho),
            "mode": args.mode,
            "success": lottery_success(args.k, args.p, tol, args.mode),
        }
        if args.mode == "exact":
            result["failure"] = lottery_failure(args.k, args.p, tol)
        out.write(json.dumps(result) + "\n")
        return EXIT_OK
    if verb == "committee-size":
        if args.method == "lottery":
            k = min_committee_size(args.target, "lottery", (args.p, args.rho), k_max=args.k_max)
        else:
            spec = _spec(args)
            k = min_committee_size(
                args.target, "voting", spec.base, k_max=args.k_max, trials=args.trials or spec.trials,
                workers=args.threads,
            )
        out.write(json.dumps({"method": args.method, "target": args.target, "k": k}) + "\n")
        return EXIT_OK
    if verb == "reproduce":
        path = args.out or f"{args.figure_id}.csv"
        reproduce_figure(args.figure_id, path, trials=args.trials, seed=args.seed, workers=args.threads,
                         timing=args.timing)
        out.write(f"{path}\n")
        return EXIT_OK
    raise AssertionError(verb)


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return _run(args, out)
    except (ConfigError, UnknownFigureError, BoundInapplicableError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except (NumericInstabilityError, QuadratureError) as exc:
        err.write(f"numeric instability: {exc}\n")
        return EXIT_NUMERIC
    except BudgetExceededError as exc:
        err.write(f"budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except ValueError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
