"""Command-line entry point: ``autoscale-sim <subcommand>``.

Usage errors exit with status 2 (argparse); runtime failures exit with 1
and print one JSON error object on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .. import agent as dqn
from .. import forecaster as fc
from ..store import ArchiveError, save
from .config import AUTOSCALERS, ConfigInvalid, ExperimentConfig, load_config
from .runner import MismatchedPlans, MissingModel, compare, load_report, run_experiment, write_outputs
from .training import agent_to_archive, forecaster_to_archive, load_forecaster, train_agent, train_forecaster


def _config(args) -> ExperimentConfig:
    return load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()


def cmd_train_forecaster(args) -> int:
    cfg = _config(args)
    seeds = [args.seed + i for i in range(args.seeds)]
    t0 = time.perf_counter()
    fit = train_forecaster(cfg, seeds=seeds, epochs=args.epochs, lr=args.lr)
    save(forecaster_to_archive(fit.model, {"bootstrap_seeds": ",".join(map(str, seeds)),
                                           "epochs": str(args.epochs), "lr": repr(args.lr)}), args.out)
    print(json.dumps({"out": str(args.out), **fit.summary(),
                      "seconds": round(time.perf_counter() - t0, 2)}))
    return 0


def cmd_train_agent(args) -> int:
    cfg = _config(args)
    model = load_forecaster(args.forecaster or cfg.forecaster_path)
    fit = train_agent(cfg, model, episodes=args.episodes, seed=args.seed)
    save(agent_to_archive(fit.agent, {"seed": str(args.seed), "episodes": str(args.episodes),
                                      "train_steps": str(fit.agent.train_steps)}), args.out)
    sys.stdout.write(fit.reward_curve_csv())
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    overrides = {"autoscaler": args.autoscaler or cfg.autoscaler}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.forecaster:
        overrides["forecaster_path"] = args.forecaster
    if args.agent:
        overrides["agent_path"] = args.agent
    cfg = cfg.with_overrides(**overrides)
    report = run_experiment(cfg.validate())
    out = write_outputs(report, args.out or cfg.out_dir or f"runs/{cfg.autoscaler}-{cfg.seed}")
    print(json.dumps({"out": str(out), "autoscaler": report.autoscaler, "seed": report.seed,
                      "avg_replicas": report.avg_replicas, "resource_integral": report.resource_integral,
                      "scaling_events": report.scaling_events}))
    return 0


def cmd_compare(args) -> int:
    table = compare([load_report(p) for p in args.reports])
    sys.stdout.write(table.render())
    if args.json:
        Path(args.json).write_text(json.dumps(table.to_dict(), indent=1) + "\n")
    return 0


def gradcheck(trials: int = 10, seed: int = 0) -> dict:
    """Finite-difference checks of both networks over seeded random trials."""
    rng = np.random.default_rng(seed)
    lstm_errs, dqn_errs = [], []
    for trial in range(trials):
        params = fc.init_params(rng)
        series = np.column_stack([rng.uniform(200.0, 2000.0, fc.LOOKBACK + 1),
                                  rng.integers(1, 8, fc.LOOKBACK + 1).astype(float)])
        scaler = fc.fit_scaler(series)
        lstm_errs.append(fc.grad_check(params, scaler, (series[:-1], float(series[-1, 0])), seed=trial))

        main, target = dqn.init_params(rng), dqn.init_params(rng)

        def state():
            return dqn.StateVector(*rng.uniform(0.0, 120.0, 3), int(rng.integers(1, 11)))

        exps = [dqn.Experience(state(), dqn.ACTIONS[int(rng.integers(3))], float(rng.normal(0.0, 1.0)),
                               state(), bool(rng.random() < 0.25)) for _ in range(4)]
        batch = dqn.Batch.from_experiences(exps, 10)
        dqn_errs.append(dqn.dqn_grad_check(main, target, batch))
    return {"trials": trials, "lstm_max_rel_error": max(lstm_errs), "dqn_max_rel_error": max(dqn_errs)}


def cmd_gradcheck(args) -> int:
    t0 = time.perf_counter()
    res = gradcheck(args.trials, args.seed)
    res["seconds"] = round(time.perf_counter() - t0, 2)
    res["pass"] = res["lstm_max_rel_error"] < 1e-4 and res["dqn_max_rel_error"] < 1e-4
    print(json.dumps(res))
    return 0 if res["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autoscale-sim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train-forecaster", help="bootstrap data with HPA runs and fit the LSTM")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0, help="first bootstrap load seed")
    s.add_argument("--seeds", type=int, default=5, help="number of bootstrap runs")
    s.add_argument("--epochs", type=int, default=1500)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--out", default="models/forecaster.nbg.json")
    s.set_defaults(func=cmd_train_forecaster)

    s = sub.add_parser("train-agent", help="episodic DQN training; prints the reward curve as CSV")
    s.add_argument("--config")
    s.add_argument("--forecaster", help="forecaster archive (default: config forecaster_path)")
    s.add_argument("--episodes", type=int, default=150)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="models/agent.nbg.json")
    s.set_defaults(func=cmd_train_agent)

    s = sub.add_parser("run", help="run one phased experiment")
    s.add_argument("--autoscaler", choices=AUTOSCALERS)
    s.add_argument("--seed", type=int)
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--forecaster")
    s.add_argument("--agent")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("compare", help="tabulate saved report.json files")
    s.add_argument("reports", nargs="+")
    s.add_argument("--json", help="also write the table as JSON")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("gradcheck", help="finite-difference checks of both networks")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gradcheck)
    return p


RUNTIME_ERRORS = (ConfigInvalid, MissingModel, MismatchedPlans, ArchiveError, OSError, ValueError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RUNTIME_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
