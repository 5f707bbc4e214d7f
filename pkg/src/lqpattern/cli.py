"""Command-line front end.

Subcommands::

    lqpattern check  --config FILE          assumptions and feasibility only
    lqpattern synth  --config FILE          design and certificates
    lqpattern run    --config FILE          full pipeline with simulation
    lqpattern reproduce-paper               both bundled 3x3 scenarios
    lqpattern sweep  --config FILE          basin sampling with simulation

Each writes ``summary.json`` (and for simulations ``trajectory.csv`` and
snapshots) under ``--out`` and exits with the pipeline's exit code.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import BUNDLED_SCENARIOS, RandomDraw, Scenario, bundled_scenario, load_scenario
from .exceptions import ConfigError
from .patterns import is_in_pattern
from .pipeline import EXIT_CONFIG, EXIT_OK, EXIT_UNEXPECTED, run_pipeline, write_summary
from .sim import recommended_horizon, simulate_lti

__all__ = ["main", "build_parser"]

_STOP = {"check": "check", "synth": "observer", "run": "simulation"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqpattern",
        description="Leader-driven Laplacian pattern formation: design, certify and simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="scenario YAML file")
        p.add_argument("--out", default=None, help="output directory (default: scenario 'output' or ./out/<name>)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--mode", choices=("centralized", "distributed"), default=None,
                       help="override the scenario mode")

    for name, text in (
        ("check", "assumptions and feasibility only"),
        ("synth", "controller/observer design and certificates"),
        ("run", "full pipeline including simulation"),
    ):
        common(sub.add_parser(name, help=text))

    rp = sub.add_parser("reproduce-paper", help="run the bundled 3x3 stripe scenarios")
    common(rp, config_required=False)

    sp = sub.add_parser("sweep", help="sample initial states and compare basin predictions with simulation")
    common(sp)
    sp.add_argument("--samples", type=int, default=20, help="number of random initial states")
    sp.add_argument("--workers", type=int, default=1, help="parallel simulation processes")
    return parser


def _load(args: argparse.Namespace) -> Scenario:
    sc = load_scenario(args.config)
    return sc.with_overrides(seed=args.seed, mode=args.mode)


def _out_dir(args: argparse.Namespace, sc: Scenario) -> Path:
    if args.out is not None:
        return Path(args.out)
    if sc.output:
        return Path(sc.output)
    return Path("out") / sc.name


def _report(sc: Scenario, code: int, summary: dict, out: Path) -> None:
    verdict = "ok" if code == EXIT_OK else f"FAILED at {summary.get('failed_stage')}"
    print(f"[{sc.name}] {verdict} (exit {code}): {summary.get('message')}")
    if "pattern_formed" in summary:
        print(f"[{sc.name}] pattern formed: {summary['pattern_formed']}  final signs: {summary['final_signs']}")
    print(f"[{sc.name}] artifacts in {out}")


def _run_one(sc: Scenario, out: Path, stop_after: str) -> int:
    result = run_pipeline(sc, out, stop_after=stop_after)
    _report(sc, result.exit_code, result.summary, out)
    return result.exit_code


def _simulate_sample(args: tuple) -> np.ndarray:
    M, w0, t_end, dt, tol = args
    # record sparsely; only the final state is needed
    return simulate_lti(M, w0, t_end, dt, record_every=max(1, int(round(t_end / dt))), tol=tol).limit_estimate


def _sweep(sc: Scenario, out: Path, samples: int, workers: int) -> int:
    if samples < 1:
        raise ConfigError("--samples must be at least 1")
    base = run_pipeline(sc, out, stop_after="observer")
    if base.exit_code != EXIT_OK:
        _report(sc, base.exit_code, base.summary, out)
        return base.exit_code
    cd, es = base.design, base.error_system
    n, m = cd.n, cd.m
    box = sc.x0.random if isinstance(sc.x0, RandomDraw) else None
    lo, hi = (box.lo, box.hi) if box else (-5.0, 5.0)
    rng = np.random.default_rng([sc.seed, 99])
    g, spec = sc.build_graph(), sc.pattern()

    from .centralized import in_basin_u1, predict_limit
    from .observer import in_basin_u2, predict_limit_distributed

    # long enough for the slowest mode to fall by 1e-9, so the membership test sees the limit
    M = es.Mhat if sc.mode == "distributed" else cd.Atilde
    t_end = max(sc.simulation.t_end, recommended_horizon(M, 1e-9))
    dt, tol = sc.simulation.dt, sc.simulation.tol
    rows, jobs = [], []
    for _ in range(samples):
        xbar0 = rng.uniform(lo, hi, n + m)
        if sc.mode == "distributed":
            e0 = (rng.uniform(lo, hi, (m, n + m)) - xbar0).ravel()
            basin = in_basin_u2(es, cd, xbar0, e0, spec)
            pred = predict_limit_distributed(es, cd, xbar0, e0)
            jobs.append((M, np.concatenate([xbar0, e0]), t_end, dt, tol))
        else:
            basin = in_basin_u1(cd, xbar0, spec)
            pred = predict_limit(cd, xbar0)
            jobs.append((M, xbar0, t_end, dt, tol))
        rows.append((basin, pred))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(_simulate_sample, jobs))
    else:
        finals = [_simulate_sample(j) for j in jobs]

    path = out / "sweep.csv"
    agree = 0
    worst = 0.0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "projection", "threshold", "in_basin", "pattern_formed", "limit_rel_error"])
        for k, ((basin, pred), final) in enumerate(zip(rows, finals)):
            x = final[: cd.system.size]
            formed = is_in_pattern(x[:n], g, spec, sc.tolerances.pattern)
            err = float(np.linalg.norm(x - pred) / max(np.linalg.norm(pred), 1e-300))
            worst = max(worst, err)
            agree += int(formed == basin.member)
            w.writerow([k, repr(float(basin.projection)), repr(float(basin.threshold)), basin.member, formed, repr(err)])
    summary = dict(base.summary)
    summary["sweep"] = {
        "samples": samples,
        "agreement": agree,
        "max_limit_rel_error": worst,
        "box": [lo, hi],
        "t_end": t_end,
        "seed": sc.seed,
    }
    write_summary(summary, out / "summary.json")
    print(f"[{sc.name}] sweep: basin verdict matched simulation in {agree}/{samples} samples; "
          f"max limit error {worst:.2e}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce-paper":
            if args.config is not None:
                scenarios = [_load(args)]
            else:
                scenarios = [bundled_scenario(name).with_overrides(seed=args.seed, mode=args.mode)
                             for name in BUNDLED_SCENARIOS]
            root = Path(args.out) if args.out is not None else Path("out")
            codes = [_run_one(sc, root / sc.name, "simulation") for sc in scenarios]
            return next((c for c in codes if c != EXIT_OK), EXIT_OK)
        sc = _load(args)
        out = _out_dir(args, sc)
        if args.command == "sweep":
            return _sweep(sc, out, args.samples, args.workers)
        return _run_one(sc, out, _STOP[args.command])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            write_summary({"status": "failed", "failed_stage": "config", "message": str(exc),
                           "exit_code": EXIT_CONFIG}, out / "summary.json")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main())
