"""Scenario pipeline: check, equilibrium, CARE, certificate, observer, simulation.

:func:`run_pipeline` never raises for modelling failures. It stops at the
first failing stage, records it in the summary and returns an exit code:

====  ==========================================
0     success
1     unexpected error
2     configuration error
3     pattern is not an equilibrium (infeasible)
4     a standing assumption fails
5     solver failure
6     simulation did not converge
====  ==========================================

The summary is written with sorted keys and no timestamps, so the same
scenario and seed give a byte-identical file.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .centralized import CentralizedDesign, certify_spectrum, in_basin_u1, predict_limit, synthesize_centralized
from .config import RandomDraw, Scenario
from .exceptions import AssumptionError, ConfigError, SimulationError, SolverError
from .observer import (
    ErrorSystem,
    ObserverDesign,
    build_error_system,
    build_measurements,
    design_observer,
    gain_condition_matrix,
    in_basin_u2,
    predict_limit_distributed,
)
from .patterns import build_pattern_matrix, is_in_pattern, sign_string
from .plant import AugmentedSystem, Infeasible, PlantModel, build_augmented, check_assumptions, solve_equilibrium
from .sim import SimOptions, TrajectoryRecord, simulate_centralized, simulate_distributed, write_trajectory_csv

__all__ = [
    "EXIT_OK",
    "EXIT_UNEXPECTED",
    "EXIT_CONFIG",
    "EXIT_INFEASIBLE",
    "EXIT_ASSUMPTION",
    "EXIT_SOLVER",
    "EXIT_NONCONVERGENCE",
    "PipelineResult",
    "InitialData",
    "draw_initial_data",
    "run_pipeline",
    "write_summary",
]

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_ASSUMPTION = 4
EXIT_SOLVER = 5
EXIT_NONCONVERGENCE = 6

STAGES = ("check", "equilibrium", "care", "certificate", "observer", "simulation")
_STREAMS = {"x0": 0, "z0": 1, "observer": 2}


@dataclass
class InitialData:
    xbar0: NDArray[np.float64]
    e0: NDArray[np.float64] | None
    seeds: dict[str, int | None]


@dataclass
class PipelineResult:
    exit_code: int
    summary: dict[str, Any]
    design: CentralizedDesign | None = None
    observer: ObserverDesign | None = None
    error_system: ErrorSystem | None = None
    record: TrajectoryRecord | None = None
    initial: InitialData | None = None
    artifacts: dict[str, Path] = field(default_factory=dict)


def _clean(value: Any) -> Any:
    """JSON-safe copy: arrays to lists, numpy scalars to Python, NaN/inf to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def write_summary(summary: dict[str, Any], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _draw(spec: list[float] | RandomDraw, size: int, seed: int, stream: str) -> tuple[NDArray, int | None]:
    if isinstance(spec, RandomDraw):
        box = spec.random
        used = box.seed if box.seed is not None else seed
        # independent stream per quantity so changing one draw leaves the others alone
        rng = np.random.default_rng([used, _STREAMS[stream]])
        return rng.uniform(box.lo, box.hi, size), used
    return np.asarray(spec, dtype=float), None


def draw_initial_data(sc: Scenario, n: int, m: int) -> InitialData:
    """Resolve ``x0``, ``z0`` and the observer errors, echoing the seeds used."""
    x0, sx = _draw(sc.x0, n, sc.seed, "x0")
    z0, sz = _draw(sc.z0, m, sc.seed, "z0")
    xbar0 = np.concatenate([x0, z0])
    seeds: dict[str, int | None] = {"scenario": sc.seed, "x0": sx, "z0": sz, "observer": None}
    e0 = None
    if sc.mode == "distributed":
        init = sc.observer.init
        if init == "exact":
            e0 = np.zeros(m * (n + m))
        elif isinstance(init, RandomDraw):
            estimates, seeds["observer"] = _draw(init, m * (n + m), sc.seed, "observer")
            e0 = (estimates.reshape(m, n + m) - xbar0).ravel()
        else:
            e0 = (np.asarray(init, dtype=float) - xbar0).ravel()
    return InitialData(xbar0=xbar0, e0=e0, seeds=seeds)


class _StageFailure(Exception):
    def __init__(self, stage: str, code: int, message: str, details: dict | None = None):
        super().__init__(message)
        self.stage = stage
        self.code = code
        self.details = details or {}


def _rel_error(a: NDArray, b: NDArray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _stage_check(sc: Scenario, summary: dict) -> tuple[PlantModel, NDArray]:
    g = sc.build_graph()
    spec = sc.pattern()
    p = PlantModel(g, sc.a, tuple(sc.leaders))
    Q = build_pattern_matrix(g, spec)
    report = check_assumptions(p, Q)
    summary["stages"]["check"] = {
        **report.as_dict(),
        "n": p.n,
        "m": p.m,
        "edges": g.num_edges,
        "leaders": list(p.leaders),
        "alpha": sign_string(spec.alpha),
    }
    if not report.connected:
        raise _StageFailure("check", EXIT_ASSUMPTION, "graph is not connected")
    return p, Q


def _stage_equilibrium(sc: Scenario, p: PlantModel, summary: dict):
    eq = solve_equilibrium(p, sc.pattern())
    if isinstance(eq, Infeasible):
        summary["stages"]["equilibrium"] = {
            "feasible": False,
            "followers": list(eq.followers),
            "residuals": list(eq.residuals),
        }
        raise _StageFailure("equilibrium", EXIT_INFEASIBLE, eq.describe())
    summary["stages"]["equilibrium"] = {"feasible": True, "u_star": eq.u_star}
    return eq


def run_pipeline(
    sc: Scenario,
    out: str | Path | None = None,
    *,
    stop_after: str = "simulation",
    snapshots: bool = True,
) -> PipelineResult:
    """Run the stages of ``sc`` up to ``stop_after`` and write artifacts to ``out``.

    ``stop_after`` is one of ``"check"`` (assumptions and feasibility),
    ``"observer"`` (full design with certificates) or ``"simulation"``.
    Artifacts are ``summary.json`` and, after a simulation, ``trajectory.csv``
    and snapshot images. ``out=None`` writes nothing.
    """
    if stop_after not in ("check", "observer", "simulation"):
        raise ValueError(f"unknown stop_after {stop_after!r}")
    out_dir = Path(out) if out is not None else (Path(sc.output) if sc.output else None)
    summary: dict[str, Any] = {
        "scenario": sc.name,
        "mode": sc.mode,
        "stages": {},
        "failed_stage": None,
        "message": "ok",
    }
    result = PipelineResult(exit_code=EXIT_OK, summary=summary)
    caught: list[warnings.WarningMessage] = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            _run_stages(sc, summary, result, stop_after)
    except _StageFailure as exc:
        result.exit_code = exc.code
        summary["failed_stage"] = exc.stage
        summary["message"] = str(exc)
    except ConfigError as exc:
        result.exit_code = EXIT_CONFIG
        summary["failed_stage"] = "config"
        summary["message"] = str(exc)
    except AssumptionError as exc:
        result.exit_code = EXIT_ASSUMPTION
        summary["failed_stage"] = summary.get("_stage", "check")
        summary["message"] = str(exc)
    except (SolverError, np.linalg.LinAlgError) as exc:
        result.exit_code = EXIT_SOLVER
        summary["failed_stage"] = summary.get("_stage", "check")
        summary["message"] = str(exc)
    except SimulationError as exc:
        result.exit_code = EXIT_NONCONVERGENCE
        summary["failed_stage"] = "simulation"
        summary["message"] = str(exc)
    except Exception as exc:  # noqa: BLE001 - every exit path must leave a summary
        result.exit_code = EXIT_UNEXPECTED
        summary["failed_stage"] = summary.get("_stage", "check")
        summary["message"] = f"{type(exc).__name__}: {exc}"
    summary.pop("_stage", None)
    summary["warnings"] = sorted({str(w.message) for w in caught})
    summary["exit_code"] = result.exit_code
    summary["status"] = "ok" if result.exit_code == EXIT_OK else "failed"

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        result.artifacts["summary"] = write_summary(summary, out_dir / "summary.json")
        if result.record is not None and result.design is not None:
            n, m = result.design.n, result.design.m
            result.artifacts["trajectory"] = write_trajectory_csv(
                result.record, n, m, out_dir / "trajectory.csv"
            )
            if snapshots:
                result.artifacts.update(_write_snapshots(sc, result, out_dir))
    return result


def _run_stages(sc: Scenario, summary: dict, result: PipelineResult, stop_after: str) -> None:
    tol = sc.tolerances
    summary["_stage"] = "check"
    p, Q = _stage_check(sc, summary)
    summary["_stage"] = "equilibrium"
    eq = _stage_equilibrium(sc, p, summary)
    if not summary["stages"]["check"]["passed"]:
        failed = [k for k in ("plant_controllable", "plant_observable", "augmented_controllable")
                  if not summary["stages"]["check"][k]]
        raise _StageFailure("check", EXIT_ASSUMPTION, "assumptions fail: " + ", ".join(failed))
    if stop_after == "check":
        return

    summary["_stage"] = "care"
    sys: AugmentedSystem = build_augmented(p, Q)
    cd = synthesize_centralized(sys, eq)
    result.design = cd
    summary["stages"]["care"] = {
        "residual_norm": cd.care.residual_norm,
        "kernel_check": cd.care.kernel_check,
        "newton_iterations": cd.care.newton_iterations,
        "min_eigenvalue": float(np.linalg.eigvalsh(cd.P)[0]),
    }
    if cd.care.residual_norm > tol.care * max(1.0, float(np.linalg.norm(cd.P))):
        raise _StageFailure("care", EXIT_SOLVER, "Riccati residual above tolerance")

    summary["_stage"] = "certificate"
    cert = certify_spectrum(cd, margin=tol.hurwitz_margin)
    summary["stages"]["certificate"] = cert.as_dict()
    if not cert.passed:
        raise _StageFailure("certificate", EXIT_SOLVER, "closed-loop spectral certificate failed")

    n, m = p.n, p.m
    init = draw_initial_data(sc, n, m)
    result.initial = init
    summary["seeds"] = init.seeds
    summary["initial"] = {"x0": init.xbar0[:n], "z0": init.xbar0[n:]}
    spec = sc.pattern()

    if sc.mode == "distributed":
        summary["_stage"] = "observer"
        lg = sc.build_leader_graph()
        W = None if sc.observer.W is None else np.asarray(sc.observer.W, dtype=float)
        od = design_observer(sys, cd, build_measurements(p), lg, W=W,
                             safety_factor=sc.observer.safety_factor, chi=sc.observer.chi)
        result.observer = od
        es = build_error_system(od, cd)
        result.error_system = es
        info: dict[str, Any] = {
            "chi": od.chi,
            "chi_bound": od.chi_bound,
            "lambda2": od.lambda2,
            "leader_edges": [list(e) for e in lg.sorted_edges()],
            "error_matrix_max_real": float(np.max(np.linalg.eigvals(es.What).real)),
        }
        if m > 1:
            G = gain_condition_matrix(sys, cd.P, od.F, od.measurements, od.T, od.lambda2, od.chi, od.W)
            info["gain_condition_min_eig"] = float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])
        summary["stages"]["observer"] = info
        basin = in_basin_u2(es, cd, init.xbar0, init.e0, spec)
        predicted = predict_limit_distributed(es, cd, init.xbar0, init.e0)
        summary["e0_norm"] = float(np.linalg.norm(init.e0))
    else:
        basin = in_basin_u1(cd, init.xbar0, spec)
        predicted = predict_limit(cd, init.xbar0)
    summary["basin"] = {
        "set": "U2" if sc.mode == "distributed" else "U1",
        "member": basin.member,
        "margin": basin.margin,
        "projection": basin.projection,
        "threshold": basin.threshold,
    }
    summary["predicted_limit"] = predicted
    if stop_after == "observer":
        return

    summary["_stage"] = "simulation"
    sim = sc.simulation
    opts = SimOptions(t_end=sim.t_end, dt=sim.dt, record_every=sim.record_every, tol=sim.tol)
    if sc.mode == "distributed":
        rec = simulate_distributed(result.error_system, cd, init.xbar0, init.e0, opts)
    else:
        rec = simulate_centralized(cd, init.xbar0, opts)
    result.record = rec
    limit = rec.limit_estimate
    x_final = limit[:n]
    sim_info: dict[str, Any] = {
        "t_end": rec.meta["t_end"],
        "dt": sim.dt,
        "samples": len(rec.times),
        "converged": rec.converged,
        "converged_time": rec.converged_time,
        "limit_rel_error": _rel_error(limit, predicted) if np.linalg.norm(predicted) > 0
        else float(np.linalg.norm(limit)),
    }
    if rec.error_norms is not None:
        e_norm0 = float(np.linalg.norm(init.e0))
        sim_info["final_error_norms"] = rec.error_norms[-1]
        sim_info["max_final_error_ratio"] = (
            float(rec.error_norms[-1].max() / e_norm0) if e_norm0 > 0 else 0.0
        )
    summary["stages"]["simulation"] = sim_info
    summary["simulated_limit"] = limit
    summary["pattern_formed"] = is_in_pattern(x_final, sc.build_graph(), spec, tol.pattern)
    summary["final_signs"] = sign_string(x_final)
    if not rec.converged:
        raise _StageFailure("simulation", EXIT_NONCONVERGENCE,
                            f"state still moving at t={rec.meta['t_end']:g}")


def _write_snapshots(sc: Scenario, result: PipelineResult, out_dir: Path) -> dict[str, Path]:
    from .render import render_snapshot

    g = sc.build_graph()
    n = g.n
    rec = result.record
    files: dict[str, Path] = {}
    for label, state in (("initial", rec.states[0, :n]), ("final", rec.limit_estimate[:n])):
        for key, path in render_snapshot(state, g, out_dir / f"snapshot_{label}").items():
            files[f"{label}_{key}"] = path
    return files
