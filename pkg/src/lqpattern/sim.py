"""Trajectory generation for the closed loops.

All simulated systems are linear and time invariant, so the state is
propagated exactly with ``w(t + dt) = E w(t)``, ``E = expm(M dt)``, formed
once. A SciPy ``solve_ivp`` reference integrator is kept only for
cross-checking.

Large observer coupling gains make the joint system very stiff
(``||M|| ~ 1e9``). Scaling-and-squaring on such a matrix loses about
``eps * ||M dt||`` relative accuracy in the slow modes, which is visible in
the limit. :func:`propagator` therefore splits the spectrum at its widest
magnitude gap (ordered real Schur form plus a Sylvester solve), and
exponentiates the slow and fast blocks separately.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from .centralized import CentralizedDesign
from .exceptions import SimulationError
from .observer import ErrorSystem

__all__ = [
    "SimOptions",
    "TrajectoryRecord",
    "propagator",
    "simulate_lti",
    "simulate_reference",
    "simulate_centralized",
    "simulate_distributed",
    "slowest_decay_rate",
    "recommended_horizon",
    "write_trajectory_csv",
]

OVERFLOW_LIMIT = 1e12
SPLIT_GAP = 1e3
SPLIT_COND_LIMIT = 1e8


@dataclass(frozen=True)
class SimOptions:
    t_end: float = 20.0
    dt: float = 1e-3
    record_every: int = 10
    tol: float = 1e-8


@dataclass
class TrajectoryRecord:
    times: NDArray[np.float64]
    states: NDArray[np.float64]
    """One row per recorded sample."""
    limit_estimate: NDArray[np.float64]
    converged: bool
    converged_time: float | None
    """Earliest recorded time after which every successive difference stayed below tolerance."""
    error_norms: NDArray[np.float64] | None = None
    """Per-sample ``||e_j||`` for each leader, distributed runs only."""
    meta: dict = field(default_factory=dict)


def _convergence(times: NDArray, states: NDArray, tol: float) -> tuple[bool, float | None]:
    if len(times) < 2:
        return False, None
    diffs = np.linalg.norm(np.diff(states, axis=0), axis=1)
    scale = tol * (1.0 + np.linalg.norm(states[1:], axis=1))
    small = diffs <= scale
    if not small[-1]:
        return False, None
    # last index where the test failed; convergence holds from the next sample on
    failing = np.flatnonzero(~small)
    first = 0 if failing.size == 0 else failing[-1] + 1
    return True, float(times[first + 1])


def _spectral_split(M: NDArray, dt: float) -> NDArray | None:
    magnitudes = np.sort(np.abs(np.linalg.eigvals(M)))
    nonzero = magnitudes > 1e-12 * max(magnitudes[-1], 1.0)
    if nonzero.sum() < 2:
        return None
    mags = magnitudes[nonzero]
    ratios = mags[1:] / mags[:-1]
    k = int(np.argmax(ratios))
    if ratios[k] < SPLIT_GAP:
        return None
    threshold = np.sqrt(mags[k] * mags[k + 1])
    U, Z, sdim = sla.schur(M, output="real", sort=lambda re, im: abs(complex(re, im)) < threshold)
    if sdim in (0, M.shape[0]):
        return None
    U11, U12, U22 = U[:sdim, :sdim], U[:sdim, sdim:], U[sdim:, sdim:]
    # U11 Y - Y U22 = -U12 block-diagonalises the Schur form
    Y = sla.solve_sylvester(U11, -U22, -U12)
    S = np.eye(M.shape[0])
    S[:sdim, sdim:] = Y
    if np.linalg.cond(S) > SPLIT_COND_LIMIT:
        return None
    S_inv = np.eye(M.shape[0])
    S_inv[:sdim, sdim:] = -Y
    blocks = sla.block_diag(sla.expm(U11 * dt), sla.expm(U22 * dt))
    return Z @ S @ blocks @ S_inv @ Z.T


def propagator(M: ArrayLike, dt: float, split: bool = True) -> NDArray[np.float64]:
    """``expm(M dt)``, via a slow/fast spectral split when ``M`` is stiff.

    The split is used only when the eigenvalue magnitudes have a gap wider
    than ``SPLIT_GAP`` and the block-diagonalising transform is well
    conditioned; otherwise this is plain :func:`scipy.linalg.expm`.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if split:
        E = _spectral_split(M, dt)
        if E is not None:
            return E
    return sla.expm(M * dt)


def simulate_lti(
    M: ArrayLike,
    w0: ArrayLike,
    t_end: float,
    dt: float,
    record_every: int = 10,
    tol: float = 1e-8,
    split: bool = True,
) -> TrajectoryRecord:
    """Propagate ``w' = M w`` from ``w0`` over ``[0, t_end]``.

    Every ``record_every``-th step is stored together with the final state.
    ``converged`` compares the last two stored samples against
    ``tol * (1 + ||w||)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    w = np.asarray(w0, dtype=float).ravel().copy()
    if not (dt > 0 and t_end >= dt):
        raise ValueError(f"need dt > 0 and t_end >= dt, got dt={dt}, t_end={t_end}")
    if M.shape != (w.size, w.size):
        raise ValueError(f"matrix {M.shape} does not match state of size {w.size}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(w))):
        raise SimulationError("non-finite system matrix or initial state")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")

    steps = int(round(t_end / dt))
    E = propagator(M, dt, split)
    times = [0.0]
    states = [w.copy()]
    bound = OVERFLOW_LIMIT * max(1.0, float(np.linalg.norm(w)))
    for k in range(1, steps + 1):
        w = E @ w
        if k % record_every == 0 or k == steps:
            norm = np.linalg.norm(w)
            if not np.isfinite(norm) or norm > bound:
                raise SimulationError(f"state grew beyond {bound:.1e} at t={k * dt:.4g}")
            times.append(k * dt)
            states.append(w.copy())
    times_arr = np.array(times)
    states_arr = np.array(states)
    converged, t_conv = _convergence(times_arr, states_arr, tol)
    return TrajectoryRecord(
        times=times_arr,
        states=states_arr,
        limit_estimate=w.copy(),
        converged=converged,
        converged_time=t_conv,
        meta={"dt": dt, "t_end": steps * dt, "record_every": record_every, "tol": tol},
    )


def simulate_reference(
    M: ArrayLike,
    w0: ArrayLike,
    t_eval: ArrayLike,
    method: str = "RK45",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> NDArray[np.float64]:
    """Adaptive ``solve_ivp`` solution at ``t_eval`` (rows), for cross-checks.

    Use ``method="Radau"`` for stiff observer systems.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    t_eval = np.asarray(t_eval, dtype=float)
    kwargs = {"jac": M} if method in ("Radau", "BDF", "LSODA") else {}
    sol = solve_ivp(
        lambda _t, w: M @ w,
        (float(t_eval[0]), float(t_eval[-1])),
        np.asarray(w0, dtype=float).ravel(),
        method=method,
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        **kwargs,
    )
    if not sol.success:
        raise SimulationError(f"reference integrator failed: {sol.message}")
    return sol.y.T


def slowest_decay_rate(M: ArrayLike, zero_rtol: float = 1e-12) -> float:
    """Largest real part among eigenvalues of ``M`` that are not numerically zero.

    The zero threshold is ``max(1e-10, zero_rtol * ||M||)``: loose enough for
    the rounding of a zero eigenvalue of a stiff matrix, tight enough to keep
    its slow stable modes.
    """
    eigenvalues = np.linalg.eigvals(np.atleast_2d(M))
    tol = max(1e-10, zero_rtol * np.linalg.norm(M, 2))
    others = eigenvalues[np.abs(eigenvalues) > tol]
    return float(np.max(others.real)) if others.size else -np.inf


def recommended_horizon(M: ArrayLike, decay: float = 1e-3) -> float:
    """Time for the slowest stable mode to shrink by ``decay``."""
    rate = slowest_decay_rate(M)
    if rate >= 0:
        return np.inf
    return float(np.log(1.0 / decay) / -rate)


def _warn_short_horizon(M: NDArray, t_end: float) -> None:
    rate = slowest_decay_rate(M)
    if rate < 0 and t_end < 3.0 / -rate:
        warnings.warn(
            f"t_end={t_end:g} is shorter than three time constants of the slowest "
            f"mode ({3.0 / -rate:.3g}); the final state may be far from the limit",
            stacklevel=3,
        )


def simulate_centralized(
    cd: CentralizedDesign,
    xbar0: ArrayLike,
    opts: SimOptions = SimOptions(),
) -> TrajectoryRecord:
    _warn_short_horizon(cd.Atilde, opts.t_end)
    return simulate_lti(cd.Atilde, xbar0, opts.t_end, opts.dt, opts.record_every, opts.tol)


def simulate_distributed(
    es: ErrorSystem,
    cd: CentralizedDesign,
    xbar0: ArrayLike,
    e0: ArrayLike,
    opts: SimOptions = SimOptions(),
) -> TrajectoryRecord:
    """Integrate the joint plant-plus-error system ``[xbar; e]' = Mhat [xbar; e]``.

    ``states`` holds the full joint vector; ``limit_estimate`` is the plant
    part ``xbar`` of the final state.
    """
    xbar0 = np.asarray(xbar0, dtype=float).ravel()
    e0 = np.asarray(e0, dtype=float).ravel()
    _warn_short_horizon(es.Mhat, opts.t_end)
    rec = simulate_lti(es.Mhat, np.concatenate([xbar0, e0]), opts.t_end, opts.dt, opts.record_every, opts.tol)
    N = es.size
    errors = rec.states[:, N:].reshape(len(rec.times), es.m, N)
    rec.error_norms = np.linalg.norm(errors, axis=2)
    rec.limit_estimate = rec.limit_estimate[:N].copy()
    # convergence judged on the plant state only
    rec.converged, rec.converged_time = _convergence(rec.times, rec.states[:, :N], opts.tol)
    return rec


def write_trajectory_csv(rec: TrajectoryRecord, n: int, m: int, path: str | Path) -> Path:
    """Write ``t, x_1..x_n, z_1..z_m[, e_norm_1..e_norm_m]`` rows."""
    path = Path(path)
    header = ["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"z_{j}" for j in range(1, m + 1)]
    if rec.error_norms is not None:
        header += [f"e_norm_{j}" for j in range(1, rec.error_norms.shape[1] + 1)]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, t in enumerate(rec.times):
            row = [t, *rec.states[k, : n + m]]
            if rec.error_norms is not None:
                row += list(rec.error_norms[k])
            writer.writerow([repr(float(v)) for v in row])
    return path
