"""Matrix-equation kernels.

* :func:`solve_care_minimal` -- smallest PSD solution of
  ``A^T P + P A - P B B^T P + Q = 0`` when ``(A, Q)`` is not detectable.
* :func:`solve_filter_are` -- the dual (filter) Riccati equation
  ``m A P + m P A^T - P C^T C P + I = 0``.
* :func:`solve_lyapunov` -- ``M^T T + T M = RHS``.
* :func:`eig_full` -- eigenvalues with binormalised left/right vectors.

The minimal solution is computed by deflation. Every PSD solution vanishes
on the unobservable subspace ``N`` of ``(A, Q)``, and ``N`` is
``A``-invariant. In an orthonormal basis ``[K, V]`` with ``range(K) = N``
the equation decouples: ``P = V P_r V^T`` where ``P_r`` is the stabilising
solution of the quotient problem ``(V^T A V, V^T B, V^T Q V)``. The quotient
is observable, so its PSD solution is unique. Removing the imaginary-axis
modes analytically avoids ordered-Schur selection right on the axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .exceptions import IllConditionedEigenbasis, SolverError
from .plant import is_observable

__all__ = [
    "CareSolution",
    "EigenDecomposition",
    "solve_care_minimal",
    "minimal_care",
    "care_residual",
    "unobservable_subspace",
    "solve_filter_are",
    "solve_lyapunov",
    "eig_full",
    "is_hurwitz",
]

CARE_RTOL = 1e-8
LYAP_RTOL = 1e-10
HURWITZ_MARGIN = 1e-6
NEWTON_MAX_ITER = 50
EIG_COND_LIMIT = 1e10


@dataclass(frozen=True)
class CareSolution:
    P: NDArray[np.float64]
    residual_norm: float
    kernel_check: float
    """``||P @ psi1||`` (zero when no kernel direction was supplied)."""
    newton_iterations: int = 0


@dataclass(frozen=True)
class EigenDecomposition:
    values: NDArray[np.complex128]
    right: NDArray[np.complex128]
    """Columns are right eigenvectors, unit 2-norm."""
    left: NDArray[np.complex128]
    """Columns ``l_i`` with ``l_i^T M = lam_i l_i^T`` and ``l_i^T r_i = 1``."""
    condition: float


def care_residual(A: NDArray, B: NDArray, Q: NDArray, P: NDArray) -> NDArray:
    return A.T @ P + P @ A - P @ B @ B.T @ P + Q


def _symmetrize(M: NDArray) -> NDArray:
    return 0.5 * (M + M.T)


def unobservable_subspace(A: ArrayLike, Q: ArrayLike, rtol: float = 1e-9) -> NDArray[np.float64]:
    """Orthonormal basis of the largest ``A``-invariant subspace inside ``ker Q``.

    Computed as the kernel of ``[Q; QA; ...; QA^{n-1}]`` with each block
    row-normalised; intended for the small systems used in checks.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    blocks = []
    block = Q
    for _ in range(n):
        norm = np.linalg.norm(block)
        blocks.append(block / norm if norm > 0 else block)
        block = block @ A
    O = np.vstack(blocks)
    if not np.any(O):
        return np.eye(n)
    return sla.null_space(O, rcond=rtol)


def _kleinman_refine(
    A: NDArray, B: NDArray, Q: NDArray, P: NDArray, tol: float
) -> tuple[NDArray, int]:
    """Damped Newton (Kleinman) iterations on a stabilising CARE solution."""
    scale = 1.0 + np.linalg.norm(P)
    res = np.linalg.norm(care_residual(A, B, Q, P))
    it = 0
    while res > 0.01 * tol * scale and it < NEWTON_MAX_ITER:
        it += 1
        closed = A - B @ B.T @ P
        rhs = -(Q + P @ B @ B.T @ P)
        try:
            target = _symmetrize(sla.solve_continuous_lyapunov(closed.T, rhs))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"Newton step failed: {exc}") from exc
        step = target - P
        for k in range(12):
            trial = P + step / 2**k
            trial_res = np.linalg.norm(care_residual(A, B, Q, trial))
            if trial_res < res:
                break
        else:
            # no decrease along the Newton direction; residual is at noise level
            break
        P, res = _symmetrize(trial), trial_res
        scale = 1.0 + np.linalg.norm(P)
    return P, it


def minimal_care(
    A: ArrayLike,
    B: ArrayLike,
    Q: ArrayLike,
    kernel: ArrayLike | None = None,
    tol: float = CARE_RTOL,
) -> tuple[NDArray[np.float64], int]:
    """Smallest PSD solution of the CARE, deflating ``range(kernel)``.

    ``kernel`` must span an ``A``-invariant subspace of ``ker Q``. When
    omitted, the whole unobservable subspace of ``(A, Q)`` is used.
    Returns ``(P, newton_iterations)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = _symmetrize(np.atleast_2d(np.asarray(Q, dtype=float)))
    n = A.shape[0]
    if kernel is None:
        K = unobservable_subspace(A, Q)
    else:
        kernel = np.asarray(kernel, dtype=float).reshape(n, -1)
        K = sla.orth(kernel) if kernel.size else np.zeros((n, 0))
    if K.shape[1] == n:
        return np.zeros((n, n)), 0
    V = sla.null_space(K.T) if K.shape[1] else np.eye(n)

    Ar = V.T @ A @ V
    Br = V.T @ B
    Qr = _symmetrize(V.T @ Q @ V)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            Pr = sla.solve_continuous_are(Ar, Br, Qr, np.eye(B.shape[1]))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(
            "reduced Riccati equation has no stabilising solution; check "
            f"controllability and observability upstream ({exc})"
        ) from exc
    Pr, iterations = _kleinman_refine(Ar, Br, Qr, _symmetrize(Pr), tol)
    if np.max(np.real(np.linalg.eigvals(Ar - Br @ Br.T @ Pr))) >= 0:
        raise SolverError("reduced closed loop is not Hurwitz")
    return _symmetrize(V @ Pr @ V.T), iterations


def solve_care_minimal(sys, psi1: ArrayLike | None = None, tol: float = CARE_RTOL) -> CareSolution:
    """Minimal PSD Riccati solution for an augmented system.

    ``sys`` is anything with ``Abar``, ``Bbar`` and ``Qbar`` attributes.
    ``psi1`` is the known non-detectable direction (``Abar psi1 = 0``,
    ``Qbar psi1 = 0``); it is verified before being deflated. Without it
    the unobservable subspace is computed numerically.
    """
    A, B, Q = sys.Abar, sys.Bbar, sys.Qbar
    kernel = None
    if psi1 is not None:
        psi1 = np.asarray(psi1, dtype=float).ravel()
        if np.linalg.norm(psi1) == 0:
            raise SolverError("kernel direction psi1 is zero")
        scale = np.linalg.norm(psi1) * (1.0 + np.linalg.norm(A) + np.linalg.norm(Q))
        if np.linalg.norm(A @ psi1) > 1e-10 * scale or np.linalg.norm(Q @ psi1) > 1e-10 * scale:
            raise SolverError("psi1 must satisfy Abar psi1 = 0 and Qbar psi1 = 0")
        kernel = psi1[:, None]
    P, iterations = minimal_care(A, B, Q, kernel, tol)
    residual = float(np.linalg.norm(care_residual(A, B, Q, P)))
    if residual > tol * (1.0 + np.linalg.norm(P)):
        raise SolverError(f"Riccati residual {residual:.3e} above tolerance")
    if np.min(np.linalg.eigvalsh(P)) < -1e-9 * (1.0 + np.linalg.norm(P)):
        raise SolverError("Riccati solution is not positive semi-definite")
    kernel_check = float(np.linalg.norm(P @ psi1)) if psi1 is not None else 0.0
    return CareSolution(P=P, residual_norm=residual, kernel_check=kernel_check, newton_iterations=iterations)


def is_hurwitz(M: ArrayLike, margin: float = 0.0) -> bool:
    return bool(np.max(np.real(np.linalg.eigvals(np.atleast_2d(M)))) < -margin)


def solve_filter_are(sys, C: ArrayLike, m: int, tol: float = CARE_RTOL) -> NDArray[np.float64]:
    """Positive definite ``P`` with ``m A P + m P A^T - P C^T C P + I = 0``.

    This is the control Riccati equation of the dual pair
    ``(m A^T, C^T)`` with unit weights. ``m A - P C^T C`` is Hurwitz.
    """
    A = sys.Abar if hasattr(sys, "Abar") else np.asarray(sys, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    N = A.shape[0]
    if not is_observable(A, C):
        raise SolverError("(Abar, C) is not observable; no filter gain exists")
    At = m * A.T
    try:
        P = sla.solve_continuous_are(At, C.T, np.eye(N), np.eye(C.shape[0]))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"filter Riccati equation failed: {exc}") from exc
    P, _ = _kleinman_refine(At, C.T, np.eye(N), _symmetrize(P), tol)
    residual = np.linalg.norm(care_residual(At, C.T, np.eye(N), P))
    if residual > tol * (1.0 + np.linalg.norm(P)):
        raise SolverError(f"filter Riccati residual {residual:.3e} above tolerance")
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        raise SolverError("filter Riccati solution is not positive definite")
    if not is_hurwitz(m * A - P @ C.T @ C, HURWITZ_MARGIN):
        raise SolverError("filter closed loop is not Hurwitz")
    return P


def solve_lyapunov(M: ArrayLike, rhs: ArrayLike, tol: float = LYAP_RTOL) -> NDArray[np.float64]:
    """Solve ``M^T T + T M = rhs`` for Hurwitz ``M`` (Bartels-Stewart via SciPy)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    if M.shape[0] != M.shape[1] or rhs.shape != M.shape:
        raise ValueError(f"incompatible shapes {M.shape} and {rhs.shape}")
    if not is_hurwitz(M):
        raise SolverError("Lyapunov operator may be singular: M is not Hurwitz")
    T = _symmetrize(sla.solve_continuous_lyapunov(M.T, _symmetrize(rhs)))
    residual = np.linalg.norm(M.T @ T + T @ M - rhs)
    if residual > tol * (1.0 + np.linalg.norm(T)) * max(1.0, np.linalg.norm(M)):
        raise SolverError(f"Lyapunov residual {residual:.3e} above tolerance")
    return T


def eig_full(M: ArrayLike, cond_limit: float = EIG_COND_LIMIT) -> EigenDecomposition:
    """Eigenvalues plus binormalised right and left eigenvectors.

    Raises :class:`IllConditionedEigenbasis` when the right eigenvector
    matrix has condition number above ``cond_limit``, which is what a
    defective (Jordan) eigenvalue looks like numerically.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    values, vl, vr = sla.eig(M, left=True, right=True)
    condition = float(np.linalg.cond(vr))
    if not np.isfinite(condition) or condition > cond_limit:
        raise IllConditionedEigenbasis(f"eigenvector matrix condition {condition:.3e}")
    # scipy's vl satisfies vl^H M = lam vl^H; the transpose convention needs conj
    left = np.conj(vl)
    scale = np.einsum("ij,ij->j", left, vr)
    left = left / scale
    return EigenDecomposition(values=values, right=vr, left=left, condition=condition)
