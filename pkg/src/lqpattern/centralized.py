"""Centralized pattern controller: synthesis, certificates, limit prediction.

The controller is ``v = -Bbar^T P xbar`` with ``P`` the minimal PSD Riccati
solution. The closed loop ``Atilde = Abar - Bbar Bbar^T P`` has a simple
zero eigenvalue with right vector ``psi1 = [x*; u*]``. Every trajectory
converges to ``(psi1_hat^T xbar0) psi1``, where ``psi1_hat`` is the left
zero eigenvector normalised so that ``psi1_hat^T psi1 = 1``.

Only the simple zero eigenpair and the decay of the rest of the spectrum
are used, so the prediction does not assume ``Atilde`` is diagonalisable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .exceptions import SolverError
from .numerics import HURWITZ_MARGIN, CareSolution, solve_care_minimal
from .patterns import PatternSpec
from .plant import AugmentedSystem, Equilibrium

__all__ = [
    "CentralizedDesign",
    "SpectralCertificate",
    "BasinResult",
    "synthesize_centralized",
    "certify_spectrum",
    "left_null_vector",
    "in_basin_u1",
    "predict_limit",
]

ZERO_EIG_RTOL = 1e-8
KERNEL_TOL = 1e-8


@dataclass(frozen=True)
class CentralizedDesign:
    system: AugmentedSystem
    equilibrium: Equilibrium
    care: CareSolution
    gain: NDArray[np.float64]
    """``Bbar^T P``; the feedback is ``v = -gain @ xbar``."""
    Atilde: NDArray[np.float64]
    psi1: NDArray[np.float64]
    psi1_hat: NDArray[np.float64]

    @property
    def P(self) -> NDArray[np.float64]:
        return self.care.P

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m(self) -> int:
        return self.system.m


@dataclass(frozen=True)
class SpectralCertificate:
    zero_count: int
    max_other_real_part: float
    p_kernel_norm: float
    margin: float = HURWITZ_MARGIN
    kernel_tol: float = KERNEL_TOL

    @property
    def passed(self) -> bool:
        return (
            self.zero_count == 1
            and self.max_other_real_part < -self.margin
            and self.p_kernel_norm <= self.kernel_tol
        )

    def as_dict(self) -> dict:
        return {
            "zero_count": self.zero_count,
            "max_other_real_part": self.max_other_real_part,
            "p_kernel_norm": self.p_kernel_norm,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class BasinResult:
    member: bool
    margin: float
    """``|projection| - threshold``; positive inside the basin."""
    projection: float
    threshold: float

    def __bool__(self) -> bool:
        return self.member


def left_null_vector(M: ArrayLike) -> NDArray[np.float64]:
    """Unit vector ``w`` minimising ``||w^T M||`` (last left singular vector)."""
    U, _, _ = np.linalg.svd(np.asarray(M, dtype=float))
    return U[:, -1]


def synthesize_centralized(sys: AugmentedSystem, eq: Equilibrium) -> CentralizedDesign:
    psi1 = eq.psi1
    care = solve_care_minimal(sys, psi1)
    P = care.P
    gain = sys.Bbar.T @ P
    Atilde = sys.Abar - sys.Bbar @ gain
    w = left_null_vector(Atilde)
    overlap = float(w @ psi1) / np.linalg.norm(psi1)
    if abs(overlap) < 1e-10:
        raise SolverError(
            "left and right zero eigenvectors are orthogonal; the zero eigenvalue "
            "of the closed loop is defective"
        )
    psi1_hat = w / float(w @ psi1)
    return CentralizedDesign(
        system=sys,
        equilibrium=eq,
        care=care,
        gain=gain,
        Atilde=Atilde,
        psi1=psi1,
        psi1_hat=psi1_hat,
    )


def certify_spectrum(
    d: CentralizedDesign,
    margin: float = HURWITZ_MARGIN,
    zero_rtol: float = ZERO_EIG_RTOL,
    kernel_tol: float = KERNEL_TOL,
    matrix: ArrayLike | None = None,
) -> SpectralCertificate:
    """Check for one zero eigenvalue, a stable remainder and ``P psi1 = 0``.

    ``matrix`` overrides the closed loop under test (e.g. to certify the
    open-loop ``Abar`` and watch the certificate fail).
    """
    M = d.Atilde if matrix is None else np.asarray(matrix, dtype=float)
    eigenvalues = sla.eigvals(M)
    zero_tol = zero_rtol * max(np.linalg.norm(M, 2), 1.0)
    is_zero = np.abs(eigenvalues) <= zero_tol
    others = eigenvalues[~is_zero]
    max_other = float(np.max(others.real)) if others.size else -np.inf
    return SpectralCertificate(
        zero_count=int(np.sum(is_zero)),
        max_other_real_part=max_other,
        p_kernel_norm=float(np.linalg.norm(d.P @ d.psi1)),
        margin=margin,
        kernel_tol=kernel_tol,
    )


def _basin(projection: float, spec: PatternSpec, x_star: NDArray) -> BasinResult:
    threshold = float(spec.p0 * np.sqrt(spec.n) / np.linalg.norm(x_star))
    return BasinResult(
        member=abs(projection) > threshold,
        margin=abs(projection) - threshold,
        projection=projection,
        threshold=threshold,
    )


def in_basin_u1(d: CentralizedDesign, xbar0: ArrayLike, spec: PatternSpec) -> BasinResult:
    """Is ``|psi1_hat^T xbar0|`` above ``p0 sqrt(n) / ||x*||``?"""
    xbar0 = np.asarray(xbar0, dtype=float).ravel()
    return _basin(float(d.psi1_hat @ xbar0), spec, d.equilibrium.x_star)


def predict_limit(d: CentralizedDesign, xbar0: ArrayLike) -> NDArray[np.float64]:
    xbar0 = np.asarray(xbar0, dtype=float).ravel()
    return float(d.psi1_hat @ xbar0) * d.psi1
