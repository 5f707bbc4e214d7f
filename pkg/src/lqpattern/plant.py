"""Leader-controlled Laplacian plant and its integrator-augmented LQ form.

The plant is ``x' = (-L + a I) x + B u`` with ``B`` selecting the leader
vertices. Adding integrators ``u = z, z' = v`` yields the augmented system
``xbar' = Abar xbar + Bbar v`` on ``xbar = [x; z]`` with state weight
``Qbar = blockdiag(Q, 0)``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .graphs import Graph, is_connected
from .patterns import PatternSpec

__all__ = [
    "PlantModel",
    "AugmentedSystem",
    "Equilibrium",
    "Infeasible",
    "AssumptionReport",
    "build_augmented",
    "solve_equilibrium",
    "check_assumptions",
    "is_controllable",
    "is_observable",
    "kalman_controllable",
    "numerical_rank",
]

RANK_RTOL = 1e-8


@dataclass(frozen=True)
class PlantModel:
    """Graph, self-feedback constant ``a`` and ordered leader list.

    The leader order fixes the columns of ``B``, the integrator indices and
    the per-leader measurement numbering.
    """

    graph: Graph
    a: float
    leaders: tuple[int, ...]

    def __post_init__(self) -> None:
        leaders = tuple(int(v) for v in self.leaders)
        if len(set(leaders)) != len(leaders):
            raise ValueError(f"leaders must be distinct, got {leaders}")
        for v in leaders:
            if not 1 <= v <= self.graph.n:
                raise ValueError(f"leader {v} outside 1..{self.graph.n}")
        object.__setattr__(self, "leaders", leaders)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return len(self.leaders)

    @property
    def followers(self) -> tuple[int, ...]:
        lead = set(self.leaders)
        return tuple(v for v in range(1, self.n + 1) if v not in lead)

    @property
    def B(self) -> NDArray[np.float64]:
        B = np.zeros((self.n, self.m))
        for j, v in enumerate(self.leaders):
            B[v - 1, j] = 1.0
        return B

    @property
    def drift(self) -> NDArray[np.float64]:
        """Open-loop matrix ``-L + a I``."""
        return -self.graph.laplacian + self.a * np.eye(self.n)


@dataclass(frozen=True)
class AugmentedSystem:
    Abar: NDArray[np.float64]
    Bbar: NDArray[np.float64]
    Qbar: NDArray[np.float64]
    n: int
    m: int

    @property
    def size(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class Equilibrium:
    """Pattern equilibrium ``(x*, u*)`` with ``(-L + aI) x* + B u* = 0``."""

    x_star: NDArray[np.float64]
    u_star: NDArray[np.float64]

    @property
    def psi1(self) -> NDArray[np.float64]:
        """Stacked vector ``[x*; u*]``, the kernel direction of ``Abar`` and ``Qbar``."""
        return np.concatenate([self.x_star, self.u_star])


@dataclass(frozen=True)
class Infeasible:
    """No constant leader input holds ``alpha`` at rest.

    ``residuals[k]`` is ``((L - aI) alpha)`` at ``followers[k]``; every entry
    must vanish for the pattern to be an equilibrium.
    """

    followers: tuple[int, ...]
    residuals: tuple[float, ...]

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        parts = ", ".join(f"x{v}: {r:+.6g}" for v, r in zip(self.followers, self.residuals))
        return (
            "pattern is not an equilibrium; follower residuals of (L - aI) alpha "
            f"must be zero but are {parts}"
        )


@dataclass(frozen=True)
class AssumptionReport:
    connected: bool
    controllable: bool
    observable: bool
    augmented_controllable: bool
    details: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.connected and self.controllable and self.observable and self.augmented_controllable

    def failures(self) -> list[str]:
        names = {
            "connected": "graph connected",
            "controllable": "(-L+aI, B) controllable",
            "observable": "(-L+aI, Q) observable",
            "augmented_controllable": "(Abar, Bbar) controllable",
        }
        return [label for key, label in names.items() if not getattr(self, key)]

    def as_dict(self) -> dict[str, bool]:
        return {
            "graph_connected": self.connected,
            "plant_controllable": self.controllable,
            "plant_observable": self.observable,
            "augmented_controllable": self.augmented_controllable,
            "passed": self.passed,
        }


def build_augmented(p: PlantModel, Q: ArrayLike) -> AugmentedSystem:
    Q = np.asarray(Q, dtype=float)
    n, m = p.n, p.m
    if Q.shape != (n, n):
        raise ValueError(f"pattern matrix must be {n}x{n}, got {Q.shape}")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("pattern matrix must be symmetric")
    Abar = np.block([[p.drift, p.B], [np.zeros((m, n + m))]])
    Bbar = np.vstack([np.zeros((n, m)), np.eye(m)])
    Qbar = sla.block_diag(Q, np.zeros((m, m)))
    return AugmentedSystem(Abar=Abar, Bbar=Bbar, Qbar=Qbar, n=n, m=m)


def solve_equilibrium(p: PlantModel, spec: PatternSpec, tol: float = 1e-10) -> Equilibrium | Infeasible:
    """Hold ``x* = alpha`` with a constant leader input, if possible.

    ``B u* = (L - aI) alpha`` is solvable exactly when the follower rows of
    ``(L - aI) alpha`` vanish; ``u*`` is then the leader rows.
    """
    if spec.n != p.n:
        raise ValueError(f"alpha has length {spec.n} but the plant has {p.n} agents")
    alpha = np.array(spec.alpha, dtype=float)
    required = -p.drift @ alpha
    scale = 1.0 + np.linalg.norm(alpha)
    bad = [v for v in p.followers if abs(required[v - 1]) > tol * scale]
    if bad:
        return Infeasible(
            followers=tuple(bad),
            residuals=tuple(float(required[v - 1]) for v in bad),
        )
    u_star = np.array([required[v - 1] for v in p.leaders])
    return Equilibrium(x_star=alpha, u_star=u_star)


def numerical_rank(M: ArrayLike, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=complex)), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def _distinct_eigenvalues(A: NDArray, tol: float) -> list[complex]:
    reps: list[complex] = []
    for lam in np.linalg.eigvals(A):
        if all(abs(lam - r) > tol for r in reps):
            reps.append(complex(lam))
    return reps


def is_controllable(A: ArrayLike, B: ArrayLike, rtol: float = RANK_RTOL) -> bool:
    """PBH test: ``rank [A - lam I, B] = n`` at every eigenvalue of ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    if B.shape[1] == 0:
        return False
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(B, 2), 1.0)
    for lam in _distinct_eigenvalues(A, 1e-9 * scale):
        pencil = np.hstack([A - lam * np.eye(n), B])
        s = np.linalg.svd(pencil, compute_uv=False)
        if s[-1] <= rtol * scale:
            return False
    return True


def is_observable(A: ArrayLike, C: ArrayLike, rtol: float = RANK_RTOL) -> bool:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    return is_controllable(A.T, C.T, rtol)


def kalman_controllable(A: ArrayLike, B: ArrayLike, rtol: float = RANK_RTOL) -> bool:
    """Rank of ``[B, AB, ..., A^{n-1} B]``; used to cross-check the PBH verdict."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    if B.shape[1] == 0:
        return False
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return numerical_rank(np.hstack(blocks), rtol) == n


def check_assumptions(p: PlantModel, Q: ArrayLike) -> AssumptionReport:
    """Connectivity, plant rank conditions and augmented controllability."""
    Q = np.asarray(Q, dtype=float)
    connected = is_connected(p.graph)
    if p.m == 0:
        return AssumptionReport(
            connected=connected,
            controllable=False,
            observable=is_observable(p.drift, Q),
            augmented_controllable=False,
            details={"controllable": "no leaders: B is empty"},
        )
    controllable = is_controllable(p.drift, p.B)
    observable = is_observable(p.drift, Q)
    aug = build_augmented(p, Q)
    return AssumptionReport(
        connected=connected,
        controllable=controllable,
        observable=observable,
        augmented_controllable=is_controllable(aug.Abar, aug.Bbar),
    )
