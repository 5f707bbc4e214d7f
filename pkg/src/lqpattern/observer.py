"""Distributed observers for the pattern controller.

Each leader ``j`` measures ``o_j = C_j xbar`` (its own agent state and its
integrator state), runs a full-state observer

    xhat_j' = N_j xhat_j + F_j o_j + chi T^{-1} sum_k (xhat_k - xhat_j)

over the leader graph and applies ``v_j = -Bbar_j^T P xhat_j``. With
``e_j = xhat_j - xbar`` the joint dynamics are block upper-triangular,

    [xbar; e]' = [[Atilde, -Khat], [0, What]] [xbar; e],

so the observer error decouples from the plant. The error matrix is

    What = blockdiag_j(Abar - F_j C_j) + K - chi (L1 kron T^{-1})

with ``K[j, k] = Bbar_k Bbar_k^T P - delta_jk Bbar Bbar^T P``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .centralized import BasinResult, CentralizedDesign, _basin
from .exceptions import AssumptionError, SolverError
from .graphs import Graph, algebraic_connectivity, is_connected
from .numerics import is_hurwitz, solve_filter_are, solve_lyapunov
from .patterns import PatternSpec
from .plant import AugmentedSystem, PlantModel

__all__ = [
    "MeasurementMap",
    "ObserverDesign",
    "ErrorSystem",
    "build_measurements",
    "coupling_matrix",
    "chi_lower_bound",
    "gain_condition_matrix",
    "design_observer",
    "build_error_system",
    "in_basin_u2",
    "predict_limit_distributed",
]

DEFAULT_SAFETY_FACTOR = 1.05


@dataclass(frozen=True)
class MeasurementMap:
    blocks: tuple[NDArray[np.float64], ...]
    """Per-leader ``2 x (n+m)`` selectors ``C_j``."""

    @property
    def C(self) -> NDArray[np.float64]:
        return np.vstack(self.blocks)

    @property
    def m(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class ObserverDesign:
    F: NDArray[np.float64]
    N: tuple[NDArray[np.float64], ...]
    T: NDArray[np.float64]
    chi: float
    chi_bound: float
    leader_graph: Graph
    lambda2: float
    W: NDArray[np.float64]
    P_filter: NDArray[np.float64]
    measurements: MeasurementMap

    @property
    def m(self) -> int:
        return self.measurements.m

    def F_block(self, j: int) -> NDArray[np.float64]:
        """Columns of ``F`` belonging to leader ``j`` (0-based)."""
        return self.F[:, 2 * j : 2 * j + 2]


@dataclass(frozen=True)
class ErrorSystem:
    What: NDArray[np.float64]
    Khat: NDArray[np.float64]
    Mhat: NDArray[np.float64]
    m: int
    size: int
    """State dimension ``n + m`` of one observer."""


def build_measurements(p: PlantModel) -> MeasurementMap:
    n, m = p.n, p.m
    blocks = []
    for j, v in enumerate(p.leaders):
        Cj = np.zeros((2, n + m))
        Cj[0, v - 1] = 1.0
        Cj[1, n + j] = 1.0
        blocks.append(Cj)
    return MeasurementMap(tuple(blocks))


def _selector_products(sys: AugmentedSystem, P: NDArray) -> list[NDArray]:
    """``Bbar_j Bbar_j^T P`` for every leader: row ``n + j`` of ``P``, in place."""
    out = []
    for j in range(sys.m):
        M = np.zeros_like(P)
        M[sys.n + j] = P[sys.n + j]
        out.append(M)
    return out


def coupling_matrix(sys: AugmentedSystem, P: NDArray) -> tuple[NDArray, NDArray]:
    """Return ``(K, Khat)`` for the error dynamics and the plant coupling."""
    parts = _selector_products(sys, P)
    Khat = np.hstack(parts)
    BBP = sys.Bbar @ sys.Bbar.T @ P
    K = np.kron(np.eye(sys.m), -BBP) + np.kron(np.ones((sys.m, 1)), Khat)
    return K, Khat


def _lambda_blocks(sys: AugmentedSystem, F: NDArray, mm: MeasurementMap, T: NDArray) -> list[NDArray]:
    out = []
    for j, Cj in enumerate(mm.blocks):
        Aj = sys.Abar - F[:, 2 * j : 2 * j + 2] @ Cj
        out.append(Aj.T @ T + T @ Aj)
    return out


def _gain_terms(
    sys: AugmentedSystem, P: NDArray, F: NDArray, mm: MeasurementMap, T: NDArray, W: NDArray
) -> tuple[NDArray, NDArray]:
    """``Phi`` and ``G^T W^{-1} G`` with ``G = [Lambda_1..Lambda_m] + (1^T kron T) K``."""
    m = sys.m
    lambdas = _lambda_blocks(sys, F, mm, T)
    K, _ = coupling_matrix(sys, P)
    T_bar = np.kron(np.eye(m), T)
    T_row = np.kron(np.ones((1, m)), T)
    Phi = sla.block_diag(*lambdas) + T_bar @ K + K.T @ T_bar
    G = np.hstack(lambdas) + T_row @ K
    gram = G.T @ np.linalg.solve(W, G)
    return 0.5 * (Phi + Phi.T), 0.5 * (gram + gram.T)


def chi_lower_bound(
    sys: AugmentedSystem,
    P: NDArray,
    F: NDArray,
    mm: MeasurementMap,
    T: NDArray,
    lambda2: float,
    W: NDArray | None = None,
) -> float:
    """``lambda_max(Phi + G^T W^{-1} G) / (2 lambda2)``; ``chi`` must exceed it."""
    W = np.eye(sys.size) if W is None else W
    Phi, gram = _gain_terms(sys, P, F, mm, T, W)
    return float(np.linalg.eigvalsh(Phi + gram)[-1] / (2.0 * lambda2))


def gain_condition_matrix(
    sys: AugmentedSystem,
    P: NDArray,
    F: NDArray,
    mm: MeasurementMap,
    T: NDArray,
    lambda2: float,
    chi: float,
    W: NDArray | None = None,
) -> NDArray[np.float64]:
    """``2 chi lambda2 I - Phi - G^T W^{-1} G``; positive definite iff ``chi`` is admissible."""
    W = np.eye(sys.size) if W is None else W
    Phi, gram = _gain_terms(sys, P, F, mm, T, W)
    return 2.0 * chi * lambda2 * np.eye(Phi.shape[0]) - Phi - gram


def design_observer(
    sys: AugmentedSystem,
    cd: CentralizedDesign,
    mm: MeasurementMap,
    leader_graph: Graph,
    W: ArrayLike | None = None,
    safety_factor: float = DEFAULT_SAFETY_FACTOR,
    chi: float | None = None,
) -> ObserverDesign:
    """Filter gain, Lyapunov weight, observer matrices and coupling gain.

    ``chi`` defaults to ``safety_factor`` times the lower bound. An explicit
    ``chi`` is accepted as given, even below the bound, so that the bound's
    role can be studied.
    """
    m = sys.m
    if leader_graph.n != m:
        raise ValueError(f"leader graph has {leader_graph.n} nodes for {m} leaders")
    if not is_connected(leader_graph):
        raise AssumptionError("leader graph is not connected")
    if safety_factor <= 1.0:
        raise ValueError("safety_factor must exceed 1 to stay strictly above the bound")
    W = np.eye(sys.size) if W is None else np.asarray(W, dtype=float)
    if np.min(np.linalg.eigvalsh(0.5 * (W + W.T))) <= 0:
        raise ValueError("W must be positive definite")

    C = mm.C
    P_filter = solve_filter_are(sys, C, m)
    F = P_filter @ C.T
    T = solve_lyapunov(m * sys.Abar - F @ C, -np.eye(sys.size))
    N = tuple(cd.Atilde - F[:, 2 * j : 2 * j + 2] @ Cj for j, Cj in enumerate(mm.blocks))

    if m == 1:
        warnings.warn(
            "single leader: no consensus coupling, observer reduces to a "
            "centralized Luenberger observer and chi is unused",
            stacklevel=2,
        )
        return ObserverDesign(
            F=F, N=N, T=T, chi=0.0, chi_bound=0.0, leader_graph=leader_graph,
            lambda2=float("nan"), W=W, P_filter=P_filter, measurements=mm,
        )

    lambda2 = algebraic_connectivity(leader_graph)
    bound = chi_lower_bound(sys, cd.P, F, mm, T, lambda2, W)
    if chi is None:
        chi = safety_factor * bound if bound > 0 else 1.0
    return ObserverDesign(
        F=F, N=N, T=T, chi=float(chi), chi_bound=bound, leader_graph=leader_graph,
        lambda2=lambda2, W=W, P_filter=P_filter, measurements=mm,
    )


def build_error_system(od: ObserverDesign, cd: CentralizedDesign, check: bool = True) -> ErrorSystem:
    sys = cd.system
    K, Khat = coupling_matrix(sys, cd.P)
    local = sla.block_diag(
        *(sys.Abar - od.F_block(j) @ Cj for j, Cj in enumerate(od.measurements.blocks))
    )
    What = local + K
    if od.m > 1:
        L1 = od.leader_graph.laplacian
        What = What - od.chi * np.kron(L1, np.linalg.inv(od.T))
    if check and not is_hurwitz(What, 1e-9):
        worst = float(np.max(np.real(np.linalg.eigvals(What))))
        raise SolverError(f"observer error matrix is not Hurwitz (max real part {worst:.3e})")
    Mhat = np.block([
        [cd.Atilde, -Khat],
        [np.zeros((What.shape[0], sys.size)), What],
    ])
    return ErrorSystem(What=What, Khat=Khat, Mhat=Mhat, m=od.m, size=sys.size)


def _error_projection(es: ErrorSystem, cd: CentralizedDesign, xbar0: NDArray, e0: NDArray) -> float:
    # solve What^T y = Khat^T psi1_hat so the stiff What is never inverted explicitly
    y = np.linalg.solve(es.What.T, es.Khat.T @ cd.psi1_hat)
    return float(cd.psi1_hat @ xbar0 + y @ e0)


def _flatten_error(es: ErrorSystem, e0: ArrayLike) -> NDArray:
    e0 = np.asarray(e0, dtype=float).ravel()
    if e0.size != es.m * es.size:
        raise ValueError(f"e0 must have {es.m * es.size} entries, got {e0.size}")
    return e0


def in_basin_u2(
    es: ErrorSystem,
    cd: CentralizedDesign,
    xbar0: ArrayLike,
    e0: ArrayLike,
    spec: PatternSpec,
) -> BasinResult:
    """Basin test including the observer error's contribution to the zero mode."""
    xbar0 = np.asarray(xbar0, dtype=float).ravel()
    projection = _error_projection(es, cd, xbar0, _flatten_error(es, e0))
    return _basin(projection, spec, cd.equilibrium.x_star)


def predict_limit_distributed(
    es: ErrorSystem,
    cd: CentralizedDesign,
    xbar0: ArrayLike,
    e0: ArrayLike,
) -> NDArray[np.float64]:
    """``(psi1_hat^T (xbar0 + Khat What^{-1} e0)) psi1``."""
    xbar0 = np.asarray(xbar0, dtype=float).ravel()
    return _error_projection(es, cd, xbar0, _flatten_error(es, e0)) * cd.psi1
