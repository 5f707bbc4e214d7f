"""Two-level sign patterns on a graph.

A pattern is the scale-free set ``{p * alpha : |p| >= p0}`` for a sign
vector ``alpha``. On a connected graph it coincides with the far-enough
kernel of the pattern matrix ``Q = D + A1 - A2``, where ``A1`` holds the
edges whose endpoint signs differ and ``A2`` the edges whose signs agree.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .graphs import Graph

__all__ = [
    "PatternSpec",
    "EdgePartition",
    "as_sign_vector",
    "pattern_from_kron",
    "partition_edges",
    "build_pattern_matrix",
    "is_in_pattern",
]


def as_sign_vector(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("sign vector must be non-empty")
    if not np.all(np.abs(arr) == 1.0):
        bad = arr[np.abs(arr) != 1.0]
        raise ValueError(f"sign vector entries must be +1 or -1, found {bad[:5].tolist()}")
    return arr


@dataclass(frozen=True)
class PatternSpec:
    """Sign vector ``alpha`` plus the magnitude threshold ``p0``."""

    alpha: NDArray[np.float64]
    p0: float = 1.0

    def __post_init__(self) -> None:
        alpha = as_sign_vector(self.alpha)
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        if not self.p0 > 0:
            raise ValueError(f"p0 must be positive, got {self.p0}")

    @property
    def n(self) -> int:
        return self.alpha.size


@dataclass(frozen=True)
class EdgePartition:
    e1: frozenset[tuple[int, int]]
    """Edges whose endpoints carry opposite signs."""
    e2: frozenset[tuple[int, int]]
    """Edges whose endpoints carry equal signs."""


def pattern_from_kron(beta_a: ArrayLike, beta_b: ArrayLike) -> NDArray[np.float64]:
    """Kronecker product of two sign vectors.

    With column-major grid labels, ``kron(beta_a, beta_b)`` assigns
    ``beta_a[c] * beta_b[r]`` to cell ``(r, c)``: ``beta_a`` varies across
    columns and ``beta_b`` down each column.
    """
    return np.kron(as_sign_vector(beta_a), as_sign_vector(beta_b))


def _check_length(g: Graph, spec: PatternSpec) -> None:
    if spec.n != g.n:
        raise ValueError(f"alpha has length {spec.n} but the graph has {g.n} vertices")


def partition_edges(g: Graph, spec: PatternSpec) -> EdgePartition:
    _check_length(g, spec)
    alpha = spec.alpha
    e1 = frozenset(e for e in g.edges if alpha[e[0] - 1] == -alpha[e[1] - 1])
    return EdgePartition(e1=e1, e2=g.edges - e1)


def build_pattern_matrix(g: Graph, spec: PatternSpec) -> NDArray[np.float64]:
    """Pattern matrix ``Q = D + A1 - A2``.

    ``Q`` is the sum of ``(e_i + e_j)(e_i + e_j)^T`` over opposite-sign
    edges and ``(e_i - e_j)(e_i - e_j)^T`` over equal-sign edges, hence
    positive semi-definite with ``Q @ alpha == 0``.
    """
    _check_length(g, spec)
    signs = np.outer(spec.alpha, spec.alpha)
    # off-diagonal: +1 on opposite-sign edges, -1 on equal-sign edges
    return g.degree - g.adjacency * signs


def is_in_pattern(
    x: ArrayLike,
    g: Graph,
    spec: PatternSpec,
    tol: float = 1e-6,
) -> bool:
    """Test ``x`` against ``{x : Qx = 0, ||x|| >= p0 sqrt(n)}``.

    The kernel test is relative, ``||Qx|| <= tol * ||x||``, so it does not
    depend on the scale of ``x``. The graph is assumed connected; on a
    disconnected graph the kernel is larger than ``span(alpha)``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    x = np.asarray(x, dtype=float).ravel()
    if x.size != g.n:
        raise ValueError(f"state has length {x.size} but the graph has {g.n} vertices")
    Q = build_pattern_matrix(g, spec)
    norm = float(np.linalg.norm(x))
    if norm < spec.p0 * np.sqrt(g.n):
        return False
    return bool(np.linalg.norm(Q @ x) <= tol * norm)


def sign_string(x: Sequence[float]) -> str:
    return " ".join("+" if v > 0 else "-" if v < 0 else "0" for v in x)
