"""Undirected interaction graphs and their Laplacian algebra.

Vertices are labelled ``1..n`` at every public boundary. Matrices are
indexed from zero, so vertex ``i`` lives in row ``i - 1``.

Grid graphs use **column-major** labelling: vertices are numbered top to
bottom inside a column, then columns left to right. On a 3x3 grid this
puts vertex 5 in the centre and makes ``3-2-1-4-7-8-9`` the boundary path
used by the bundled leader set.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "Graph",
    "grid_graph",
    "path_graph",
    "complete_graph",
    "induced_subgraph",
    "is_connected",
    "component_count",
    "algebraic_connectivity",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``1..n``.

    Edges are stored once each as ``(i, j)`` with ``i < j``. The optional
    ``shape`` records ``(rows, cols)`` for grid graphs so that states can be
    drawn as images.
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    shape: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={self.n}")
        normalized = set()
        for edge in self.edges:
            i, j = (int(v) for v in edge)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            for v in (i, j):
                if not 1 <= v <= self.n:
                    raise ValueError(f"vertex {v} outside 1..{self.n}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> Graph:
        """Build a graph from 1-based pairs; duplicates and reversed pairs collapse."""
        return cls(n, frozenset(tuple(e) for e in edges))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @cached_property
    def adjacency(self) -> NDArray[np.float64]:
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i - 1, j - 1] = A[j - 1, i - 1] = 1.0
        A.setflags(write=False)
        return A

    @cached_property
    def degree(self) -> NDArray[np.float64]:
        D = np.diag(self.adjacency.sum(axis=1))
        D.setflags(write=False)
        return D

    @cached_property
    def laplacian(self) -> NDArray[np.float64]:
        L = self.degree - self.adjacency
        L.setflags(write=False)
        return L

    def neighbors(self, v: int) -> list[int]:
        return [int(k) + 1 for k in np.flatnonzero(self.adjacency[v - 1])]


def grid_graph(rows: int, cols: int) -> Graph:
    """Return the ``rows x cols`` grid graph with column-major labels.

    Cell ``(r, c)`` (0-based, ``r`` counted from the top) is vertex
    ``c * rows + r + 1``.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")

    def vid(r: int, c: int) -> int:
        return c * rows + r + 1

    edges = set()
    for c in range(cols):
        for r in range(rows):
            if r + 1 < rows:
                edges.add((vid(r, c), vid(r + 1, c)))
            if c + 1 < cols:
                edges.add((vid(r, c), vid(r, c + 1)))
    return Graph(rows * cols, frozenset(edges), shape=(rows, cols))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def induced_subgraph(g: Graph, vertices: Sequence[int]) -> Graph:
    """Subgraph on ``vertices``, relabelled ``1..m`` in the given order."""
    vertices = [int(v) for v in vertices]
    if len(set(vertices)) != len(vertices):
        raise ValueError(f"duplicated vertices in {vertices}")
    for v in vertices:
        if not 1 <= v <= g.n:
            raise ValueError(f"vertex {v} outside 1..{g.n}")
    position = {v: k + 1 for k, v in enumerate(vertices)}
    edges = [
        (position[i], position[j])
        for i, j in g.edges
        if i in position and j in position
    ]
    return Graph.from_edges(len(vertices), edges)


def component_count(g: Graph) -> int:
    """Number of connected components, by depth-first traversal."""
    adjacency: dict[int, list[int]] = {v: [] for v in range(1, g.n + 1)}
    for i, j in g.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    seen: set[int] = set()
    count = 0
    for start in range(1, g.n + 1):
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return count


def is_connected(g: Graph) -> bool:
    return component_count(g) == 1


def algebraic_connectivity(g: Graph) -> float:
    """Second-smallest Laplacian eigenvalue (Fiedler value)."""
    if g.n < 2:
        raise ValueError("algebraic connectivity needs at least two vertices")
    eigenvalues = np.linalg.eigvalsh(g.laplacian)
    return float(eigenvalues[1])
