"""Scenario files.

A scenario is a YAML mapping. Minimal centralized example::

    name: stripes
    graph: {type: grid, rows: 3, cols: 3}
    alpha: [1, 1, 1, -1, -1, -1, 1, 1, 1]   # or {kron: [beta_a, beta_b]}
    a: 4
    leaders: [3, 2, 1, 4, 7, 8, 9]           # order defines B, z and C_j
    x0: {random: {lo: -5, hi: 5}}
    z0: [-1.9, -3.3, 1.2, 4.9, -3.3, -2.4, -1.0]

Vertices are 1-based. ``leader_graph`` is over leader positions ``1..m``
and defaults to the path in leader order; ``{type: induced}`` uses the
subgraph of ``graph`` spanned by the leaders. Validation errors carry the
dotted path of the offending key.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .exceptions import ConfigError
from .graphs import Graph, grid_graph, induced_subgraph, path_graph
from .patterns import PatternSpec, as_sign_vector, pattern_from_kron

__all__ = [
    "Scenario",
    "RandomDraw",
    "load_scenario",
    "parse_scenario",
    "bundled_scenario",
    "BUNDLED_SCENARIOS",
]

BUNDLED_SCENARIOS = ("paper_sec5_centralized", "paper_sec5_distributed")
_SCENARIO_DIR = Path(__file__).with_name("scenarios")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridGraphSpec(_Strict):
    type: Literal["grid"]
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)


class EdgeGraphSpec(_Strict):
    type: Literal["edges"]
    n: int = Field(ge=1)
    edges: list[tuple[int, int]]


class InducedGraphSpec(_Strict):
    type: Literal["induced"]


class PathGraphSpec(_Strict):
    type: Literal["path"]


GraphSpec = Annotated[Union[GridGraphSpec, EdgeGraphSpec], Field(discriminator="type")]
LeaderGraphSpec = Annotated[
    Union[PathGraphSpec, InducedGraphSpec, EdgeGraphSpec], Field(discriminator="type")
]


class RandomBox(_Strict):
    lo: float = -5.0
    hi: float = 5.0
    seed: int | None = None

    @model_validator(mode="after")
    def _ordered(self) -> RandomBox:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")
        return self


class RandomDraw(_Strict):
    random: RandomBox


class KronAlpha(_Strict):
    kron: tuple[list[float], list[float]]


class ObserverSpec(_Strict):
    init: Literal["exact"] | RandomDraw | list[list[float]] = Field(
        default_factory=lambda: RandomDraw(random=RandomBox())
    )
    """Initial observer estimates: random box, ``exact`` (zero error) or one vector per leader."""
    safety_factor: float = Field(default=1.05, gt=1.0)
    chi: float | None = Field(default=None, gt=0.0)
    W: list[list[float]] | None = None


class SimulationSpec(_Strict):
    t_end: float = Field(default=20.0, gt=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    record_every: int = Field(default=10, ge=1)
    tol: float = Field(default=1e-8, gt=0.0)


class Tolerances(_Strict):
    pattern: float = Field(default=1e-6, gt=0.0)
    care: float = Field(default=1e-8, gt=0.0)
    hurwitz_margin: float = Field(default=1e-6, gt=0.0)
    limit_rtol: float = Field(default=1e-5, gt=0.0)


class Scenario(_Strict):
    name: str = "scenario"
    graph: GraphSpec
    alpha: list[float] | KronAlpha
    p0: float = Field(default=1.0, gt=0.0)
    a: float
    leaders: list[int] = Field(min_length=1)
    leader_graph: LeaderGraphSpec = Field(default_factory=lambda: PathGraphSpec(type="path"))
    mode: Literal["centralized", "distributed"] = "centralized"
    seed: int = 0
    x0: list[float] | RandomDraw = Field(default_factory=lambda: RandomDraw(random=RandomBox()))
    z0: list[float] | RandomDraw = Field(default_factory=lambda: RandomDraw(random=RandomBox()))
    observer: ObserverSpec = Field(default_factory=ObserverSpec)
    simulation: SimulationSpec = Field(default_factory=SimulationSpec)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output: str | None = None

    @model_validator(mode="after")
    def _consistent(self) -> Scenario:
        g = self.build_graph()
        n, m = g.n, len(self.leaders)
        try:
            alpha = self.alpha_vector()
        except ValueError as exc:
            raise ValueError(f"alpha: {exc}") from None
        if alpha.size != n:
            raise ValueError(f"alpha: length {alpha.size} does not match {n} vertices")
        if len(set(self.leaders)) != m:
            raise ValueError(f"leaders: duplicated entries in {self.leaders}")
        bad = [v for v in self.leaders if not 1 <= v <= n]
        if bad:
            raise ValueError(f"leaders: vertices {bad} outside 1..{n}")
        if isinstance(self.x0, list) and len(self.x0) != n:
            raise ValueError(f"x0: length {len(self.x0)} does not match {n} vertices")
        if isinstance(self.z0, list) and len(self.z0) != m:
            raise ValueError(f"z0: length {len(self.z0)} does not match {m} leaders")
        if isinstance(self.leader_graph, EdgeGraphSpec) and self.leader_graph.n != m:
            raise ValueError(f"leader_graph.n: {self.leader_graph.n} nodes for {m} leaders")
        init = self.observer.init
        if isinstance(init, list):
            if len(init) != m or any(len(v) != n + m for v in init):
                raise ValueError(f"observer.init: need {m} vectors of length {n + m}")
        if self.observer.W is not None:
            W = np.asarray(self.observer.W, dtype=float)
            if W.shape != (n + m, n + m):
                raise ValueError(f"observer.W: shape {W.shape}, need {(n + m, n + m)}")
        return self

    def build_graph(self) -> Graph:
        spec = self.graph
        if isinstance(spec, GridGraphSpec):
            return grid_graph(spec.rows, spec.cols)
        return Graph.from_edges(spec.n, spec.edges)

    def alpha_vector(self) -> np.ndarray:
        if isinstance(self.alpha, KronAlpha):
            return pattern_from_kron(*self.alpha.kron)
        return as_sign_vector(self.alpha)

    def pattern(self) -> PatternSpec:
        return PatternSpec(self.alpha_vector(), self.p0)

    def build_leader_graph(self) -> Graph:
        spec = self.leader_graph
        m = len(self.leaders)
        if isinstance(spec, PathGraphSpec):
            return path_graph(m)
        if isinstance(spec, InducedGraphSpec):
            return induced_subgraph(self.build_graph(), self.leaders)
        return Graph.from_edges(spec.n, spec.edges)

    def with_overrides(self, *, seed: int | None = None, mode: str | None = None,
                       output: str | None = None) -> Scenario:
        """Copy with CLI overrides; a new ``seed`` also replaces per-draw seeds."""
        data = self.model_dump()
        if seed is not None:
            data["seed"] = seed
            for key in ("x0", "z0"):
                if isinstance(data[key], dict):
                    data[key]["random"]["seed"] = None
            init = data["observer"]["init"]
            if isinstance(init, dict):
                init["random"]["seed"] = None
        if mode is not None:
            data["mode"] = mode
        if output is not None:
            data["output"] = output
        return parse_scenario(data)


def _format_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        msg = err["msg"].removeprefix("Value error, ")
        loc = ".".join(str(p) for p in err["loc"])
        # model-level checks already name their key
        lines.append(f"{loc}: {msg}" if loc else msg)
    return "; ".join(lines)


def parse_scenario(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("<root>: scenario must be a mapping")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: invalid YAML{where}") from None
    return parse_scenario(data)


def bundled_scenario(name: str) -> Scenario:
    if name not in BUNDLED_SCENARIOS:
        raise ConfigError(f"unknown bundled scenario {name!r}; choose from {BUNDLED_SCENARIOS}")
    return load_scenario(_SCENARIO_DIR / f"{name}.yaml")
