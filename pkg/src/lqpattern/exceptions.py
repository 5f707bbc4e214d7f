"""Exception hierarchy shared by the synthesis pipeline."""

from __future__ import annotations

import numpy as np


class PatternControlError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PatternControlError, ValueError):
    """Scenario file is unreadable or fails validation."""


class AssumptionError(PatternControlError):
    """A structural assumption (connectivity, rank condition) is violated."""


class SolverError(PatternControlError, np.linalg.LinAlgError):
    """A matrix-equation kernel failed to produce an acceptable solution."""


class IllConditionedEigenbasis(SolverError):
    """Eigenvector matrix is numerically singular (defective or nearly so)."""


class SimulationError(PatternControlError):
    """Trajectory integration overflowed or received non-finite data."""
