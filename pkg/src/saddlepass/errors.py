"""Exception types shared by the solvers."""

from __future__ import annotations

import numpy as np


class UnsupportedDimensionError(ValueError):
    """An operation defined only for a specific dimension got another one."""


class PreconditionError(ValueError):
    """A documented precondition of an operation was violated by the caller."""


class BoundaryHitError(RuntimeError):
    """A constrained minimizer escaped to the boundary of the search region.

    The offending boundary point is attached so callers can clamp or report.
    """

    def __init__(self, point, message: str = "minimizer reached the region boundary"):
        super().__init__(message)
        self.point = np.asarray(point, dtype=float)


class ResolutionLimitError(RuntimeError):
    """The grid component test cannot distinguish the sets at the current spacing.

    Carries the last state that was still valid, when one is available.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class DegenerateSpectrumError(ValueError):
    """The spectrum has a repeated eigenvalue, so the Wilkinson distance is zero."""

    def __init__(self, eigenvalue: complex, message: str | None = None):
        super().__init__(message or f"repeated eigenvalue near {eigenvalue}")
        self.eigenvalue = eigenvalue
