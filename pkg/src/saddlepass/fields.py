"""Scalar fields, search regions, and the catalog of analytic test problems.

A :class:`ScalarField` is a plain evaluatable map from R^n to R.  Fields are
pure value objects: the only mutable state is the pair of evaluation counters,
which never influences computed values and is excluded from equality.  Counter
updates are plain integer increments; under concurrent use they may undercount,
which is acceptable because nothing downstream depends on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


class ScalarField:
    """An evaluatable map R^n -> R with an optional gradient.

    Parameters
    ----------
    dimension : int
        Number of coordinates ``n``.
    evaluate : callable
        Maps a point (array of shape ``(n,)``) to a float.  Must be
        deterministic: repeated calls at the same point return bit-identical
        values.
    gradient : callable, optional
        Maps a point to the gradient vector of shape ``(n,)``.  Omit it for
        nonsmooth fields; downstream solvers fall back to derivative-free or
        finite-difference schemes.
    batch_evaluate : callable, optional
        Vectorized evaluation over an ``(m, n)`` array of points, returning an
        ``(m,)`` array.  Used by grid samplers; falls back to a Python loop.
    name : str
        Identifier used in reports.
    differentiable : bool
        Set ``False`` for fields that are not differentiable everywhere, even
        if finite differences happen to work away from the kinks.  Diagnostics
        use this to mark gradient-based reports as not applicable.
    """

    def __init__(
        self,
        dimension: int,
        evaluate: Callable[[np.ndarray], float],
        gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        batch_evaluate: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        name: str = "",
        differentiable: bool = True,
    ):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = int(dimension)
        self._evaluate = evaluate
        self._gradient = gradient
        self._batch_evaluate = batch_evaluate
        self.name = name
        self.differentiable = bool(differentiable)
        self.eval_count = 0
        self.grad_count = 0

    @property
    def has_gradient(self) -> bool:
        return self._gradient is not None

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(self.dimension)
        self.eval_count += 1
        return float(self._evaluate(x))

    __call__ = value

    def value_many(self, pts) -> np.ndarray:
        """Evaluate at an ``(m, n)`` array of points."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dimension)
        self.eval_count += pts.shape[0]
        if self._batch_evaluate is not None:
            return np.asarray(self._batch_evaluate(pts), dtype=float).reshape(pts.shape[0])
        return np.array([float(self._evaluate(p)) for p in pts])

    def grad(self, x) -> np.ndarray:
        if self._gradient is None:
            raise ValueError(f"field {self.name!r} has no gradient")
        x = np.asarray(x, dtype=float).reshape(self.dimension)
        self.grad_count += 1
        return np.asarray(self._gradient(x), dtype=float).reshape(self.dimension)

    def __eq__(self, other):
        # Counters are deliberately excluded from equality.
        if not isinstance(other, ScalarField):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self._evaluate is other._evaluate
            and self._gradient is other._gradient
        )

    __hash__ = None

    def __repr__(self):
        return f"ScalarField(name={self.name!r}, dimension={self.dimension})"


class Ball:
    """Open ball region ``{x : |x - center| < radius}``."""

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        self.radius = float(radius)
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {radius}")

    @property
    def dimension(self) -> int:
        return self.center.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(np.linalg.norm(x - self.center)) <= self.radius

    def contains_interior(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(np.linalg.norm(x - self.center)) < self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius

    def boundary_distance(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return self.radius - float(np.linalg.norm(x - self.center))

    def line_interval(self, origin, direction):
        """Parameter interval of ``origin + t * direction`` inside the ball."""
        o = np.asarray(origin, dtype=float) - self.center
        d = np.asarray(direction, dtype=float)
        a = float(d @ d)
        b = 2.0 * float(o @ d)
        c = float(o @ o) - self.radius**2
        disc = b * b - 4.0 * a * c
        if disc <= 0 or a == 0:
            return None
        s = np.sqrt(disc)
        return ((-b - s) / (2 * a), (-b + s) / (2 * a))

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Box:
    """Axis-aligned box region ``{x : lower <= x <= upper}`` (componentwise)."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must have the same shape")
        if not np.all(self.lower < self.upper):
            raise ValueError("lower must be strictly below upper componentwise")

    @property
    def dimension(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def contains_interior(self, x) -> bool:
        x = np.asarray(x, dtype=float).reshape(-1)
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def boundary_distance(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        return float(min(np.min(x - self.lower), np.min(self.upper - x)))

    def line_interval(self, origin, direction):
        """Parameter interval of ``origin + t * direction`` inside the box."""
        o = np.asarray(origin, dtype=float)
        d = np.asarray(direction, dtype=float)
        tlo, thi = -np.inf, np.inf
        for k in range(o.size):
            if d[k] == 0.0:
                if o[k] < self.lower[k] or o[k] > self.upper[k]:
                    return None
                continue
            t1 = (self.lower[k] - o[k]) / d[k]
            t2 = (self.upper[k] - o[k]) / d[k]
            if t1 > t2:
                t1, t2 = t2, t1
            tlo = max(tlo, t1)
            thi = min(thi, t2)
        if not np.isfinite(tlo) or not np.isfinite(thi) or tlo > thi:
            return None
        return (tlo, thi)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


# Either a Ball or a Box; both expose the same membership/geometry methods.
Region = Ball | Box


@dataclass
class TestProblem:
    """A named field together with a search region and path endpoints."""

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    field: ScalarField
    region: Region
    endpoints: tuple[np.ndarray, np.ndarray]
    known_saddle: Optional[tuple[np.ndarray, float]] = None

    def __post_init__(self):
        a, b = self.endpoints
        a = np.asarray(a, dtype=float).reshape(-1)
        b = np.asarray(b, dtype=float).reshape(-1)
        self.endpoints = (a, b)
        if not (self.region.contains(a) and self.region.contains(b)):
            raise ValueError(f"{self.name}: endpoints must lie in the region")
        if self.known_saddle is not None:
            pt, val = self.known_saddle
            self.known_saddle = (np.asarray(pt, dtype=float).reshape(-1), float(val))


def make_quadratic_field(diag: Sequence[float]) -> ScalarField:
    """Diagonal quadratic ``x -> sum_j a_j x_j**2`` with exact gradient.

    Saddle tests expect exactly one negative entry; this is documented rather
    than enforced, so the constructor can also build wells and ridges.
    """
    a = np.asarray(diag, dtype=float).reshape(-1)
    if a.size == 0:
        raise ValueError("diagonal vector must be nonempty")

    def ev(x):
        return float(a @ (x * x))

    def gr(x):
        return 2.0 * a * x

    def ev_many(pts):
        return (pts * pts) @ a

    return ScalarField(a.size, ev, gr, batch_evaluate=ev_many, name=f"quadratic{a.tolist()}")


def _quadratic_saddle() -> TestProblem:
    f = make_quadratic_field([1.0, -1.0])
    f.name = "quadratic-saddle"
    return TestProblem(
        name="quadratic-saddle",
        field=f,
        region=Ball((0.0, 0.0), 4.0),
        endpoints=(np.array([0.0, -1.0]), np.array([0.0, 1.0])),
        known_saddle=(np.array([0.0, 0.0]), 0.0),
    )


def _ps_fail_a() -> TestProblem:
    def ev(x):
        return float(np.exp(-x[0]) - x[1] ** 2)

    def gr(x):
        return np.array([-np.exp(-x[0]), -2.0 * x[1]])

    def ev_many(p):
        return np.exp(-p[:, 0]) - p[:, 1] ** 2

    f = ScalarField(2, ev, gr, batch_evaluate=ev_many, name="ps-fail-a")
    return TestProblem(
        name="ps-fail-a",
        field=f,
        region=Box((0.0, -2.0), (10.0, 2.0)),
        endpoints=(np.array([0.0, -1.5]), np.array([0.0, 1.5])),
    )


def _ps_fail_b() -> TestProblem:
    def ev(x):
        return float(np.exp(-2.0 * x[0]) - x[1] ** 2 * np.exp(-x[0]))

    def gr(x):
        e1 = np.exp(-x[0])
        return np.array([-2.0 * np.exp(-2.0 * x[0]) + x[1] ** 2 * e1, -2.0 * x[1] * e1])

    def ev_many(p):
        return np.exp(-2.0 * p[:, 0]) - p[:, 1] ** 2 * np.exp(-p[:, 0])

    f = ScalarField(2, ev, gr, batch_evaluate=ev_many, name="ps-fail-b")
    return TestProblem(
        name="ps-fail-b",
        field=f,
        region=Box((0.0, -2.0), (10.0, 2.0)),
        endpoints=(np.array([0.0, -1.5]), np.array([0.0, 1.5])),
    )


def _plateau() -> TestProblem:
    # Piecewise-linear with a flat segment of local minima on [-1, 1].
    # Nonsmooth at the two hinges, so no gradient is reported.
    def ev(x):
        t = x[0]
        if t <= -1.0:
            return float(t)
        if t >= 1.0:
            return float(-t)
        return -1.0

    def ev_many(p):
        t = p[:, 0]
        return np.where(t <= -1.0, t, np.where(t >= 1.0, -t, -1.0))

    f = ScalarField(1, ev, batch_evaluate=ev_many, name="plateau", differentiable=False)
    return TestProblem(
        name="plateau",
        field=f,
        region=Box((-4.0,), (4.0,)),
        endpoints=(np.array([-2.0]), np.array([2.0])),
    )


def _double_well_curve() -> TestProblem:
    def ev(x):
        return float((x[1] - x[0] ** 2) * (x[0] - x[1] ** 2))

    def gr(x):
        u = x[1] - x[0] ** 2
        v = x[0] - x[1] ** 2
        return np.array([-2.0 * x[0] * v + u, v - 2.0 * x[1] * u])

    def ev_many(p):
        return (p[:, 1] - p[:, 0] ** 2) * (p[:, 0] - p[:, 1] ** 2)

    f = ScalarField(2, ev, gr, batch_evaluate=ev_many, name="double-well-curve")
    return TestProblem(
        name="double-well-curve",
        field=f,
        region=Box((-1.5, -1.5), (1.5, 1.5)),
        # Points inside the two negative "wings"; the wings touch at (0,0) and
        # (1,1), both critical with value 0.
        endpoints=(np.array([0.2, 0.75]), np.array([0.75, 0.2])),
        known_saddle=(np.array([1.0, 1.0]), 0.0),
    )


def _sqrt_cusp() -> TestProblem:
    # f(x) = -sqrt(|x|); not Lipschitz at 0, so no gradient is reported.
    def ev(x):
        return float(-np.sqrt(np.abs(x[0])))

    def ev_many(p):
        return -np.sqrt(np.abs(p[:, 0]))

    f = ScalarField(1, ev, batch_evaluate=ev_many, name="sqrt-cusp", differentiable=False)
    return TestProblem(
        name="sqrt-cusp",
        field=f,
        region=Box((-2.0,), (2.0,)),
        endpoints=(np.array([-1.0]), np.array([1.0])),
        known_saddle=(np.array([0.0]), 0.0),
    )


_BUILDERS = (
    _quadratic_saddle,
    _ps_fail_a,
    _ps_fail_b,
    _plateau,
    _double_well_curve,
    _sqrt_cusp,
)


def builtin_problems() -> list[TestProblem]:
    """Fresh instances of the whole catalog (counters start at zero)."""
    return [make() for make in _BUILDERS]


def get_problem(name: str) -> TestProblem:
    for make in _BUILDERS:
        p = make()
        if p.name == name:
            return p
    known = ", ".join(p.name for p in builtin_problems())
    raise KeyError(f"unknown problem {name!r}; known: {known}")
