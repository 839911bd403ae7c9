import numpy as np
import pytest

from saddlepass import Ball, Box, ScalarField, builtin_problems, get_problem, make_quadratic_field
from saddlepass.diagnostics import fd_gradient


def test_quadratic_field_values():
    f = make_quadratic_field([1.0, -1.0])
    assert f.value([0.0, 0.0]) == 0.0
    assert f.value([2.0, 1.0]) == 3.0


def test_quadratic_field_gradient_exact():
    f = make_quadratic_field([3.0, 2.0, -1.0])
    assert np.array_equal(f.grad([1.0, 1.0, 1.0]), [6.0, 4.0, -2.0])


def test_quadratic_empty_diagonal_rejected():
    with pytest.raises(ValueError):
        make_quadratic_field([])


def test_catalog_contains_required_problems():
    names = {p.name for p in builtin_problems()}
    assert {"quadratic-saddle", "ps-fail-a", "ps-fail-b", "plateau",
            "double-well-curve", "sqrt-cusp"} <= names


def test_catalog_lookups():
    qs = get_problem("quadratic-saddle")
    assert qs.known_saddle[1] == 0.0
    dw = get_problem("double-well-curve")
    assert dw.field.value([1.0, 1.0]) == 0.0
    sc = get_problem("sqrt-cusp")
    assert sc.field.value([4.0]) == -2.0
    with pytest.raises(KeyError):
        get_problem("no-such-problem")


def test_catalog_endpoints_inside_region_and_known_saddles():
    for p in builtin_problems():
        a, b = p.endpoints
        assert p.region.contains(a) and p.region.contains(b)
        if p.known_saddle is not None:
            pt, _ = p.known_saddle
            g = p.field.grad(pt) if p.field.has_gradient else fd_gradient(p.field, pt)
            assert np.linalg.norm(g) <= 1e-8


def test_gradients_match_finite_differences():
    # >= 100 random interior points per gradient-bearing catalog field.
    rng = np.random.default_rng(0)
    for p in builtin_problems():
        if not p.field.has_gradient:
            continue
        lo, hi = p.region.bounding_box()
        checked = 0
        while checked < 100:
            x = rng.uniform(lo, hi)
            if not p.region.contains_interior(x):
                continue
            an = p.field.grad(x)
            fd = fd_gradient(p.field, x)
            assert np.linalg.norm(fd - an) <= 1e-5 * (1.0 + np.linalg.norm(an)), (
                p.name, x, an, fd)
            checked += 1


def test_evaluate_deterministic_bit_identical():
    rng = np.random.default_rng(1)
    for p in builtin_problems():
        lo, hi = p.region.bounding_box()
        for _ in range(20):
            x = rng.uniform(lo, hi)
            assert p.field.value(x) == p.field.value(x)


def test_batch_evaluate_matches_pointwise():
    rng = np.random.default_rng(2)
    for p in builtin_problems():
        lo, hi = p.region.bounding_box()
        pts = rng.uniform(lo, hi, size=(50, p.field.dimension))
        batch = p.field.value_many(pts)
        single = np.array([p.field.value(x) for x in pts])
        assert np.array_equal(batch, single), p.name


def test_counters_and_equality():
    p = get_problem("quadratic-saddle")
    f = p.field
    twin = ScalarField(f.dimension, f._evaluate, f._gradient)
    assert f == twin
    before = f.eval_count
    f.value([0.3, 0.4])
    f.value_many(np.zeros((5, 2)))
    assert f.eval_count == before + 6
    f.grad([0.1, 0.1])
    assert f.grad_count == 1
    assert f == twin  # counters excluded from equality


def test_ball_membership_is_interior_metric():
    rng = np.random.default_rng(3)
    ball = Ball((0.5, -0.25), 1.25)
    for _ in range(200):
        x = rng.uniform(-2, 2, size=2)
        inside = np.linalg.norm(x - ball.center) < ball.radius
        assert ball.contains_interior(x) == inside
        if ball.contains_interior(x):
            assert ball.contains(x)


def test_region_validation():
    with pytest.raises(ValueError):
        Ball((0, 0), 0.0)
    with pytest.raises(ValueError):
        Box((0, 0), (0, 1))


def test_box_line_interval():
    box = Box((-1.0, -2.0), (1.0, 2.0))
    t = box.line_interval(np.zeros(2), np.array([1.0, 0.0]))
    assert t == (-1.0, 1.0)
    assert box.line_interval(np.array([5.0, 0.0]), np.array([0.0, 1.0])) is None


def test_nonsmooth_entries_report_no_gradient():
    for name in ("plateau", "sqrt-cusp"):
        p = get_problem(name)
        assert not p.field.has_gradient
        assert not p.field.differentiable
        with pytest.raises(ValueError):
            p.field.grad(p.endpoints[0])
