"""Tests for the Lobatto IIIa collocation engine."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scem_rd.collocation import (
    FirstOrderBvp,
    Mesh,
    MeshOverflow,
    NewtonDivergence,
    SolverConfig,
    estimate_residual,
    evaluate,
    solve,
)


def exponential_bvp():
    return FirstOrderBvp(
        dim=1,
        rhs=lambda t, u: u,
        bc=lambda ua, ub: np.array([ua[0] - 1.0]),
        interval=(0.0, 1.0),
    )


def linear_ramp_bvp():
    # u'' = 0 with u(0) = 0, u(1) = 1: solution u(t) = t
    return FirstOrderBvp(
        dim=2,
        rhs=lambda t, u: np.array([u[1], 0.0]),
        bc=lambda ua, ub: np.array([ua[0], ub[0] - 1.0]),
        interval=(0.0, 1.0),
    )


def scalar_layer_bvp(eps):
    # -eps u'' + u = 1, u(0) = u(1) = 0
    return FirstOrderBvp(
        dim=2,
        rhs=lambda t, u: np.array([u[1], (u[0] - 1.0) / eps]),
        bc=lambda ua, ub: np.array([ua[0], ub[0]]),
        interval=(0.0, 1.0),
    )


def scalar_layer_exact(eps, xs):
    s = 1.0 / np.sqrt(eps)
    return 1.0 - (np.exp(s * (xs - 1.0)) + np.exp(-s * xs)) / (1.0 + np.exp(-s))


def test_exponential_growth():
    sol = solve(exponential_bvp())
    assert abs(sol.interpolant(1.0)[0] - np.e) <= 1e-8
    assert sol.max_residual <= 1e-6


def test_exponential_between_nodes():
    sol = solve(exponential_bvp(), SolverConfig(initial_mesh_points=101))
    assert abs(sol.interpolant(0.5)[0] - np.exp(0.5)) <= 1e-8


def test_linear_solution_exact():
    sol = solve(linear_ramp_bvp(), SolverConfig(initial_mesh_points=5))
    assert abs(sol.interpolant(0.37)[0] - 0.37) <= 1e-14
    assert abs(sol.interpolant(1.0)[0] - 1.0) <= 1e-14


def test_linear_problem_needs_two_newton_iterations():
    sol = solve(linear_ramp_bvp(), SolverConfig(initial_mesh_points=5))
    assert sol.newton_iterations == 2  # one solve step, one confirmation


def test_layer_problem_matches_closed_form():
    eps = 0.01
    sol = solve(scalar_layer_bvp(eps), SolverConfig(initial_mesh_points=51))
    xs = np.linspace(0.0, 1.0, 1001)
    err = np.max(np.abs(evaluate(sol, xs)[:, 0] - scalar_layer_exact(eps, xs)))
    assert err <= 1e-6


def test_evaluate_at_nodes_reproduces_node_values():
    sol = solve(scalar_layer_bvp(0.01), SolverConfig(initial_mesh_points=51))
    got = evaluate(sol, sol.mesh.nodes)
    np.testing.assert_array_equal(got, sol.node_values)


def test_evaluate_rejects_outside_points():
    sol = solve(linear_ramp_bvp(), SolverConfig(initial_mesh_points=5))
    with pytest.raises(ValueError):
        evaluate(sol, [1.5])
    with pytest.raises(ValueError):
        evaluate(sol, [-0.2])


def test_interpolant_is_c1_at_shared_nodes():
    sol = solve(scalar_layer_bvp(0.04), SolverConfig(initial_mesh_points=21))
    interior = sol.mesh.nodes[1:-1]
    np.testing.assert_array_equal(sol.interpolant(interior), sol.node_values[1:-1])
    # derivative from either side agrees with the stored slope
    d = sol.interpolant_derivative(interior)
    np.testing.assert_allclose(d, sol.node_slopes[1:-1], rtol=0, atol=1e-9)
    eps_t = 1e-9
    left = sol.interpolant_derivative(interior - eps_t)
    right = sol.interpolant_derivative(interior + eps_t)
    np.testing.assert_allclose(left, right, rtol=0, atol=1e-6)


def test_residual_zero_for_cubic_solution():
    # u = t^3 - t: u' = 3t^2 - 1, u'' = 6t; collocation is exact on cubics
    bvp = FirstOrderBvp(
        dim=2,
        rhs=lambda t, u: np.array([u[1], 6.0 * t]),
        bc=lambda ua, ub: np.array([ua[0], ub[0]]),
        interval=(0.0, 1.0),
    )
    sol = solve(bvp, SolverConfig(initial_mesh_points=5, adaptive=False))
    res = estimate_residual(bvp, sol)
    assert np.max(res) <= 1e-12
    xs = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(evaluate(sol, xs)[:, 0] - (xs**3 - xs))) <= 1e-10


def test_residual_below_tolerance_after_convergence():
    bvp = scalar_layer_bvp(0.01)
    cfg = SolverConfig(initial_mesh_points=51, residual_tol=1e-6)
    sol = solve(bvp, cfg)
    res = estimate_residual(bvp, sol)
    assert np.max(res) <= cfg.residual_tol
    assert np.max(res) == pytest.approx(sol.max_residual, rel=1e-12)


def test_residual_large_on_coarse_mesh():
    bvp = scalar_layer_bvp(0.01)
    sol = solve(bvp, SolverConfig(initial_mesh_points=3, adaptive=False))
    assert np.max(estimate_residual(bvp, sol)) > 1e-6


def test_fourth_order_convergence():
    # smooth problem with known solution sin(pi t)
    def rhs(t, u):
        return np.array([u[1], u[0] - (1.0 + np.pi**2) * np.sin(np.pi * t)])

    errors = []
    for n in (8, 16, 32):
        bvp = FirstOrderBvp(
            dim=2, rhs=rhs,
            bc=lambda ua, ub: np.array([ua[0], ub[0]]),
            interval=(0.0, 1.0),
        )
        sol = solve(bvp, SolverConfig(initial_mesh_points=n + 1, adaptive=False))
        errors.append(
            np.max(np.abs(sol.node_values[:, 0] - np.sin(np.pi * sol.mesh.nodes)))
        )
    for coarse, fine in zip(errors, errors[1:]):
        assert 12.0 <= coarse / fine <= 20.0


def test_refined_mesh_contains_initial_nodes():
    bvp = scalar_layer_bvp(1e-4)
    initial = np.linspace(0.0, 1.0, 21)
    sol = solve(bvp, SolverConfig(initial_mesh_points=21))
    assert sol.mesh.nodes.size > 21  # refinement actually happened
    for node in initial:
        assert np.min(np.abs(sol.mesh.nodes - node)) <= 1e-14


def test_newton_divergence_on_iteration_budget():
    # genuinely nonlinear problem with a one-iteration budget
    bvp = FirstOrderBvp(
        dim=1,
        rhs=lambda t, u: u * u,
        bc=lambda ua, ub: np.array([ua[0] - 0.5]),
        interval=(0.0, 1.0),
    )
    with pytest.raises(NewtonDivergence):
        solve(bvp, SolverConfig(initial_mesh_points=11, max_newton=1))


def test_nonlinear_problem_converges():
    # u' = u^2, u(0) = 0.5: solution 1/(2 - t)
    bvp = FirstOrderBvp(
        dim=1,
        rhs=lambda t, u: u * u,
        bc=lambda ua, ub: np.array([ua[0] - 0.5]),
        interval=(0.0, 1.0),
    )
    sol = solve(bvp, SolverConfig(initial_mesh_points=51))
    assert abs(sol.interpolant(1.0)[0] - 1.0) <= 1e-8


def test_mesh_overflow_when_budget_too_small():
    bvp = scalar_layer_bvp(1e-6)
    with pytest.raises(MeshOverflow):
        solve(bvp, SolverConfig(initial_mesh_points=11, max_mesh_points=40))


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Mesh(np.array([1.0]))
    m = Mesh(np.array([0.0, 0.25, 1.0]))
    assert m.a == 0.0 and m.b == 1.0 and m.n_intervals == 2


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(residual_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(initial_mesh_points=1)
    with pytest.raises(ValueError):
        FirstOrderBvp(dim=1, rhs=lambda t, u: u, bc=lambda a, b: a, interval=(1.0, 0.0))


def test_vectorized_rhs_agrees_with_scalar():
    def rhs_scalar(t, u):
        return np.array([u[1], (u[0] - 1.0) / 0.01])

    def rhs_vec(t, u):
        out = np.empty_like(u)
        out[:, 0] = u[:, 1]
        out[:, 1] = (u[:, 0] - 1.0) / 0.01
        return out

    base = dict(bc=lambda ua, ub: np.array([ua[0], ub[0]]), interval=(0.0, 1.0))
    cfg = SolverConfig(initial_mesh_points=41)
    sol_s = solve(FirstOrderBvp(dim=2, rhs=rhs_scalar, **base), cfg)
    sol_v = solve(FirstOrderBvp(dim=2, rhs=rhs_vec, vectorized=True, **base), cfg)
    xs = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(evaluate(sol_s, xs), evaluate(sol_v, xs), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(
    c=st.tuples(*[st.floats(min_value=-2.0, max_value=2.0) for _ in range(4)]),
)
def test_polynomial_exactness_property(c):
    # any cubic u(t) = c0 + c1 t + c2 t^2 + c3 t^3 is reproduced on any mesh
    c0, c1, c2, c3 = c

    def u(t):
        return c0 + c1 * t + c2 * t * t + c3 * t**3

    def rhs(t, w):
        return np.array([w[1], 2.0 * c2 + 6.0 * c3 * t])

    bvp = FirstOrderBvp(
        dim=2, rhs=rhs,
        bc=lambda ua, ub: np.array([ua[0] - u(0.0), ub[0] - u(1.0)]),
        interval=(0.0, 1.0),
    )
    sol = solve(bvp, SolverConfig(initial_mesh_points=5, adaptive=False))
    xs = np.linspace(0.0, 1.0, 37)
    assert np.max(np.abs(evaluate(sol, xs)[:, 0] - u(xs))) <= 1e-10
