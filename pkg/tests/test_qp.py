"""Dense active-set QP solver: optimality, edge cases, regression problems.

Optimality is always judged through :func:`kkt_residuals` or an independent
oracle (closed form, projected gradient), never by trusting the solver's own
status alone.
"""

import glob
import os

import numpy as np
import pytest

from quadmpc.qp import QpStatus, kkt_residuals, solve

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
KKT_TOL = 1e-6


def random_qp(rng, n, m):
    mat = rng.standard_normal((n, n))
    h = mat @ mat.T / n + (0.5 + rng.random()) * np.eye(n)
    g = rng.standard_normal(n)
    if m == 0:
        return h, g, None, None
    a = rng.standard_normal((m, n))
    b = a @ rng.standard_normal(n) + rng.random(m) + 0.01
    return h, g, a, b


def worst_kkt(h, g, a, b, sol):
    return max(kkt_residuals(h, g, a, b, sol).values())


def pgd_box(h, g, lb, ub):
    step = 1.0 / np.linalg.eigvalsh(h).max()
    x = np.clip(np.zeros_like(g), lb, ub)
    for _ in range(200_000):
        x_new = np.clip(x - step * (h @ x + g), lb, ub)
        if np.abs(x_new - x).max() < 1e-13:
            return x_new
        x = x_new
    return x


def test_unconstrained_matches_linear_solve():
    rng = np.random.default_rng(10)
    for n in (1, 4, 17):
        h, g, _, _ = random_qp(rng, n, 0)
        sol = solve(h, g)
        assert sol.status is QpStatus.OPTIMAL
        assert np.allclose(sol.u_star, -np.linalg.solve(h, g), atol=1e-9)
        assert sol.objective == pytest.approx(0.5 * sol.u_star @ h @ sol.u_star + g @ sol.u_star)


def test_random_inequality_suite():
    rng = np.random.default_rng(11)
    for _ in range(150):
        n = int(rng.integers(1, 25))
        m = int(rng.integers(0, 2 * n + 1))
        h, g, a, b = random_qp(rng, n, m)
        sol = solve(h, g, a, b)
        assert sol.status is QpStatus.OPTIMAL
        assert worst_kkt(h, g, a, b, sol) < KKT_TOL
        if m:
            assert (a @ sol.u_star - b).max() <= 1e-7


def test_box_qp_matches_projected_gradient():
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(1, 20))
        mat = rng.standard_normal((n, n))
        h = mat @ mat.T / n + (0.5 + rng.random()) * np.eye(n)
        g = rng.standard_normal(n) * 2.0
        lb = -rng.random(n) - 0.1
        ub = rng.random(n) + 0.1
        a = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([ub, -lb])
        sol = solve(h, g, a, b)
        assert sol.status is QpStatus.OPTIMAL
        assert np.abs(sol.u_star - pgd_box(h, g, lb, ub)).max() < 1e-6


def test_active_constraint_known_solution():
    # min (x0-2)^2 + (x1-2)^2 s.t. x0 + x1 <= 2: optimum at (1, 1)
    h = 2.0 * np.eye(2)
    g = np.array([-4.0, -4.0])
    a = np.array([[1.0, 1.0]])
    b = np.array([2.0])
    sol = solve(h, g, a, b)
    assert sol.status is QpStatus.OPTIMAL
    assert np.allclose(sol.u_star, [1.0, 1.0], atol=1e-9)
    assert sol.multipliers[0] == pytest.approx(2.0, abs=1e-8)
    assert list(sol.active_set) == [0]


def test_infeasible_detected():
    h = np.eye(1)
    g = np.zeros(1)
    a = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
    sol = solve(h, g, a, b)
    assert sol.status is QpStatus.INFEASIBLE


def test_nonconvex_detected():
    sol = solve(np.array([[-1.0]]), np.zeros(1))
    assert sol.status is QpStatus.NONCONVEX


def test_zero_dimensional_problem():
    sol = solve(np.zeros((0, 0)), np.zeros(0))
    assert sol.status is QpStatus.OPTIMAL
    assert sol.u_star.shape == (0,)


def test_duplicate_rows_degenerate_vertex():
    """Coincident constraints at the optimum must not break the working set."""
    h = 2.0 * np.eye(2)
    g = np.array([-4.0, 0.0])
    a = np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    b = np.array([1.0, 1.0, 2.0, 5.0])
    sol = solve(h, g, a, b)
    assert sol.status is QpStatus.OPTIMAL
    assert np.allclose(sol.u_star, [1.0, 0.0], atol=1e-9)
    assert worst_kkt(h, g, a, b, sol) < KKT_TOL


def test_warm_start_reaches_same_solution():
    rng = np.random.default_rng(13)
    h, g, a, b = random_qp(rng, 12, 20)
    cold = solve(h, g, a, b)
    assert cold.status is QpStatus.OPTIMAL
    warm = solve(h, g, a, b, warm_start=cold.active_set, x0=cold.u_star)
    assert warm.status is QpStatus.OPTIMAL
    assert np.allclose(warm.u_star, cold.u_star, atol=1e-8)
    assert warm.iterations <= cold.iterations


def test_warm_start_garbage_indices_ignored():
    rng = np.random.default_rng(14)
    h, g, a, b = random_qp(rng, 6, 9)
    sol = solve(h, g, a, b, warm_start=np.array([-3, 99, 2, 2]))
    assert sol.status is QpStatus.OPTIMAL
    assert worst_kkt(h, g, a, b, sol) < KKT_TOL


def test_infeasible_x0_falls_back_to_phase1():
    h = np.eye(2)
    g = np.array([1.0, 1.0])
    a = np.array([[-1.0, 0.0], [0.0, -1.0]])
    b = np.array([-1.0, -1.0])  # x >= 1 elementwise
    sol = solve(h, g, a, b, x0=np.array([-5.0, -5.0]))
    assert sol.status is QpStatus.OPTIMAL
    assert np.allclose(sol.u_star, [1.0, 1.0], atol=1e-8)


def test_equality_like_narrow_band():
    # two opposing rows squeeze x0 to ~0.5 without being exactly equal
    h = np.eye(2)
    g = np.array([0.0, 1.0])
    a = np.array([[1.0, 0.0], [-1.0, 0.0]])
    b = np.array([0.5, -0.5])
    sol = solve(h, g, a, b)
    assert sol.status is QpStatus.OPTIMAL
    assert sol.u_star[0] == pytest.approx(0.5, abs=1e-9)
    assert sol.u_star[1] == pytest.approx(-1.0, abs=1e-9)


def test_kkt_residuals_flag_suboptimal_point():
    rng = np.random.default_rng(15)
    h, g, a, b = random_qp(rng, 8, 12)
    sol = solve(h, g, a, b)
    good = worst_kkt(h, g, a, b, sol)
    perturbed = sol
    perturbed.u_star[0] += 0.05
    assert worst_kkt(h, g, a, b, perturbed) > 100 * max(good, 1e-12)


@pytest.mark.parametrize(
    "path", sorted(glob.glob(os.path.join(DATA_DIR, "qp_case*.npz"))),
    ids=lambda p: os.path.splitext(os.path.basename(p))[0],
)
def test_regression_problems(path):
    """Captured MPC ticks (and one phase-1 breaker) that once failed to solve."""
    d = np.load(path)
    h, g, a, b = d["h"], d["g"], d["a"], d["b"]
    warm = d["warm"] if d["warm"].size else None
    x0 = d["x0"] if d["x0"].size else None
    sol = solve(h, g, a, b, warm_start=warm, x0=x0)
    assert sol.status is QpStatus.OPTIMAL
    assert worst_kkt(h, g, a, b, sol) < KKT_TOL
    # and again from cold, exercising phase 1 on the same data
    cold = solve(h, g, a, b)
    assert cold.status is QpStatus.OPTIMAL
    assert np.allclose(cold.u_star, sol.u_star, atol=1e-6)
