"""Dense active-set solver for strictly convex inequality-constrained QPs.

Solves

    min_u  1/2 u^T H u + G^T u   s.t.   A u <= b

with H symmetric positive definite.  The method is a primal active-set
iteration: keep a working set W of constraints treated as equalities, solve
the equality-constrained subproblem, step to the nearest blocking
constraint, and drop working-set rows whose multipliers go negative.  Ties
(which constraint to add or drop) always resolve to the lowest row index,
so the solver is bitwise deterministic for identical inputs.

The equality subproblem uses a null-space method on a column-pivoted QR of
A_W^T rather than the usual Schur complement A_W H^-1 A_W^T.  Friction
pyramids make linearly dependent working sets routine (with mu = 1 the two
x-edge rows of one pyramid sum to twice its lower-bound row), and the Schur
matrix then turns singular in ways a Cholesky factorisation detects only
unreliably.  The QR rank decision handles dependent rows exactly: redundant
rows simply get zero multipliers, and the reduced Hessian Z^T H Z stays
positive definite no matter what the working set looks like.

Cold starts use u = 0 when feasible (always true for friction-cone problems
with non-negative bounds); otherwise a big-M phase-1 with one slack variable
finds a feasible point or declares the problem infeasible.  Warm starts may
seed both the start point (``x0``, used only if feasible) and the working
set (rows still active at the start point); a warm-started run that fails
to converge is retried once from cold before failure is reported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, qr, solve_triangular


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    NONCONVEX = "nonconvex"


@dataclass
class QpSolution:
    u_star: np.ndarray
    status: QpStatus
    iterations: int
    active_set: np.ndarray
    multipliers: np.ndarray
    objective: float


def _objective(h: np.ndarray, g: np.ndarray, u: np.ndarray) -> float:
    return float(0.5 * u @ (h @ u) + g @ u)


def _factor_h(h: np.ndarray, tol: float):
    """Cholesky of H, or None when H has a clearly negative eigenvalue."""
    try:
        return cho_factor(h, lower=True, check_finite=False)
    except LinAlgError:
        eigmin = float(np.linalg.eigvalsh(h).min())
        if eigmin < -tol:
            return None
        # positive semidefinite within tolerance: nudge onto the PD cone
        jitter = abs(eigmin) + 1e-12 * max(1.0, float(np.abs(h).max()))
        return cho_factor(h + jitter * np.eye(h.shape[0]), lower=True, check_finite=False)


def _independent_rows(a: np.ndarray, rows: list[int], n_max: int) -> list[int]:
    """Greedy subset of rows that is linearly independent (Gram-Schmidt gate)."""
    basis: list[np.ndarray] = []
    keep: list[int] = []
    for i in rows:
        v = a[i].astype(float).copy()
        for q in basis:
            v -= (q @ v) * q
        nv = float(np.linalg.norm(v))
        if nv > 1e-8 * max(1.0, float(np.linalg.norm(a[i]))):
            basis.append(v / nv)
            keep.append(i)
            if len(keep) >= n_max:
                break
    return keep


def _eqp_step(
    h: np.ndarray,
    chol,
    g_x: np.ndarray,
    a_w: np.ndarray,
    h_w: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Step to the minimizer over {x + p : A_W p = h_w}, with its multipliers.

    Null-space method: factor A_W^T P = Q R with column pivoting, split Q into
    a range basis Y (first ``rank`` columns) and null-space basis Z.  The
    range component lands the iterate on the working manifold, the reduced
    problem on Z has Hessian Z^T H Z (positive definite whenever H is), and
    the multipliers come from the triangular factor, with zeros assigned to
    rows the rank decision marked redundant.  Nothing here can raise on a
    dependent working set, which is what makes degenerate vertices safe.
    """
    n = g_x.shape[0]
    w = a_w.shape[0]
    if w == 0:
        return -cho_solve(chol, g_x, check_finite=False), np.zeros(0)
    q_full, r_full, piv = qr(a_w.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(r_full))
    rank = 0
    if diag.size and diag[0] > 0.0:
        rank = int(np.count_nonzero(diag > 1e-10 * diag[0]))
    z_basis = q_full[:, rank:]
    if rank:
        t = solve_triangular(
            r_full[:rank, :rank], h_w[piv[:rank]], trans="T", lower=False, check_finite=False
        )
        p = q_full[:, :rank] @ t
    else:
        p = np.zeros(n)
    if z_basis.shape[1]:
        m_z = z_basis.T @ (h @ z_basis)
        m_chol = cho_factor(0.5 * (m_z + m_z.T), lower=True, check_finite=False)
        rhs = -(z_basis.T @ (g_x + h @ p))
        p = p + z_basis @ cho_solve(m_chol, rhs, check_finite=False)
    lam_w = np.zeros(w)
    if rank:
        lam_r = solve_triangular(
            r_full[:rank, :rank],
            -(q_full[:, :rank].T @ (g_x + h @ p)),
            lower=False,
            check_finite=False,
        )
        lam_w[piv[:rank]] = lam_r
    return p, lam_w


def _active_set_loop(
    h: np.ndarray,
    g: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    chol,
    x: np.ndarray,
    work: list[int],
    tol: float,
    max_iter: int,
    stop_when=None,
) -> tuple[np.ndarray, np.ndarray, list[int], int, QpStatus]:
    """Primal active-set iteration from a feasible x.

    ``work`` rows need not pass through x exactly; the subproblem right-hand
    side carries the residual b_W - A_W x, so the first step also lands the
    iterate on the working manifold.

    ``stop_when`` is an early-exit predicate on the iterate, for callers that
    only need a point with some property (phase 1 stops at the first feasible
    point instead of polishing a deliberately ill-scaled penalty objective).
    """
    m = a.shape[0]
    n = g.shape[0]
    iters = 0
    lam_w = np.zeros(0)
    last_released = -1
    pinned: set[int] = set()
    if __debug__:
        prev_obj = _objective(h, g, x)

    while iters < max_iter:
        iters += 1
        g_x = h @ x + g
        if work:
            a_w = a[work]
            h_w = b[work] - a_w @ x
        else:
            a_w = np.zeros((0, n))
            h_w = np.zeros(0)
        p, lam_w = _eqp_step(h, chol, g_x, a_w, h_w)

        at_minimizer = float(np.abs(p).max(initial=0.0)) <= tol * (
            1.0 + float(np.abs(x).max(initial=0.0))
        )
        if not at_minimizer:
            # ratio test against constraints outside the working set
            alpha = 1.0
            blocker = -1
            if m:
                in_work = np.zeros(m, dtype=bool)
                if work:
                    in_work[work] = True
                d = a @ p
                slack = b - a @ x
                cand = (~in_work) & (d > 1e-13 * (1.0 + np.abs(b)))
                if cand.any():
                    ratios = np.full(m, np.inf)
                    ratios[cand] = slack[cand] / d[cand]
                    j = int(np.argmin(ratios))  # lowest index wins ties
                    if ratios[j] < alpha:
                        alpha = max(ratios[j], 0.0)
                        blocker = j
            x = x + alpha * p
            if stop_when is not None and stop_when(x):
                return x, lam_w, work, iters, QpStatus.OPTIMAL
            if blocker >= 0:
                work.append(blocker)
                if blocker == last_released and alpha <= 1e-12:
                    # a row released on multiplier sign that instantly
                    # re-blocks without progress means the two tests
                    # disagree at rounding level; pin it to stop the cycle
                    pinned.add(blocker)
                if __debug__:
                    obj = _objective(h, g, x)
                    assert obj <= prev_obj + 1e-7 * (1.0 + abs(prev_obj)), "objective increased"
                    prev_obj = obj
                continue
            # unblocked full step: x is now the minimizer on the working set,
            # and lam_w (independent of the start point) is its multiplier,
            # so fall through to the release check without another solve

        # stationary on the working set: optimal unless a multiplier says
        # the constraint should release
        lam_release = lam_w
        if pinned and lam_w.size:
            lam_release = lam_w.copy()
            lam_release[[i for i, r in enumerate(work) if r in pinned]] = 0.0
        if lam_release.size == 0 or float(lam_release.min()) >= -tol:
            return x, lam_w, work, iters, QpStatus.OPTIMAL
        k = int(np.argmin(lam_release))
        last_released = work[k]
        work.pop(k)

        if __debug__:
            obj = _objective(h, g, x)
            assert obj <= prev_obj + 1e-7 * (1.0 + abs(prev_obj)), "objective increased"
            prev_obj = obj

    if lam_w.shape[0] != len(work):
        lam_w = np.zeros(len(work))
    return x, lam_w, work, iters, QpStatus.MAX_ITERATIONS


def _phase1(a: np.ndarray, b: np.ndarray, tol: float, max_iter: int) -> np.ndarray | None:
    """Find a feasible point via one big-M slack, or None if infeasible.

    Minimises 1/2 eps |x|^2 + 1/2 s^2 + M s subject to A x - s <= b, s >= 0;
    (x, s) = (0, max(0, -min b) + 1) is strictly feasible by construction.
    The iteration aborts the moment s reaches zero: any such iterate already
    satisfies A x <= b, and past that point the big-M objective is numerically
    flat in x (eps-scale gradients drown in M-scale rounding), so continuing
    to optimize it would chase noise.
    """
    m, n = a.shape
    s0 = max(0.0, -float(b.min())) + 1.0
    big_m = 1e8 * (1.0 + float(np.abs(a).max()) + float(np.abs(b).max()))
    h1 = np.eye(n + 1) * 1e-6
    h1[n, n] = 1.0
    g1 = np.zeros(n + 1)
    g1[n] = big_m
    a1 = np.zeros((m + 1, n + 1))
    a1[:m, :n] = a
    a1[:m, n] = -1.0
    a1[m, n] = -1.0  # s >= 0
    b1 = np.concatenate([b, [0.0]])
    z0 = np.zeros(n + 1)
    z0[n] = s0
    chol = cho_factor(h1, lower=True, check_finite=False)
    z, _, _, _, status = _active_set_loop(
        h1, g1, a1, b1, chol, z0, [], tol, max_iter + 10 * (n + m),
        stop_when=lambda zz: zz[n] <= 0.0,
    )
    if status is not QpStatus.OPTIMAL or z[n] > 1e-6 * s0:
        return None
    return z[:n]


def solve(
    h: np.ndarray,
    g: np.ndarray,
    a_ineq: np.ndarray | None = None,
    b_ineq: np.ndarray | None = None,
    *,
    tol: float = 1e-8,
    max_iter: int | None = None,
    warm_start: np.ndarray | None = None,
    x0: np.ndarray | None = None,
) -> QpSolution:
    """Solve the QP; see module docstring for the contract.

    ``x0`` is an optional primal warm point, used only if it is feasible.
    ``warm_start`` is an iterable of constraint row indices to seed the
    working set; rows not active at the start point are ignored.  A zero-size
    problem returns an empty optimal solution.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    n = g.shape[0]
    if a_ineq is None or b_ineq is None or np.size(a_ineq) == 0:
        a = np.zeros((0, n))
        b = np.zeros(0)
    else:
        a = np.asarray(a_ineq, dtype=float).reshape(-1, n)
        b = np.asarray(b_ineq, dtype=float).reshape(-1)
    m = a.shape[0]
    if b.shape[0] != m:
        raise ValueError("b_ineq length must match A_ineq rows")
    if max_iter is None:
        max_iter = 10 * (n + m)

    if n == 0:
        return QpSolution(np.zeros(0), QpStatus.OPTIMAL, 0, np.zeros(0, dtype=int), np.zeros(m), 0.0)
    if h.shape != (n, n):
        raise ValueError("H must be square and match G")

    h = 0.5 * (h + h.T)
    chol = _factor_h(h, tol)
    if chol is None:
        return QpSolution(
            np.zeros(n), QpStatus.NONCONVEX, 0, np.zeros(0, dtype=int), np.zeros(m), 0.0
        )

    def cold_point() -> np.ndarray | None:
        if m == 0 or float(b.min()) >= -1e-12:
            return np.zeros(n)
        return _phase1(a, b, tol, max_iter)

    x: np.ndarray | None = None
    if x0 is not None:
        cand = np.asarray(x0, dtype=float).reshape(-1)
        if (
            cand.shape[0] == n
            and np.isfinite(cand).all()
            and (m == 0 or float((a @ cand - b).max(initial=0.0)) <= tol)
        ):
            x = cand.copy()
    warmed = x is not None
    if x is None:
        x = cold_point()
        if x is None:
            return QpSolution(
                np.zeros(n), QpStatus.INFEASIBLE, 0, np.zeros(0, dtype=int), np.zeros(m), 0.0
            )

    work: list[int] = []
    if warm_start is not None and m:
        resid = np.abs(a @ x - b)
        seed = [
            int(i)
            for i in np.asarray(warm_start, dtype=int)
            if 0 <= i < m and resid[i] <= 1e-7 * (1.0 + abs(b[i]))
        ]
        work = _independent_rows(a, seed, n)
        warmed = warmed or bool(work)

    x, lam_w, work, iters, status = _active_set_loop(h, g, a, b, chol, x, work, tol, max_iter)
    if status is QpStatus.MAX_ITERATIONS and warmed:
        # a poor warm start can walk the iteration into a corner it cannot
        # leave; one retry from scratch is cheap next to a reported failure
        x_cold = cold_point()
        if x_cold is not None:
            x2, lam2, work2, iters2, status2 = _active_set_loop(
                h, g, a, b, chol, x_cold, [], tol, max_iter
            )
            iters += iters2
            if status2 is QpStatus.OPTIMAL:
                x, lam_w, work, status = x2, lam2, work2, status2

    multipliers = np.zeros(m)
    if work:
        multipliers[work] = lam_w
    active = np.array(sorted(work), dtype=int)
    return QpSolution(x, status, iters, active, multipliers, _objective(h, g, x))


def kkt_residuals(
    h: np.ndarray,
    g: np.ndarray,
    a_ineq: np.ndarray | None,
    b_ineq: np.ndarray | None,
    sol: QpSolution,
) -> dict[str, float]:
    """Four KKT residuals of a candidate solution (all zero at an exact optimum).

    stationarity    ||H u + G + A^T lambda||_inf
    primal          max(0, max_i (A u - b)_i)
    dual            max(0, -min_i lambda_i)
    complementarity max_i |lambda_i * (A u - b)_i|
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1)
    u = sol.u_star
    lam = sol.multipliers
    if a_ineq is None or np.size(a_ineq) == 0:
        stat = float(np.abs(h @ u + g).max(initial=0.0))
        return {"stationarity": stat, "primal": 0.0, "dual": 0.0, "complementarity": 0.0}
    a = np.asarray(a_ineq, dtype=float)
    b = np.asarray(b_ineq, dtype=float).reshape(-1)
    resid = a @ u - b
    stat = float(np.abs(h @ u + g + a.T @ lam).max(initial=0.0))
    primal = float(max(0.0, resid.max(initial=0.0)))
    dual = float(max(0.0, -lam.min(initial=0.0)))
    comp = float(np.abs(lam * resid).max(initial=0.0))
    return {"stationarity": stat, "primal": primal, "dual": dual, "complementarity": comp}
