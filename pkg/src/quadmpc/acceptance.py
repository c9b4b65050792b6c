"""End-to-end acceptance sweep: every headline capability as one pass/fail check.

Each criterion is a small function that runs (or reuses) a closed-loop
scenario or a randomized oracle comparison and reduces it to a boolean plus a
one-line numeric summary.  ``run_all`` prints one line per criterion and is
what ``quadmpc accept`` and the test suite both call, so the table printed on
the command line and the assertions in CI are literally the same code.

Scenario-based criteria build their configs through the same string-keyed
assignment layer as the CLI (``config.build_scenario``), which is what makes
``accept --set weights.q_v=0`` a meaningful negative control: overrides land
on every scenario.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

import numpy as np

from . import config as _config
from .legs import LegGeometry, leg_fk, leg_ik, leg_jacobian
from .mpc import LtvDiscrete, N_STATES, condense
from .qp import QpStatus, kkt_residuals, solve
from .sim import SimDivergedError, SimLog, run_scenario
from .srb import FootForces, PlantState, RobotParams, integrate_step


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    runtime_s: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<22} {self.detail}"


# ---------------------------------------------------------------------------
# shared scenario runs


_SCENARIOS: dict[str, dict[str, str]] = {
    # flat-INI assignments on top of the built-in defaults (the 0.5 m/s trot)
    "stand": {"command.vx": "0", "sim.duration": "5.0", "sim.settle": "5.0"},
    "trot": {},
    "top_speed": {"command.vx": "1.0", "sim.duration": "6.0"},
    "turn": {
        "command.vx": "0.35",
        "command.psi_d": "0.7853981633974483",
        "sim.duration": "8.0",
    },
    "disturbance": {
        "sim.duration": "6.0",
        "disturbance0.onset": "0.5",
        "disturbance0.peak_x": "4.0",
        "disturbance1.onset": "2.3",
        "disturbance1.peak_x": "8.0",
    },
    "crawl": {"gait.name": "crawl", "command.vx": "0.2", "sim.duration": "5.3"},
}


class ScenarioRuns:
    """Lazily-run, memoized closed-loop scenarios shared between criteria."""

    def __init__(self, overrides: list[str] | None = None):
        self.overrides = list(overrides or [])
        self._cache: dict[str, tuple[SimLog, float]] = {}

    def scenario(self, name: str):
        values = dict(_SCENARIOS[name])
        return _config.build_scenario(
            _config.apply_overrides(values, self.overrides)
        )

    def get(self, name: str) -> tuple[SimLog, float]:
        """(log, wall seconds); a fall returns the truncated log, not a raise."""
        if name not in self._cache:
            cfg = self.scenario(name)
            t0 = time.perf_counter()
            try:
                log = run_scenario(cfg)
            except SimDivergedError as exc:
                log = exc.log
            self._cache[name] = (log, time.perf_counter() - t0)
        return self._cache[name]


def _fall_note(log: SimLog) -> str:
    if not log.diverged:
        return "no fall"
    return f"FELL at t = {log.t[-1]:.2f} s ({log.reason})"


# ---------------------------------------------------------------------------
# criteria


def _crit_static_stand(runs: ScenarioRuns) -> tuple[bool, str]:
    log, wall = runs.get("stand")
    mg4 = runs.scenario("stand").robot.weight / 4.0
    tail = log.t >= 4.0
    f_err = float(np.abs(log.forces[tail] - np.array([0.0, 0.0, mg4])).max())
    drift = float(np.linalg.norm(log.p - log.p[0], axis=1).max())
    ok = (not log.diverged) and f_err < 0.5 and drift < 0.01 and wall < 10.0
    return ok, (
        f"max |f - (0,0,mg/4)| = {f_err:.3g} N (< 0.5), "
        f"COM drift = {drift:.2g} m (< 0.01), wall = {wall:.1f} s (< 10)"
    )


def _crit_trot_tracking(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("trot")
    sel = (log.t >= 2.0) & (log.t <= 5.0)
    v_err = float(np.abs(log.v[sel, 0] - 0.5).mean()) if sel.any() else np.inf
    z0 = runs.scenario("trot").command.z0
    z_err = float(np.abs(log.p[:, 2] - z0).max())
    ok = (not log.diverged) and v_err < 0.05 and z_err < 0.04
    return ok, (
        f"mean |vx - 0.5| = {v_err:.4f} (< 0.05), "
        f"max |pz - {z0:g}| = {z_err:.4f} m (< 0.04), {_fall_note(log)}"
    )


def _crit_grf_share(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("trot")
    sel = (log.t >= 2.0) & (log.t <= 5.0)
    fz = log.forces[sel][..., 2]
    stance = log.contacts[sel]
    mean_fz = float(fz[stance].mean()) if stance.any() else 0.0
    ideal = runs.scenario("trot").robot.weight / 2.0
    ok = (not log.diverged) and abs(mean_fz - ideal) <= 0.3 * ideal
    return ok, (
        f"mean stance fz = {mean_fz:.2f} N vs mg/2 = {ideal:.2f} N "
        f"(bound +/-30% = [{0.7 * ideal:.2f}, {1.3 * ideal:.2f}])"
    )


def _crit_top_speed(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("top_speed")
    sel = (log.t >= 3.0) & (log.t <= 6.0)
    v_mean = float(log.v[sel, 0].mean()) if sel.any() else 0.0
    ok = (not log.diverged) and v_mean > 0.9
    return ok, f"mean vx over [3, 6] s = {v_mean:.4f} m/s (> 0.9), {_fall_note(log)}"


def _crit_turn(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("turn")
    psi_d = runs.scenario("turn").command.psi_d
    psi_err = float(abs(log.theta[-1, 2] - psi_d)) if log.n_rows else np.inf
    settled = log.t >= 5.0
    wz_max = float(np.abs(log.w_world[settled, 2]).max()) if settled.any() else np.inf
    ok = (not log.diverged) and psi_err < 0.05 and wz_max < 0.05
    return ok, (
        f"|psi(end) - pi/4| = {psi_err:.4f} rad (< 0.05), "
        f"max |wz| after 5 s = {wz_max:.4f} rad/s (< 0.05)"
    )


def _crit_disturbance(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("disturbance")
    roll = float(np.abs(log.theta[:, 0]).max())
    pitch = float(np.abs(log.theta[:, 1]).max())
    ok = (not log.diverged) and roll < 0.5 and pitch < 0.5
    return ok, (
        f"max |roll| = {roll:.3f}, max |pitch| = {pitch:.3f} rad (< 0.5), "
        f"{_fall_note(log)}"
    )


def _crit_crawl(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("crawl")
    tilt = float(np.abs(log.theta[:, :2]).max())
    ok = (not log.diverged) and tilt < 0.5
    return ok, f"{_fall_note(log)} over {log.t[-1] + 0.001:.1f} s, max tilt = {tilt:.3f} rad"


def _crit_solve_rate(runs: ScenarioRuns) -> tuple[bool, str]:
    log, _ = runs.get("trot")
    ms = log.tick_ms
    mean = float(ms.mean())
    p95 = float(np.percentile(ms, 95))
    ok = mean < 20.0 and p95 < 20.0
    return ok, f"QP solve mean = {mean:.3f} ms, p95 = {p95:.3f} ms (< 20 both)"


def _random_qp(rng: np.random.Generator, n: int, m: int):
    mat = rng.standard_normal((n, n))
    h = mat @ mat.T / n + (0.5 + rng.random()) * np.eye(n)
    g = rng.standard_normal(n)
    if m == 0:
        return h, g, None, None
    a = rng.standard_normal((m, n))
    x_feas = rng.standard_normal(n)
    b = a @ x_feas + rng.random(m) + 0.01
    return h, g, a, b


def _pgd_box(h: np.ndarray, g: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Projected-gradient oracle for min 1/2 x'Hx + g'x with lb <= x <= ub."""
    step = 1.0 / float(np.linalg.eigvalsh(h).max())
    x = np.clip(np.zeros_like(g), lb, ub)
    for _ in range(200_000):
        x_new = np.clip(x - step * (h @ x + g), lb, ub)
        if float(np.abs(x_new - x).max()) < 1e-13:
            return x_new
        x = x_new
    return x


def _crit_qp_solver(_: ScenarioRuns) -> tuple[bool, str]:
    rng = np.random.default_rng(20240814)
    worst_kkt = 0.0
    worst_box = 0.0
    failures = 0
    for i in range(500):
        n = int(rng.integers(1, 31))
        box = i % 3 == 0
        if box:
            mat = rng.standard_normal((n, n))
            h = mat @ mat.T / n + (0.5 + rng.random()) * np.eye(n)
            g = rng.standard_normal(n)
            lb = -rng.random(n) - 0.2
            ub = rng.random(n) + 0.2
            a = np.vstack([np.eye(n), -np.eye(n)])
            b = np.concatenate([ub, -lb])
        else:
            m = int(rng.integers(0, min(61, 2 * n + 1)))
            h, g, a, b = _random_qp(rng, n, m)
        sol = solve(h, g, a, b)
        if sol.status != QpStatus.OPTIMAL:
            failures += 1
            continue
        res = kkt_residuals(h, g, a, b, sol)
        worst_kkt = max(worst_kkt, max(res.values()))
        if box:
            ref = _pgd_box(h, g, lb, ub)
            worst_box = max(worst_box, float(np.abs(sol.u_star - ref).max()))
    ok = failures == 0 and worst_kkt < 1e-6 and worst_box < 1e-6
    return ok, (
        f"500 QPs: {failures} failures, worst KKT = {worst_kkt:.2e} (< 1e-6), "
        f"worst box-QP vs PGD = {worst_box:.2e} (< 1e-6)"
    )


def _crit_condensing(_: ScenarioRuns) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _case in range(100):
        n_steps = int(rng.integers(1, 21))
        models = []
        for _k in range(n_steps):
            a_d = np.eye(N_STATES) + 0.05 * rng.standard_normal((N_STATES, N_STATES))
            n_c = int(rng.integers(0, 5))
            b_d = rng.standard_normal((N_STATES, 3 * n_c))
            models.append(LtvDiscrete(a_d=a_d, b_d=b_d, dt=0.02, contact_map=tuple(range(n_c))))
        a_qp, b_qp, offsets = condense(models)
        x0 = rng.standard_normal(N_STATES)
        u = rng.standard_normal(b_qp.shape[1])
        pred = a_qp @ x0 + b_qp @ u
        x = x0
        rolled = []
        for k, m in enumerate(models):
            s, w = offsets[k]
            x = m.a_d @ x + (m.b_d @ u[s : s + w] if w else 0.0)
            rolled.append(x)
        ref = np.concatenate(rolled)
        scale = max(1.0, float(np.abs(ref).max()))
        worst = max(worst, float(np.abs(pred - ref).max()) / scale)
    ok = worst < 1e-10
    return ok, f"100 rollouts: worst relative defect = {worst:.2e} (< 1e-10)"


def _crit_conservation(_: ScenarioRuns) -> tuple[bool, str]:
    params = RobotParams()
    dt = 1e-3

    # torque-free tumble: world angular momentum R I w must stay constant
    state = PlantState(
        p=np.array([0.0, 0.0, 1.0]),
        v=np.zeros(3),
        R=np.eye(3),
        w_body=np.array([2.0, -1.5, 3.0]),
    )
    feet = np.zeros((4, 3))
    zero = FootForces.zero()
    l0 = state.R @ (params.inertia_body @ state.w_body)
    drift = 0.0
    for _i in range(1000):
        state = integrate_step(state, zero, feet, dt, params)
        l_now = state.R @ (params.inertia_body @ state.w_body)
        drift = max(drift, float(np.linalg.norm(l_now - l0)))
    rel_l = drift / float(np.linalg.norm(l0))

    # free fall: closed-form ballistics
    p0 = np.array([0.1, -0.2, 1.5])
    v0 = np.array([0.3, -0.2, 0.5])
    state = PlantState(p=p0.copy(), v=v0.copy(), R=np.eye(3), w_body=np.zeros(3))
    err_p = 0.0
    for i in range(1000):
        state = integrate_step(state, zero, feet, dt, params)
        t = (i + 1) * dt
        exact = p0 + v0 * t + 0.5 * np.array([0.0, 0.0, -params.gravity]) * t * t
        err_p = max(err_p, float(np.linalg.norm(state.p - exact)))

    ok = rel_l < 1e-6 and err_p < 1e-6
    return ok, (
        f"angular momentum drift = {rel_l:.2e} rel (< 1e-6), "
        f"ballistic position error = {err_p:.2e} m (< 1e-6)"
    )


def _sample_leg_configs(rng: np.random.Generator, n: int, geom: LegGeometry) -> np.ndarray:
    """Joint samples on the IK's canonical branch (foot below hip, knee back)."""
    out = np.empty((n, 3))
    count = 0
    while count < n:
        q = np.array([
            rng.uniform(-1.2, 1.2),
            rng.uniform(-1.2, 1.2),
            rng.uniform(-2.4, -0.35),
        ])
        zp = -(geom.l1 * np.cos(q[1]) + geom.l2 * np.cos(q[1] + q[2]))
        r = float(np.linalg.norm(leg_fk(q, geom)))
        if zp < -0.02 and 0.02 < r < geom.l1 + geom.l2 - 0.005:
            out[count] = q
            count += 1
    return out


def _crit_leg_kinematics(_: ScenarioRuns) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    geom = LegGeometry()
    qs = _sample_leg_configs(rng, 1000, geom)
    worst_pos = 0.0
    worst_jac = 0.0
    h = 1e-6
    for q in qs:
        foot = leg_fk(q, geom)
        q_back = leg_ik(foot, geom)
        worst_pos = max(worst_pos, float(np.linalg.norm(leg_fk(q_back, geom) - foot)))

        jac = leg_jacobian(q, geom)
        fd = np.empty((3, 3))
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            fd[:, j] = (leg_fk(q + dq, geom) - leg_fk(q - dq, geom)) / (2 * h)
        worst_jac = max(worst_jac, float(np.abs(jac - fd).max()))
    ok = worst_pos < 1e-9 and worst_jac < 1e-6
    return ok, (
        f"1000 samples: FK(IK(x)) error = {worst_pos:.2e} m (< 1e-9), "
        f"Jacobian vs FD = {worst_jac:.2e} (< 1e-6)"
    )


CRITERIA: dict[str, callable] = {
    "static_stand": _crit_static_stand,
    "trot_tracking": _crit_trot_tracking,
    "grf_share": _crit_grf_share,
    "top_speed": _crit_top_speed,
    "turn": _crit_turn,
    "disturbance": _crit_disturbance,
    "crawl": _crit_crawl,
    "solve_rate": _crit_solve_rate,
    "qp_solver": _crit_qp_solver,
    "condensing": _crit_condensing,
    "conservation": _crit_conservation,
    "leg_kinematics": _crit_leg_kinematics,
}


class UnknownCriterionError(ValueError):
    def __init__(self, name: str):
        super().__init__(
            f"unknown criterion {name!r}; valid names: {', '.join(CRITERIA)}"
        )


def run_criterion(name: str, runs: ScenarioRuns) -> CriterionResult:
    try:
        fn = CRITERIA[name]
    except KeyError:
        raise UnknownCriterionError(name) from None
    t0 = time.perf_counter()
    passed, detail = fn(runs)
    return CriterionResult(name, passed, detail, time.perf_counter() - t0)


def run_all(
    only: list[str] | None = None,
    overrides: list[str] | None = None,
    stream=None,
) -> list[CriterionResult]:
    """Run the sweep (optionally a subset), printing one line per criterion."""
    stream = stream if stream is not None else sys.stdout
    names = list(CRITERIA) if not only else list(only)
    for name in names:
        if name not in CRITERIA:
            raise UnknownCriterionError(name)
    runs = ScenarioRuns(overrides)
    results = []
    for name in names:
        res = run_criterion(name, runs)
        print(res.line(), file=stream, flush=True)
        results.append(res)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed", file=stream, flush=True)
    return results
