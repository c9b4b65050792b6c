"""Run artifacts: the per-step CSV log and the human-readable summary.

The CSV column set is fixed and documented here once; readers validate
against it.  Values are written with ``%.17g`` so float64 state round-trips
exactly — two runs of the same scenario produce byte-identical rows in every
column except ``qp_ms``, which is measured wall time.
"""

from __future__ import annotations

import os

import numpy as np

from .reference import reference_point
from .sim import ScenarioConfig, SimLog

CSV_COLUMNS = (
    "t",
    "px", "py", "pz",
    "vx", "vy", "vz",
    "roll", "pitch", "yaw",
    "wx", "wy", "wz",
    "c0", "c1", "c2", "c3",
    "f0x", "f0y", "f0z",
    "f1x", "f1y", "f1z",
    "f2x", "f2y", "f2z",
    "f3x", "f3y", "f3z",
    "qp_status", "qp_ms",
)


class MissingColumnError(KeyError):
    """CSV log lacks one or more required columns."""


def log_matrix(log: SimLog) -> np.ndarray:
    """Stack the log into one (rows, 31) array in CSV column order."""
    return np.column_stack([
        log.t,
        log.p, log.v, log.theta, log.w_world,
        log.contacts.astype(float),
        log.forces.reshape(log.n_rows, 12),
        log.qp_status.astype(float), log.qp_ms,
    ])


def write_log_csv(log: SimLog, path: str) -> None:
    data = log_matrix(log)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_log_csv(path: str) -> dict[str, np.ndarray]:
    """Columns by name; raises :class:`MissingColumnError` on a bad header."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        names = header.split(",") if header else []
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    missing = [c for c in CSV_COLUMNS if c not in names]
    if missing:
        raise MissingColumnError(
            f"log {path!r} is missing columns: {', '.join(missing)}"
        )
    if data.size == 0:
        data = data.reshape(0, len(names))
    return {name: data[:, i] for i, name in enumerate(names)}


def _tracking_errors(log: SimLog, cfg: ScenarioConfig) -> dict[str, float]:
    """Mean absolute velocity/yaw error over the second half of the run."""
    t0 = cfg.settle + 0.5 * (cfg.duration - cfg.settle)
    m = log.t >= t0
    if not m.any():
        m = np.ones_like(log.t, dtype=bool)
    v_err = np.zeros(3)
    psi_err = 0.0
    for i in np.flatnonzero(m):
        ref = reference_point(max(0.0, log.t[i] - cfg.settle), cfg.command)
        v_err += np.abs(log.v[i] - ref[3:6])
        psi_err += abs(log.theta[i, 2] - ref[8])
    count = int(m.sum())
    v_err /= count
    return {
        "mean_abs_vx_error": v_err[0],
        "mean_abs_vy_error": v_err[1],
        "mean_abs_vz_error": v_err[2],
        "mean_abs_yaw_error": psi_err / count,
    }


def summary_lines(log: SimLog, cfg: ScenarioConfig) -> list[str]:
    lines = [
        f"gait: {cfg.gait}",
        f"duration_s: {cfg.duration:g}",
        f"rows: {log.n_rows}",
        f"diverged: {log.diverged}",
    ]
    if log.diverged:
        lines.append(f"diverged_reason: {log.reason}")
        lines.append(f"diverged_at_s: {log.t[-1]:.3f}")
    err = _tracking_errors(log, cfg)
    lines += [f"{key}: {val:.6g}" for key, val in err.items()]
    lines += [
        f"final_position_m: ({log.p[-1, 0]:.4f}, {log.p[-1, 1]:.4f}, {log.p[-1, 2]:.4f})",
        f"height_range_m: [{log.p[:, 2].min():.4f}, {log.p[:, 2].max():.4f}]",
        f"max_tilt_rad: {np.abs(log.theta[:, :2]).max():.4f}",
        f"qp_solves: {log.tick_t.shape[0]}",
        f"qp_failures: {log.qp_failures}",
        f"qp_ms_mean: {log.tick_ms.mean():.3f}",
        f"qp_ms_p95: {np.percentile(log.tick_ms, 95):.3f}",
        f"disturbance_events: {len(cfg.disturbances)}",
    ]
    for i, d in enumerate(cfg.disturbances, start=1):
        peak = ", ".join(f"{x:g}" for x in d.peak)
        lines.append(
            f"disturbance{i}: t = {d.onset:g} s, window = {d.window:g} s, "
            f"peak = ({peak}) N"
        )
    return lines


def write_summary(log: SimLog, cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(summary_lines(log, cfg)) + "\n")


def write_run_outputs(log: SimLog, cfg: ScenarioConfig, out_dir: str) -> tuple[str, str]:
    """Write ``log.csv`` and ``summary.txt`` under ``out_dir``; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "log.csv")
    summary_path = os.path.join(out_dir, "summary.txt")
    write_log_csv(log, csv_path)
    write_summary(log, cfg, summary_path)
    return csv_path, summary_path
