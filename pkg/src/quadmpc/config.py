"""Scenario configuration files: flat ``section.key = value`` text.

Every key has a default baked into :class:`~quadmpc.sim.ScenarioConfig`, so an
empty file (or no file at all) runs the straight 0.5 m/s trot.  ``#`` and
``;`` start comments.  The same ``key=value`` syntax is accepted from the
command line via repeated ``--set`` flags, which are applied after the file.

Disturbances are numbered groups::

    disturbance1.onset  = 0.5
    disturbance1.window = 0.4
    disturbance1.peak_x = 4.0
"""

from __future__ import annotations

import re

import numpy as np

from .reference import Command
from .sim import DisturbanceSpec, ScenarioConfig
from .srb import RobotParams
from .mpc import Weights


class ConfigError(ValueError):
    """Bad configuration input; message carries file, line and field."""


_LINE_RE = re.compile(r"^\s*([A-Za-z0-9_.]+)\s*=\s*(.*?)\s*$")
_DISTURBANCE_RE = re.compile(r"^disturbance(\d+)$")

# every legal key, with the type its value is parsed as
_FLOAT = "float"
_INT = "int"
_STR = "str"
_KNOWN_KEYS = {
    "command.vx": _FLOAT,
    "command.vy": _FLOAT,
    "command.vz": _FLOAT,
    "command.a_d": _FLOAT,
    "command.psi_d": _FLOAT,
    "command.omega_psi_d": _FLOAT,
    "command.omega_dot_psi_d": _FLOAT,
    "command.z0": _FLOAT,
    "gait.name": _STR,
    "weights.q_p": _FLOAT,
    "weights.q_v": _FLOAT,
    "weights.q_theta": _FLOAT,
    "weights.q_w": _FLOAT,
    "weights.k_u": _FLOAT,
    "mpc.horizon": _INT,
    "mpc.dt": _FLOAT,
    "mpc.fz_lb": _FLOAT,
    "mpc.fz_ub": _FLOAT,
    "sim.dt": _FLOAT,
    "sim.duration": _FLOAT,
    "sim.settle": _FLOAT,
    "robot.mass": _FLOAT,
    "robot.gravity": _FLOAT,
    "robot.mu": _FLOAT,
    "robot.ixx": _FLOAT,
    "robot.iyy": _FLOAT,
    "robot.izz": _FLOAT,
    "robot.body_length": _FLOAT,
    "robot.body_width": _FLOAT,
    "robot.body_height": _FLOAT,
    "robot.link_length": _FLOAT,
    "robot.nominal_height": _FLOAT,
    "output.dir": _STR,
}
_DISTURBANCE_FIELDS = {"onset": _FLOAT, "window": _FLOAT,
                       "peak_x": _FLOAT, "peak_y": _FLOAT, "peak_z": _FLOAT}


def _strip_comment(line: str) -> str:
    for mark in ("#", ";"):
        pos = line.find(mark)
        if pos >= 0:
            line = line[:pos]
    return line


def _check_key(key: str, where: str) -> None:
    if key in _KNOWN_KEYS:
        return
    section, _, field_name = key.partition(".")
    m = _DISTURBANCE_RE.match(section)
    if m and field_name in _DISTURBANCE_FIELDS:
        return
    raise ConfigError(f"{where}: unknown key {key!r}")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse config text into a flat key -> raw-value mapping."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None or not m.group(2):
            raise ConfigError(
                f"{source}:{lineno}: expected 'section.key = value', got {raw.strip()!r}"
            )
        key = m.group(1)
        _check_key(key, f"{source}:{lineno}")
        values[key] = m.group(2)
    return values


def parse_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config_text(text, source=path)


def apply_overrides(values: dict[str, str], overrides: list[str]) -> dict[str, str]:
    """Apply ``--set key=value`` pairs on top of file values (in order)."""
    out = dict(values)
    for i, item in enumerate(overrides, start=1):
        key, sep, val = item.partition("=")
        key, val = key.strip(), val.strip()
        where = f"--set #{i}"
        if not sep or not key or not val:
            raise ConfigError(f"{where}: expected key=value, got {item!r}")
        _check_key(key, where)
        out[key] = val
    return out


def _convert(key: str, raw: str):
    kind = _KNOWN_KEYS.get(key)
    if kind is None:  # disturbance field
        kind = _DISTURBANCE_FIELDS[key.partition(".")[2]]
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            val = int(raw)
            return val
    except ValueError as exc:
        raise ConfigError(f"field {key!r}: {raw!r} is not a {kind}") from exc
    return raw


def _collect_disturbances(values: dict[str, str]) -> list[DisturbanceSpec]:
    groups: dict[int, dict[str, float]] = {}
    for key, raw in values.items():
        section, _, field_name = key.partition(".")
        m = _DISTURBANCE_RE.match(section)
        if not m:
            continue
        groups.setdefault(int(m.group(1)), {})[field_name] = _convert(key, raw)
    specs = []
    for idx in sorted(groups):
        g = groups[idx]
        if "onset" not in g:
            raise ConfigError(f"disturbance{idx}: missing required field 'onset'")
        peak = np.array([g.get("peak_x", 0.0), g.get("peak_y", 0.0),
                         g.get("peak_z", 0.0)])
        kwargs = {"onset": g["onset"], "peak": peak}
        if "window" in g:
            kwargs["window"] = g["window"]
        try:
            specs.append(DisturbanceSpec(**kwargs))
        except ValueError as exc:
            raise ConfigError(f"disturbance{idx}: {exc}") from exc
    return specs


def build_scenario(values: dict[str, str]) -> ScenarioConfig:
    """Turn parsed key/value pairs into a validated :class:`ScenarioConfig`."""
    get = lambda key, default: (
        _convert(key, values[key]) if key in values else default
    )

    robot_kwargs = {}
    for key, attr in (("robot.mass", "mass"), ("robot.gravity", "gravity"),
                      ("robot.mu", "mu"), ("robot.body_length", "body_length"),
                      ("robot.body_width", "body_width"),
                      ("robot.body_height", "body_height"),
                      ("robot.link_length", "link_length"),
                      ("robot.nominal_height", "nominal_height")):
        if key in values:
            robot_kwargs[attr] = _convert(key, values[key])
    inertia = np.diag([
        get("robot.ixx", 0.026), get("robot.iyy", 0.112), get("robot.izz", 0.075),
    ])
    try:
        robot = RobotParams(inertia_body=inertia, **robot_kwargs)
        command = Command(
            v_d=np.array([get("command.vx", 0.5), get("command.vy", 0.0),
                          get("command.vz", 0.0)]),
            a_d=get("command.a_d", 0.5),
            psi_d=get("command.psi_d", 0.0),
            omega_psi_d=get("command.omega_psi_d", 0.5),
            omega_dot_psi_d=get("command.omega_dot_psi_d", 0.0),
            z0=get("command.z0", robot.nominal_height),
        )
        weights = Weights(
            q_p=np.full(3, get("weights.q_p", 1e6)),
            q_v=np.full(3, get("weights.q_v", 1e6)),
            q_theta=np.full(3, get("weights.q_theta", 1e6)),
            q_w=np.full(3, get("weights.q_w", 1e6)),
            k_u=get("weights.k_u", 10.0),
        )
        cfg = ScenarioConfig(
            robot=robot,
            gait=get("gait.name", "trot"),
            command=command,
            weights=weights,
            horizon=get("mpc.horizon", 15),
            dt_mpc=get("mpc.dt", 0.02),
            dt_sim=get("sim.dt", 0.001),
            duration=get("sim.duration", 5.0),
            settle=get("sim.settle", 0.3),
            fz_lb=get("mpc.fz_lb", 0.0),
            fz_ub=get("mpc.fz_ub", None),
            disturbances=_collect_disturbances(values),
            output=get("output.dir", "out"),
        )
        cfg.validate()
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_scenario(path: str | None, overrides: list[str] | None = None) -> ScenarioConfig:
    """File (optional) + overrides -> validated scenario."""
    values = parse_config_file(path) if path is not None else {}
    if overrides:
        values = apply_overrides(values, overrides)
    return build_scenario(values)
