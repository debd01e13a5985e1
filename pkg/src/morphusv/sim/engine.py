"""Deterministic fixed-step simulation engine and its log format."""
import csv
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .. import kernels
from ..config import VesselConfig, get, read_kv, vessel_from_kv
from ..errors import ConfigError, NumericalError, RangeError
from ..vessel.dynamics import STATE_NAMES
from ..vessel.params import eval_params, thruster_arm
from ..vessel.state import L_MAX, wrap_angle
from .docking import CaptureMonitor, DockPort
from .waves import WaveDisturbance, wave_force

COLUMNS = ("t", "x", "y", "psi", "u", "v", "r", "l", "f1", "f2", "f3", "f4",
           "Fx", "Fy", "Mz", "dx", "dy", "dmz")


class SimLog:
    """Per-step samples plus events and metadata.

    Row ``k`` holds the state at ``t_k`` together with the expansion, the
    (clamped) thruster command, the total applied force ``E u + d`` and the
    disturbance ``d`` that act over ``[t_k, t_k + dt)``.
    """

    def __init__(self, dt, metadata=None):
        self.dt = float(dt)
        self.rows = []
        self.events = []
        self.metadata = dict(metadata or {})

    def append(self, t, q, expansion, u, force, dist):
        self.rows.append((t, *q, expansion, *u, *force, *dist))

    def event(self, t, kind, **data):
        self.events.append({"t": float(t), "kind": kind, **data})

    def __len__(self):
        return len(self.rows)

    @property
    def data(self):
        return np.array(self.rows, dtype=float).reshape(-1, len(COLUMNS))

    def column(self, *names):
        d = self.data
        idx = [COLUMNS.index(n) for n in names]
        return d[:, idx[0]] if len(idx) == 1 else d[:, idx]

    @property
    def t(self):
        return self.data[:, 0]

    @property
    def q(self):
        return self.data[:, 1:7]

    @property
    def expansion(self):
        return self.data[:, 7]

    @property
    def u(self):
        return self.data[:, 8:12]

    @property
    def force(self):
        return self.data[:, 12:15]

    @property
    def disturbance(self):
        return self.data[:, 15:18]

    def events_of(self, kind):
        return [e for e in self.events if e["kind"] == kind]

    def check(self):
        t = self.t
        if len(t) > 1:
            gaps = np.diff(t)
            if np.any(gaps <= 0) or np.max(np.abs(gaps - self.dt)) > 1e-9:
                raise ValueError("log times must be strictly increasing with fixed dt")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for row in self.rows:
                w.writerow([repr(float(x)) for x in row])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"dt": self.dt, "metadata": self.metadata, "events": self.events},
                      fh, indent=1, sort_keys=True, default=_json_default)

    def save(self, stem):
        """Write ``stem.csv`` and ``stem.json``; returns both paths."""
        self.to_csv(stem + ".csv")
        self.to_json(stem + ".json")
        return stem + ".csv", stem + ".json"

    @classmethod
    def load(cls, stem):
        with open(stem + ".json") as fh:
            meta = json.load(fh)
        log = cls(meta["dt"], meta.get("metadata"))
        log.events = meta.get("events", [])
        with open(stem + ".csv", newline="") as fh:
            r = csv.reader(fh)
            header = tuple(next(r))
            if header != COLUMNS:
                raise ValueError(f"unexpected log columns {header}")
            log.rows = [tuple(float(x) for x in row) for row in r]
        return log


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def step(q, u_command, disturbance_force, dt, params, arm, f_max):
    """One RK4 step with ``F = E u + d``, the command clamped to ``[-f_max, f_max]``.

    Returns ``(q_next, u_applied, F_applied, clamped)``; raises NumericalError
    if the new state is not finite.
    """
    u = np.asarray(u_command, dtype=float)
    if not np.all(np.isfinite(u)):
        raise NumericalError(f"non-finite thruster command {u}")
    u_c = np.clip(u, -f_max, f_max)
    clamped = bool(np.any(u_c != u))
    d = np.asarray(disturbance_force, dtype=float)
    q = np.asarray(q, dtype=float)
    if dt == 0:
        return q.copy(), u_c, _allocate(u_c, arm) + d, clamped
    q_next = kernels.rk4_step(q, u_c, params, arm, dt, d)
    bad = ~np.isfinite(q_next)
    if bad.any():
        names = ", ".join(STATE_NAMES[i] for i in np.flatnonzero(bad))
        raise NumericalError(f"non-finite state in component(s): {names}")
    q_next[2] = wrap_angle(q_next[2])
    force = _allocate(u_c, arm) + d
    return q_next, u_c, force, clamped


def _allocate(u, arm):
    # E u without building E
    return np.array([u[1] + u[3], u[0] + u[2], arm * (u[2] + u[3] - u[0] - u[1])])


class Simulator:
    """Stateful stepping of one vessel with logging.

    The expansion moves toward ``target_expansion`` at no more than
    ``vessel.expansion_rate``; the hydrodynamic parameters used on step ``k``
    are evaluated at the expansion logged on step ``k``. While ``carrying`` is
    set the payload mass is added to the mass terms.
    """

    def __init__(self, vessel=None, q0=None, expansion=0.0, disturbance=None, dt=None,
                 payload_mass=0.0, payload_radius=None, t0=0.0, metadata=None):
        self.vessel = vessel or VesselConfig()
        self.dt = float(dt or self.vessel.dt)
        if not 0.0 <= expansion <= L_MAX:
            raise RangeError(f"expansion {expansion} outside [0, {L_MAX}]")
        self.q = np.zeros(6) if q0 is None else np.array(q0, dtype=float)
        self.expansion = float(expansion)
        self.target_expansion = float(expansion)
        self.disturbance = disturbance
        self.payload_mass = float(payload_mass)
        self.payload_radius = payload_radius
        self.carrying = False
        self.t0 = float(t0)
        self.k = 0
        self.last_u = np.zeros(4)
        self.log = SimLog(self.dt, metadata)
        self._pcache = {}

    @property
    def t(self):
        return self.t0 + self.k * self.dt

    def params(self):
        key = (self.expansion, self.carrying)
        p = self._pcache.get(key)
        if p is None:
            p = eval_params(self.vessel.poly, self.expansion)
            if self.carrying and self.payload_mass > 0:
                r = self.payload_radius
                if r is None:
                    r = self.vessel.connector_base + self.expansion + 0.2
                p = p.with_payload(self.payload_mass, r)
            if len(self._pcache) > 512:
                self._pcache.clear()
            self._pcache[key] = p
        return p

    def arm(self):
        return thruster_arm(self.expansion)

    def set_expansion(self, target):
        if not 0.0 <= target <= L_MAX:
            raise RangeError(f"expansion target {target} outside [0, {L_MAX}]")
        if target != self.target_expansion:
            self.log.event(self.t, "expansion_command", target=float(target), current=self.expansion)
        self.target_expansion = float(target)

    def set_carrying(self, flag):
        if bool(flag) != self.carrying:
            self.log.event(self.t, "payload", carrying=bool(flag))
        self.carrying = bool(flag)

    def expansion_settled(self):
        return self.expansion == self.target_expansion

    def disturbance_at(self, t):
        if self.disturbance is None:
            return np.zeros(3)
        return wave_force(self.disturbance, t)

    def step(self, u_command):
        t = self.t
        d = self.disturbance_at(t)
        p = self.params().as_array()
        q_next, u, force, clamped = step(self.q, u_command, d, self.dt, p, self.arm(),
                                         self.vessel.f_max)
        self.log.append(t, self.q, self.expansion, u, force, d)
        if clamped:
            self.log.event(t, "clamp", command=[float(x) for x in u_command])
        self.q = q_next
        self.last_u = u
        self.k += 1
        if self.expansion != self.target_expansion:
            dl = self.vessel.expansion_rate * self.dt
            gap = self.target_expansion - self.expansion
            if abs(gap) <= dl + 1e-15:
                self.expansion = self.target_expansion
                self.log.event(self.t, "expansion_done", expansion=self.expansion)
            else:
                self.expansion += dl if gap > 0 else -dl
        return self.q

    def close(self):
        """Append the terminal sample with the last command held."""
        t = self.t
        d = self.disturbance_at(t)
        force = _allocate(self.last_u, self.arm()) + d
        self.log.append(t, self.q, self.expansion, self.last_u, force, d)
        return self.log


def drive(sim, controller, until, period=0.1, stop=None, diagnostics=True):
    """Run ``controller`` at ``period`` with a zero-order hold until ``until``.

    ``stop(sim)`` is checked after every simulation step; returns True if it
    fired. Controller exceptions are logged and the last command is held.
    """
    sub = int(round(period / sim.dt))
    if sub < 1 or abs(sub * sim.dt - period) > 1e-9:
        raise ConfigError(f"control period {period} is not a multiple of dt {sim.dt}",
                          key="scenario.control_dt")
    u = sim.last_u.copy()
    while sim.t < until - 1e-9:
        try:
            u, info = controller.command(sim.t, sim.q, sim.expansion, sim.params(), sim.arm())
            if diagnostics and info and "cost" in info:
                sim.log.event(sim.t, "solver", cost=info["cost"], iterations=info["iterations"],
                              stationarity=info["stationarity"], status=info["status"])
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            sim.log.event(sim.t, "controller_error", error=str(exc))
        for _ in range(sub):
            sim.step(u)
            if stop is not None and stop(sim):
                return True
    return False


class ZeroController:
    name = "none"

    def command(self, t, q, expansion, params, arm):
        return np.zeros(4), {}


class ConstantController:
    name = "constant"

    def __init__(self, u):
        self.u = np.asarray(u, dtype=float)

    def command(self, t, q, expansion, params, arm):
        return self.u.copy(), {}


@dataclass
class ScenarioConfig:
    """One closed-loop run.

    ``reference`` is a ReferenceTrajectory or a dict with ``shape``, ``size``
    and ``speed`` (and optional ``origin``). The disturbance seed is taken from
    ``seed``. ``expansion_schedule`` lists ``(time, target)`` pairs.
    """

    duration: float
    vessel: VesselConfig = field(default_factory=VesselConfig)
    q0: tuple = (0.0,) * 6
    expansion: float = 0.0
    controller: str = "none"
    constant_u: tuple = (0.0,) * 4
    reference: object = None
    disturbance: WaveDisturbance = None
    ports: tuple = ()
    expansion_schedule: tuple = ()
    seed: int = 0
    control_dt: float = 0.1
    diagnostics: bool = True

    def __post_init__(self):
        validate_scenario(self)


CONTROLLERS = ("none", "constant", "nmpc", "pid")


def validate_scenario(cfg):
    if not cfg.duration > 0:
        raise ConfigError("must be positive", key="scenario.duration")
    if cfg.controller not in CONTROLLERS:
        raise ConfigError(f"unknown controller {cfg.controller!r}", key="scenario.controller")
    if cfg.controller in ("nmpc", "pid") and cfg.reference is None:
        raise ConfigError("a reference is required for closed-loop control", key="reference")
    if not 0.0 <= cfg.expansion <= L_MAX:
        raise ConfigError(f"outside [0, {L_MAX}]", key="scenario.expansion")
    for t, l in cfg.expansion_schedule:
        if not 0.0 <= l <= L_MAX:
            raise ConfigError(f"target {l} outside [0, {L_MAX}]", key="scenario.expansion_schedule")
    if len(cfg.q0) != 6:
        raise ConfigError("initial state needs six values", key="scenario.q0")


def make_reference(spec, dt=0.1):
    from ..control.reference import ReferenceTrajectory, build_reference

    if spec is None or isinstance(spec, ReferenceTrajectory):
        return spec
    return build_reference(spec["shape"], float(spec["size"]), float(spec["speed"]),
                           tuple(spec.get("origin", (0.0, 0.0))), dt)


def make_controller(cfg, reference):
    from ..control import make_controller as _make

    if cfg.controller == "none":
        return ZeroController()
    if cfg.controller == "constant":
        return ConstantController(cfg.constant_u)
    return _make(cfg.controller, reference, f_max=cfg.vessel.f_max)


def run_scenario(cfg):
    """Closed-loop run of a scenario; returns the SimLog.

    Capture events are raised per port (once each). A numerical failure ends
    the run with an ``abort`` event carrying the last finite state.
    """
    ref = make_reference(cfg.reference, cfg.control_dt)
    dist = replace(cfg.disturbance, seed=cfg.seed) if cfg.disturbance is not None else None
    meta = {"controller": cfg.controller, "seed": cfg.seed, "duration": cfg.duration,
            "expansion": cfg.expansion, "backend": kernels.BACKEND}
    sim = Simulator(cfg.vessel, cfg.q0, cfg.expansion, dist, metadata=meta)
    ctl = make_controller(cfg, ref)
    monitors = [CaptureMonitor(p, sim.dt, cfg.vessel.connector_base) for p in cfg.ports]
    captured = [False] * len(monitors)
    schedule = sorted(cfg.expansion_schedule)

    def watch(s):
        for i, m in enumerate(monitors):
            if not captured[i] and m.update(s.q, s.expansion):
                captured[i] = True
                s.log.event(s.t, "capture", port=m.port.name, index=i)
        return False

    checkpoints = sorted({t for t, _ in schedule if 0 < t < cfg.duration} | {cfg.duration})
    try:
        for t_sched, l in schedule:
            if t_sched <= 0:
                sim.set_expansion(l)
        for cp in checkpoints:
            drive(sim, ctl, cp, cfg.control_dt, stop=watch, diagnostics=cfg.diagnostics)
            for t_sched, l in schedule:
                if abs(t_sched - cp) < 1e-9:
                    sim.set_expansion(l)
    except NumericalError as exc:
        sim.log.event(sim.t, "abort", error=str(exc), state=[float(x) for x in sim.q])
        return sim.log
    if ref is not None and cfg.controller in ("nmpc", "pid"):
        from ..control.nmpc import target_reached
        if target_reached(sim.q, ref.final(), 0.05, np.radians(5.0)):
            sim.log.event(sim.t, "converged")
    return sim.close()


def scenario_from_kv(data, base_dir=None):
    """Scenario from parsed key-value sections.

    Sections: ``[scenario]`` (duration, controller, seed, expansion, q0,
    constant_u, control_dt, vessel = path), ``[reference]`` (shape, size,
    speed, origin), ``[waves]`` (frequency, force_amplitude,
    moment_amplitude, noise_std, moment_noise_std) and any number of
    ``[port.NAME]`` sections (position, facing_deg, capture_* overrides).
    """
    from math import radians

    vessel = VesselConfig()
    vpath = data.get("scenario", {}).get("vessel")
    if vpath:
        if base_dir and not os.path.isabs(vpath):
            vpath = os.path.join(base_dir, vpath)
        vessel = vessel_from_kv(read_kv(vpath))
    elif any(s in data for s in ("vessel", "params", "mechanism", "propulsion")):
        vessel = vessel_from_kv(data)
    ref = None
    if "reference" in data:
        ref = {"shape": data["reference"].get("shape", "square"),
               "size": get(data, "reference.size", 2.0),
               "speed": get(data, "reference.speed", 0.2)}
        origin = get(data, "reference.origin", kind="vector")
        if origin is not None:
            ref["origin"] = tuple(origin)
    waves = None
    if "waves" in data:
        waves = WaveDisturbance(**{k: get(data, f"waves.{k}", getattr(WaveDisturbance, k))
                                   for k in ("frequency", "force_amplitude", "moment_amplitude",
                                             "noise_std", "moment_noise_std")})
    ports = []
    for name in sorted(s for s in data if s.startswith("port.")):
        pos = get(data, f"{name}.position", kind="vector")
        if pos is None or len(pos) != 2:
            raise ConfigError("expected two coordinates", key=f"{name}.position")
        kw = {"position": tuple(pos), "facing": radians(get(data, f"{name}.facing_deg", 0.0)),
              "name": name.split(".", 1)[1]}
        for k in ("capture_longitudinal", "capture_lateral", "approach_speed_cap", "dwell"):
            v = get(data, f"{name}.{k}")
            if v is not None:
                kw[k] = v
        yaw = get(data, f"{name}.capture_yaw_deg")
        if yaw is not None:
            kw["capture_yaw"] = radians(yaw)
        try:
            ports.append(DockPort(**kw))
        except ValueError as exc:
            raise ConfigError(str(exc), key=name) from exc
    q0 = get(data, "scenario.q0", kind="vector")
    cu = get(data, "scenario.constant_u", kind="vector")
    sched = get(data, "scenario.expansion_schedule", kind="vector")
    if sched is not None and len(sched) % 2:
        raise ConfigError("expected time, target pairs", key="scenario.expansion_schedule")
    return ScenarioConfig(
        duration=get(data, "scenario.duration", 60.0),
        vessel=vessel,
        q0=tuple(q0) if q0 is not None else (0.0,) * 6,
        expansion=get(data, "scenario.expansion", 0.0),
        controller=data.get("scenario", {}).get("controller", "none"),
        constant_u=tuple(cu) if cu is not None else (0.0,) * 4,
        reference=ref,
        disturbance=waves,
        ports=tuple(ports),
        expansion_schedule=tuple(zip(sched[::2], sched[1::2])) if sched is not None else (),
        seed=int(get(data, "scenario.seed", 0)),
        control_dt=get(data, "scenario.control_dt", 0.1),
    )
