"""Closed-loop experiments: trajectory tracking and docking trials."""
import os
from dataclasses import dataclass, field, replace
from math import radians

import numpy as np

from .config import VesselConfig, get, read_kv
from .control import NmpcConfig, NmpcController, PidController, build_reference, tracking_metrics
from .control.nmpc import target_reached
from .control.reference import hold_reference, move_reference
from .errors import ConfigError, NumericalError
from .sim.docking import CaptureMonitor, DockPort
from .sim.engine import Simulator, drive
from .sim.waves import WaveDisturbance

FORMS = {"contracted": 0.0, "expanded": 0.5}
SHAPE_SIZES = {"circle": 1.5, "square": 2.0, "hourglass": 1.5}
PRESET_DIR = os.path.join(os.path.dirname(__file__), "presets")
WATERS = ("calm", "turbulent")


def form_expansion(form):
    if form not in FORMS:
        raise ConfigError(f"unknown form {form!r}", key="form")
    return FORMS[form]


def load_water(name_or_path):
    """Wave preset by name (``calm``/``turbulent``) or path; returns a WaveDisturbance or None."""
    path = name_or_path
    if name_or_path in WATERS:
        path = os.path.join(PRESET_DIR, f"{name_or_path}.ini")
    data = read_kv(path)
    if "waves" not in data:
        raise ConfigError("missing [waves] section", key="waves")
    kw = {k: get(data, f"waves.{k}", getattr(WaveDisturbance, k))
          for k in ("frequency", "force_amplitude", "moment_amplitude", "noise_std",
                    "moment_noise_std")}
    try:
        wd = WaveDisturbance(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key="waves") from exc
    return None if wd.is_calm else wd


def make_tracker(controller, f_max, reference=None):
    if controller == "nmpc":
        return NmpcController(NmpcConfig.with_f_max(f_max), reference)
    if controller == "pid":
        return PidController(reference=reference, f_max=f_max)
    raise ConfigError(f"unknown controller {controller!r}", key="controller")


# tracking

@dataclass
class TrackingResult:
    shape: str
    controller: str
    form: str
    water: str
    trials: list
    logs: list = field(default_factory=list, repr=False)

    def mean(self, key):
        return float(np.mean([t[key] for t in self.trials]))

    def summary(self):
        return {"shape": self.shape, "controller": self.controller, "form": self.form,
                "water": self.water, "mae_position": self.mean("mae_position"),
                "mae_yaw": self.mean("mae_yaw"), "effort": self.mean("effort"),
                "trials": len(self.trials)}


def tracking_trial(shape, controller, form, seed=0, water=None, vessel=None, speed=0.2,
                   size=None, offset=(0.02, radians(2.0))):
    """One tracking run; the start pose is the reference start perturbed by a seeded offset."""
    vessel = vessel or VesselConfig()
    ref = build_reference(shape, size or SHAPE_SIZES[shape], speed)
    l = form_expansion(form)
    rng = np.random.default_rng(seed)
    q0 = ref.q[0].copy()
    q0[3:] = 0.0
    q0[:2] += rng.uniform(-offset[0], offset[0], 2)
    q0[2] += rng.uniform(-offset[1], offset[1])
    dist = replace(water, seed=seed) if water is not None else None
    sim = Simulator(vessel, q0, l, dist, metadata={"shape": shape, "controller": controller,
                                                   "form": form, "seed": seed})
    ctl = make_tracker(controller, vessel.f_max, ref)
    drive(sim, ctl, ref.t[-1] + 1e-9)
    log = sim.close()
    return tracking_metrics(log, ref), log


def run_tracking(shape, controller, form, water="calm", trials=3, seed=0, vessel=None,
                 keep_logs=False, **kw):
    wd = load_water(water) if isinstance(water, str) else water
    out, logs = [], []
    for i in range(trials):
        m, log = tracking_trial(shape, controller, form, seed + i, wd, vessel, **kw)
        out.append(m)
        if keep_logs:
            logs.append(log)
    name = water if isinstance(water, str) else "custom"
    return TrackingResult(shape, controller, form, name, out, logs)


# docking

def goto(sim, ctl, goal, speed=0.2, yaw_rate=0.5, settle=20.0, tol=(0.05, radians(5.0)),
         stop=None):
    """Follow a straight move to ``goal`` then hold until within tolerance.

    Returns ``"reached"``, ``"stopped"`` (``stop`` fired) or ``"timeout"``.
    """
    ref = move_reference(sim.q[:3], goal, speed, yaw_rate=yaw_rate, t0=sim.t)
    ctl.set_reference(ref)
    if drive(sim, ctl, ref.t[-1], stop=stop, diagnostics=False):
        return "stopped"
    goal = np.asarray(goal, dtype=float)

    def done(s):
        return (stop is not None and stop(s)) or target_reached(s.q, goal, *tol)

    if not drive(sim, ctl, sim.t + settle, stop=done, diagnostics=False):
        return "timeout"
    return "stopped" if stop is not None and stop(sim) else "reached"


@dataclass
class DockingPolicy:
    standoff: float = 0.4
    transit_speed: float = 0.2
    approach_speed: float = 0.05
    hold: float = 8.0
    settle: float = 10.0
    prep_tolerance: tuple = (0.1, radians(10.0))
    # velocity weights (u, v, r) of the NMPC during approach and hold; damping
    # wave-induced surge and sway keeps the speed inside the capture window
    velocity_weight: tuple = (800.0, 800.0, 400.0)

    def controller_config(self, cfg):
        w = tuple(cfg.Q[:3]) + tuple(float(x) for x in self.velocity_weight)
        wn = tuple(cfg.QN[:3]) + tuple(float(x) for x in self.velocity_weight)
        return replace(cfg, Q=w, QN=wn)


def dock_attempt(sim, ctl, port, policy=None, deadline=np.inf):
    """One approach from the preparation pose: straight in at approach speed, then hold.

    Returns True on capture. The capture monitor runs during approach and hold.
    """
    policy = policy or DockingPolicy()
    mon = CaptureMonitor(port, sim.dt, sim.vessel.connector_base)
    prep = port.docked_pose(sim.expansion, sim.vessel.connector_base, policy.standoff)
    final = port.docked_pose(sim.expansion, sim.vessel.connector_base)
    res = goto(sim, ctl, prep, policy.transit_speed, settle=policy.settle,
               tol=policy.prep_tolerance, stop=lambda s: s.t >= deadline)
    if res == "stopped":
        return False
    ref = move_reference(prep, final, policy.approach_speed, t0=sim.t)
    ctl.set_reference(ref)

    def latched(s):
        return mon.update(s.q, s.expansion) or s.t >= deadline

    end = min(ref.t[-1] + policy.hold, deadline)
    transit_cfg = getattr(ctl, "cfg", None)
    if isinstance(transit_cfg, NmpcConfig):
        ctl.cfg = policy.controller_config(transit_cfg)
    try:
        reached = drive(sim, ctl, end, stop=latched, diagnostics=False)
    finally:
        if transit_cfg is not None:
            ctl.cfg = transit_cfg
    if reached and mon.streak >= mon.need:
        sim.log.event(sim.t, "capture", port=port.name)
        return True
    sim.log.event(sim.t, "dock_failed", port=port.name, reason=mon.last_reason or "dwell")
    return False


def docking_trial(form, seed=0, water=None, vessel=None, policy=None, timeout=300.0,
                  start_distance=(2.5, 3.5), start_lateral=1.0, start_heading=radians(45.0)):
    """Dock at a port at the origin facing +x from a seeded start pose R0.

    The boat moves R0 -> R1 (preparation pose, connector ``standoff`` from the
    port) -> R2 (docked) and retries from R1 until captured or ``timeout``.
    Returns a dict with success, time to dock, attempts and the log.
    """
    vessel = vessel or VesselConfig()
    policy = policy or DockingPolicy()
    l = form_expansion(form)
    rng = np.random.default_rng(seed)
    port = DockPort(position=(0.0, 0.0), facing=0.0, name="dock")
    r1 = port.docked_pose(l, vessel.connector_base, policy.standoff)
    q0 = np.zeros(6)
    q0[0] = r1[0] - rng.uniform(*start_distance)
    q0[1] = rng.uniform(-start_lateral, start_lateral)
    q0[2] = rng.uniform(-start_heading, start_heading)
    dist = replace(water, seed=seed) if water is not None else None
    sim = Simulator(vessel, q0, l, dist, metadata={"form": form, "seed": seed})
    ctl = NmpcController(NmpcConfig.with_f_max(vessel.f_max))
    attempts = 0
    success = False
    try:
        while sim.t < timeout and not success:
            attempts += 1
            success = dock_attempt(sim, ctl, port, policy, deadline=timeout)
    except NumericalError as exc:
        sim.log.event(sim.t, "abort", error=str(exc))
    return {"form": form, "seed": seed, "success": success,
            "time": sim.t if success else None, "attempts": attempts, "log": sim.close()}


def docking_monte_carlo(form, water="turbulent", repetitions=20, seed=0, vessel=None,
                        keep_logs=False, **kw):
    """Paired-seed docking trials: trial ``i`` uses seed ``seed + i`` for both forms."""
    wd = load_water(water) if isinstance(water, str) else water
    trials = []
    for i in range(repetitions):
        r = docking_trial(form, seed + i, wd, vessel, **kw)
        if not keep_logs:
            r.pop("log")
        trials.append(r)
    return summarize_docking(trials)


def summarize_docking(trials):
    times = [t["time"] for t in trials if t["success"]]
    n = len(trials)
    return {
        "repetitions": n,
        "success_rate": (sum(t["success"] for t in trials) / n) if n else None,
        "mean_time": float(np.mean(times)) if times else None,
        "times": times,
        "trials": trials,
    }
