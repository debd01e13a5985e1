"""Bridge-construction mission as an explicit state machine.

Each round picks a block up at a fixed station, delivers it in the
contracted form and pushes it against the end of the bridge. Pickup and
assembly are done expanded, except that the last block is assembled
contracted. The boat contracts again before leaving the pickup dock and at
the end of every retreat.
"""
import enum
from dataclasses import dataclass, field, replace
from math import atan2, cos, pi, radians, sin

import numpy as np

from .config import VesselConfig, get, read_kv
from .control import NmpcConfig, NmpcController
from .control.reference import hold_reference
from .errors import ConfigError, NumericalError, PlanningError
from .experiments import DockingPolicy, dock_attempt, goto
from .sim.docking import DockPort
from .sim.engine import Simulator, drive
from .vessel.state import L_MAX, wrap_angle


class Phase(enum.Enum):
    Init = "Init"
    MoveToPickupPrep = "MoveToPickupPrep"
    ExpandAndMagnetOn = "ExpandAndMagnetOn"
    DockPickup = "DockPickup"
    ReturnToPrep = "ReturnToPrep"
    SpinToFaceBridge = "SpinToFaceBridge"
    Deliver = "Deliver"
    ExpandForAssembly = "ExpandForAssembly"
    DockAssembly = "DockAssembly"
    MagnetOff = "MagnetOff"
    Retreat = "Retreat"
    Done = "Done"


P = Phase
# (phase, outcome) -> next phase; outcome is "ok", "fail", "last" or "more"
TRANSITIONS = {
    (P.Init, "more"): P.MoveToPickupPrep,
    (P.Init, "last"): P.Done,  # nothing to build
    (P.MoveToPickupPrep, "ok"): P.ExpandAndMagnetOn,
    (P.ExpandAndMagnetOn, "ok"): P.DockPickup,
    (P.DockPickup, "ok"): P.ReturnToPrep,
    (P.DockPickup, "fail"): P.MoveToPickupPrep,
    (P.ReturnToPrep, "ok"): P.SpinToFaceBridge,
    (P.SpinToFaceBridge, "ok"): P.Deliver,
    (P.Deliver, "more"): P.ExpandForAssembly,
    (P.Deliver, "last"): P.DockAssembly,
    (P.ExpandForAssembly, "ok"): P.DockAssembly,
    (P.DockAssembly, "ok"): P.MagnetOff,
    (P.DockAssembly, "fail"): P.DockAssembly,
    (P.MagnetOff, "ok"): P.Retreat,
    (P.Retreat, "more"): P.MoveToPickupPrep,
    (P.Retreat, "last"): P.Done,
}
# phases in which the hull may be expanded (contraction finishes at the end of Retreat)
EXPANDED_PHASES = frozenset({P.ExpandAndMagnetOn, P.DockPickup, P.ExpandForAssembly,
                             P.DockAssembly, P.MagnetOff, P.Retreat})


def next_phase(phase, outcome):
    try:
        return TRANSITIONS[(phase, outcome)]
    except KeyError:
        raise ValueError(f"no transition from {phase.name} on {outcome!r}") from None


@dataclass(frozen=True)
class MissionPlan:
    pickup: tuple
    pickup_facing: float
    targets: tuple
    assembly_facing: float
    block_width: float = 0.4
    standoff: float = 0.4
    payload_mass: float = 2.0
    retry_cap: int = 5

    def __post_init__(self):
        t = np.asarray(self.targets, dtype=float).reshape(-1, 2)
        for i in range(len(t)):
            for j in range(i):
                if np.hypot(*(t[i] - t[j])) < self.block_width - 1e-9:
                    raise PlanningError(f"block slots {j} and {i} overlap "
                                        f"(spacing below block width {self.block_width})")
        if self.retry_cap < 0:
            raise PlanningError("retry cap must be nonnegative")

    @property
    def blocks(self):
        return len(self.targets)

    def pickup_port(self):
        f = self.pickup_facing
        h = self.block_width / 2
        pos = (self.pickup[0] - h * cos(f), self.pickup[1] - h * sin(f))
        return DockPort(position=pos, facing=f, name="pickup")

    def assembly_port(self, i):
        f = self.assembly_facing
        h = self.block_width / 2
        x, y = self.targets[i]
        return DockPort(position=(x - h * cos(f), y - h * sin(f)), facing=f, name=f"slot{i}")


def plan_bridge(blocks=6, start=(2.0, 0.0), block_width=0.4, axis=0.0, pickup=(3.0, 2.5),
                pickup_facing=pi / 2, area=((-1.0, 7.0), (-3.0, 3.0)), targets=None, **kw):
    """Bridge slots laid end to end from ``start`` along heading ``axis``.

    Blocks are pushed onto the bridge end against the build direction. Raises
    PlanningError when a slot leaves ``area`` or slots overlap.
    """
    if blocks < 0:
        raise PlanningError("block count must be nonnegative")
    if targets is None:
        d = np.array([cos(axis), sin(axis)])
        targets = [tuple(np.asarray(start) + i * block_width * d) for i in range(blocks)]
    (x0, x1), (y0, y1) = area
    for x, y in list(targets) + [tuple(pickup)]:
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise PlanningError(f"point ({x:.3f}, {y:.3f}) lies outside the water area")
    return MissionPlan(tuple(pickup), pickup_facing, tuple(tuple(map(float, t)) for t in targets),
                       wrap_angle(axis + pi), block_width, **kw)


def plan_from_kv(data):
    """Plan from a ``[mission]`` section (blocks, block_width, start, axis_deg, pickup,
    pickup_facing_deg, standoff, payload_mass, retry_cap)."""
    kw = {}
    for k in ("standoff", "payload_mass"):
        v = get(data, f"mission.{k}")
        if v is not None:
            kw[k] = v
    cap = get(data, "mission.retry_cap", kind=int)
    if cap is not None:
        kw["retry_cap"] = cap
    start = get(data, "mission.start", kind="vector")
    pickup = get(data, "mission.pickup", kind="vector")
    try:
        return plan_bridge(
            blocks=get(data, "mission.blocks", 6, kind=int),
            start=tuple(start) if start is not None else (2.0, 0.0),
            block_width=get(data, "mission.block_width", 0.4),
            axis=radians(get(data, "mission.axis_deg", 0.0)),
            pickup=tuple(pickup) if pickup is not None else (3.0, 2.5),
            pickup_facing=radians(get(data, "mission.pickup_facing_deg", 90.0)),
            **kw)
    except PlanningError as exc:
        raise ConfigError(str(exc), key="mission") from exc


@dataclass
class MissionState:
    phase: Phase = Phase.Init
    blocks_placed: int = 0
    carrying: bool = False
    magnet: bool = False
    retries: dict = field(default_factory=dict)
    aborted: bool = False
    failure: str = None

    @property
    def finished(self):
        return self.phase is Phase.Done or self.aborted


class MissionRunner:
    """Binds a plan to a simulator and an NMPC controller and executes phases."""

    def __init__(self, plan, vessel=None, disturbance=None, q0=None, policy=None,
                 transit_speed=0.3, time_limit=3000.0, metadata=None):
        self.plan = plan
        self.vessel = vessel or VesselConfig()
        self.policy = policy or DockingPolicy()
        self.transit_speed = transit_speed
        self.time_limit = time_limit
        if q0 is None:
            prep = plan.pickup_port().docked_pose(0.0, self.vessel.connector_base, 1.5)
            q0 = (prep[0], prep[1], prep[2], 0.0, 0.0, 0.0)
        self.sim = Simulator(self.vessel, q0, 0.0, disturbance, payload_mass=plan.payload_mass,
                             metadata=metadata)
        self.ctl = NmpcController(NmpcConfig.with_f_max(self.vessel.f_max))

    def deadline(self, s):
        return s.t >= self.time_limit

    def hold(self, duration):
        self.ctl.set_reference(hold_reference(self.sim.q[:3].copy(), duration, t0=self.sim.t))
        drive(self.sim, self.ctl, self.sim.t + duration, stop=self.deadline, diagnostics=False)

    def change_form(self, expansion):
        """Hold station while the mechanism moves to ``expansion``."""
        sim = self.sim
        sim.set_expansion(expansion)
        pose = sim.q[:3].copy()
        self.ctl.set_reference(hold_reference(pose, 60.0, t0=sim.t))
        drive(sim, self.ctl, sim.t + 60.0,
              stop=lambda s: s.expansion_settled() or self.deadline(s), diagnostics=False)

    def prep_pose(self, port, expansion, standoff=None):
        st = self.policy.standoff if standoff is None else standoff
        return port.docked_pose(expansion, self.vessel.connector_base, st)

    def goto(self, pose, speed):
        return goto(self.sim, self.ctl, pose, speed, settle=self.policy.settle, stop=self.deadline)

    # phase bodies return "ok"/"fail"/"more"/"last"

    def run_phase(self, ms):
        p, sim, plan = ms.phase, self.sim, self.plan
        if p is P.Init:
            return "more" if plan.blocks > 0 else "last"
        if p is P.MoveToPickupPrep:
            self.goto(self.prep_pose(plan.pickup_port(), 0.0), self.transit_speed)
            return "ok"
        if p is P.ExpandAndMagnetOn:
            self.change_form(L_MAX)
            ms.magnet = True
            return "ok"
        if p is P.DockPickup:
            ok = dock_attempt(sim, self.ctl, plan.pickup_port(), self.policy,
                              deadline=self.time_limit)
            if ok:
                ms.carrying = True
                sim.set_carrying(True)
            self.change_form(0.0)
            return "ok" if ok else "fail"
        if p is P.ReturnToPrep:
            self.goto(self.prep_pose(plan.pickup_port(), 0.0), self.policy.transit_speed)
            return "ok"
        if p is P.SpinToFaceBridge:
            target = self.prep_pose(plan.assembly_port(ms.blocks_placed), 0.0)
            bearing = atan2(target[1] - sim.q[1], target[0] - sim.q[0])
            self.goto((sim.q[0], sim.q[1], bearing), self.transit_speed)
            return "ok"
        if p is P.Deliver:
            last = ms.blocks_placed + 1 >= plan.blocks
            l_next = 0.0 if last else L_MAX
            # stand off far enough that expanding does not push the block into the bridge
            standoff = self.policy.standoff + (l_next - 0.0)
            self.goto(self.prep_pose(plan.assembly_port(ms.blocks_placed), 0.0, standoff),
                      self.transit_speed)
            return "last" if last else "more"
        if p is P.ExpandForAssembly:
            self.change_form(L_MAX)
            return "ok"
        if p is P.DockAssembly:
            ok = dock_attempt(sim, self.ctl, plan.assembly_port(ms.blocks_placed), self.policy,
                              deadline=self.time_limit)
            return "ok" if ok else "fail"
        if p is P.MagnetOff:
            ms.magnet = False
            ms.carrying = False
            sim.set_carrying(False)
            ms.blocks_placed += 1
            sim.log.event(sim.t, "block_placed", index=ms.blocks_placed - 1,
                          target=list(plan.targets[ms.blocks_placed - 1]))
            self.hold(1.0)
            return "ok"
        if p is P.Retreat:
            port = plan.assembly_port(ms.blocks_placed - 1)
            self.goto(self.prep_pose(port, sim.expansion), self.policy.transit_speed)
            self.change_form(0.0)
            return "more" if ms.blocks_placed < plan.blocks else "last"
        raise ValueError(f"phase {p} has no body")


def mission_step(ms, runner):
    """Execute the current phase and return the next MissionState."""
    if ms.finished:
        return ms
    sim = runner.sim
    ms = replace(ms, retries=dict(ms.retries))
    sim.log.event(sim.t, "phase", phase=ms.phase.value, blocks=ms.blocks_placed)
    try:
        outcome = runner.run_phase(ms)
    except NumericalError as exc:
        ms.aborted = True
        ms.failure = f"{ms.phase.value}: {exc}"
        sim.log.event(sim.t, "mission_abort", phase=ms.phase.value, reason=str(exc))
        return ms
    nxt = next_phase(ms.phase, outcome)
    if outcome == "ok":
        ms.retries.pop(ms.phase.value, None)  # the cap counts consecutive failures of one dock
    if outcome == "fail":
        key = ms.phase.value
        ms.retries[key] = ms.retries.get(key, 0) + 1
        sim.log.event(sim.t, "retry", phase=key, count=ms.retries[key])
        if ms.retries[key] > runner.plan.retry_cap:
            ms.aborted = True
            ms.failure = f"{key}: retry cap {runner.plan.retry_cap} exceeded"
    if not ms.aborted and sim.t >= runner.time_limit:
        ms.aborted = True
        ms.failure = f"{ms.phase.value}: mission time limit {runner.time_limit} s reached"
    if ms.aborted:
        sim.log.event(sim.t, "mission_abort", phase=ms.phase.value, reason=ms.failure)
        return ms
    ms.phase = nxt
    if nxt is Phase.Done:
        sim.log.event(sim.t, "phase", phase=Phase.Done.value, blocks=ms.blocks_placed)
        sim.log.event(sim.t, "mission_done", blocks=ms.blocks_placed)
    return ms


def run_mission(plan, vessel=None, disturbance=None, seed=0, **kw):
    """Run the mission to completion or abort; returns ``(state, log)``."""
    if disturbance is not None:
        disturbance = replace(disturbance, seed=seed)
    runner = MissionRunner(plan, vessel, disturbance, metadata={"seed": seed, "blocks": plan.blocks},
                           **kw)
    ms = MissionState()
    while not ms.finished:
        ms = mission_step(ms, runner)
    return ms, runner.sim.close()


def mission_report(log):
    """Blocks placed, per-phase durations, retries and success from a mission log."""
    events = log.events if hasattr(log, "events") else log["events"]
    t = np.asarray(log.t) if hasattr(log, "t") else None
    t_end = float(t[-1]) if t is not None and len(t) else max((e["t"] for e in events), default=0.0)
    t_start = float(t[0]) if t is not None and len(t) else 0.0
    phases = [e for e in events if e["kind"] == "phase"]
    durations = {}
    for a, b in zip(phases, phases[1:] + [{"t": t_end}]):
        durations[a["phase"]] = durations.get(a["phase"], 0.0) + (b["t"] - a["t"])
    aborts = [e for e in events if e["kind"] == "mission_abort"]
    retries = {}
    for e in events:
        if e["kind"] == "retry":
            retries[e["phase"]] = retries.get(e["phase"], 0) + 1
    return {
        "success": any(e["kind"] == "mission_done" for e in events) and not aborts,
        "blocks_placed": sum(1 for e in events if e["kind"] == "block_placed"),
        "durations": durations,
        "total_time": t_end - t_start,
        "retries": retries,
        "failed_phase": aborts[0]["phase"] if aborts else None,
        "failure": aborts[0]["reason"] if aborts else None,
    }
