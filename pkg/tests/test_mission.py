from bisect import bisect_right

import numpy as np
import pytest

import morphusv.mission as mission
from morphusv.errors import ConfigError, PlanningError
from morphusv.mission import (EXPANDED_PHASES, TRANSITIONS, MissionPlan, MissionRunner,
                              MissionState, Phase, mission_report, mission_step, next_phase,
                              plan_bridge, plan_from_kv, run_mission)

P = Phase


@pytest.fixture(scope="module")
def golden():
    state, log = run_mission(plan_bridge(6), seed=0)
    return state, log


@pytest.fixture(scope="module")
def single():
    return run_mission(plan_bridge(1), seed=0)


# plan

def test_plan_targets_spacing():
    plan = plan_bridge(6, start=(2.0, 0.0), block_width=0.4)
    assert np.allclose([t[0] for t in plan.targets], [2.0, 2.4, 2.8, 3.2, 3.6, 4.0])
    assert all(t[1] == 0.0 for t in plan.targets)


def test_plan_empty_mission_done():
    state, log = run_mission(plan_bridge(0))
    assert state.phase is P.Done and state.blocks_placed == 0
    assert mission_report(log)["success"]


def test_plan_overlap_rejected():
    with pytest.raises(PlanningError):
        plan_bridge(targets=[(2.0, 0.0), (2.3, 0.0)])
    with pytest.raises(PlanningError):
        plan_bridge(3, start=(6.5, 0.0))  # runs out of the water area
    with pytest.raises(PlanningError):
        plan_bridge(-1)


def test_plan_ports_face_the_structure():
    plan = plan_bridge(2)
    port = plan.assembly_port(0)
    # blocks are pushed toward -x onto the bridge end
    assert port.facing == pytest.approx(np.pi)
    assert port.position[0] == pytest.approx(2.0 + 0.2)


def test_plan_from_kv():
    plan = plan_from_kv({"mission": {"blocks": "3", "start": "1, 1", "retry_cap": "2"}})
    assert plan.blocks == 3 and plan.targets[0] == (1.0, 1.0) and plan.retry_cap == 2
    with pytest.raises(ConfigError):
        plan_from_kv({"mission": {"blocks": "30"}})


# transition table

def test_transition_table_total():
    outcomes = {"ok", "fail", "more", "last"}
    for p in Phase:
        moves = {o for (q, o) in TRANSITIONS if q is p}
        assert moves <= outcomes
        assert bool(moves) == (p is not P.Done)
    with pytest.raises(ValueError):
        next_phase(P.Init, "ok")
    with pytest.raises(ValueError):
        next_phase(P.Done, "ok")


def test_done_reachable_from_every_phase():
    succ = {}
    for (p, _), q in TRANSITIONS.items():
        succ.setdefault(p, set()).add(q)
    for start in Phase:
        seen, stack = set(), [start]
        while stack:
            p = stack.pop()
            if p in seen:
                continue
            seen.add(p)
            stack.extend(succ.get(p, ()))
        assert P.Done in seen


def test_transition_examples():
    assert next_phase(P.DockPickup, "ok") is P.ReturnToPrep
    assert next_phase(P.DockPickup, "fail") is P.MoveToPickupPrep
    assert next_phase(P.Deliver, "last") is P.DockAssembly
    assert next_phase(P.Deliver, "more") is P.ExpandForAssembly


# single steps with scripted docking outcomes

def _runner(monkeypatch, outcome, blocks=6, retry_cap=5):
    monkeypatch.setattr(mission, "dock_attempt", lambda *a, **k: outcome)
    return MissionRunner(plan_bridge(blocks, retry_cap=retry_cap))


def test_pickup_success_sets_carrying(monkeypatch):
    runner = _runner(monkeypatch, True)
    ms = mission_step(MissionState(phase=P.DockPickup, magnet=True), runner)
    assert ms.phase is P.ReturnToPrep and ms.carrying
    assert runner.sim.carrying and runner.sim.expansion == 0.0


def test_pickup_failure_loops(monkeypatch):
    runner = _runner(monkeypatch, False)
    ms = mission_step(MissionState(phase=P.DockPickup, magnet=True), runner)
    assert ms.phase is P.MoveToPickupPrep and ms.retries == {"DockPickup": 1}
    assert not ms.carrying


def test_retry_cap_aborts(monkeypatch):
    runner = _runner(monkeypatch, False, retry_cap=0)
    ms = mission_step(MissionState(phase=P.DockPickup), runner)
    assert ms.aborted and "DockPickup" in ms.failure
    rep = mission_report(runner.sim.close())
    assert not rep["success"] and rep["failed_phase"] == "DockPickup"


def test_last_block_skips_expansion(monkeypatch):
    runner = _runner(monkeypatch, True)
    monkeypatch.setattr(runner, "goto", lambda pose, speed: "reached")
    ms = mission_step(MissionState(phase=P.Deliver, blocks_placed=5, carrying=True), runner)
    assert ms.phase is P.DockAssembly
    ms = mission_step(MissionState(phase=P.Deliver, blocks_placed=4, carrying=True), runner)
    assert ms.phase is P.ExpandForAssembly


def test_finished_state_is_fixed_point(monkeypatch):
    runner = _runner(monkeypatch, True)
    ms = MissionState(phase=P.Done)
    assert mission_step(ms, runner) is ms


# full runs

def _phase_at(log):
    ph = [(e["t"], e["phase"]) for e in log.events if e["kind"] == "phase"]
    ts = [p[0] for p in ph]
    return lambda t: ph[bisect_right(ts, t) - 1][1]


def test_golden_run_complete(golden):
    state, log = golden
    rep = mission_report(log)
    assert rep["success"] and rep["blocks_placed"] == 6
    assert rep["retries"] == {}
    assert state.phase is P.Done


def test_golden_durations_partition(golden):
    _, log = golden
    rep = mission_report(log)
    assert sum(rep["durations"].values()) == pytest.approx(rep["total_time"], abs=log.dt)


def test_form_policy(golden):
    _, log = golden
    phase = _phase_at(log)
    expanded_names = {p.value for p in EXPANDED_PHASES}
    for t, l in zip(log.t, log.expansion):
        if l > 0:
            assert phase(t) in expanded_names, (t, phase(t), l)


def test_payload_accounting(golden):
    _, log = golden
    flags = [e["carrying"] for e in log.events_of("payload")]
    assert flags == [True, False] * 6
    picks = [e["t"] for e in log.events_of("payload") if e["carrying"]]
    drops = [e["t"] for e in log.events_of("block_placed")]
    assert all(a < b for a, b in zip(picks, drops))
    assert [e["index"] for e in log.events_of("block_placed")] == list(range(6))


def test_blocks_land_on_targets(golden):
    _, log = golden
    plan = plan_bridge(6)
    for e in log.events_of("block_placed"):
        assert tuple(e["target"]) == plan.targets[e["index"]]


def test_single_block_skips_expand_for_assembly(single):
    state, log = single
    phases = [e["phase"] for e in log.events_of("phase")]
    assert "ExpandForAssembly" not in phases
    assert phases.count("DockPickup") == 1 and phases.count("DockAssembly") == 1
    assert state.blocks_placed == 1 and mission_report(log)["success"]


def test_golden_run_repeatable(golden):
    _, log = run_mission(plan_bridge(6), seed=0)
    assert log.rows == golden[1].rows and log.events == golden[1].events
