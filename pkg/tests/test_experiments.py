import numpy as np
import pytest

from morphusv.config import VesselConfig
from morphusv.control import NmpcConfig, NmpcController
from morphusv.errors import ConfigError
from morphusv.experiments import (DockingPolicy, dock_attempt, docking_monte_carlo, docking_trial,
                                  form_expansion, load_water, run_tracking, summarize_docking)
from morphusv.sim.docking import DockPort
from morphusv.sim.engine import Simulator


def test_forms_and_presets():
    assert form_expansion("contracted") == 0.0 and form_expansion("expanded") == 0.5
    with pytest.raises(ConfigError):
        form_expansion("folded")
    assert load_water("calm") is None
    wd = load_water("turbulent")
    assert wd.frequency == 1.5 and wd.force_amplitude > 0
    with pytest.raises(ConfigError):
        load_water("stormy")


def test_docking_weights_keep_position_terms():
    cfg = NmpcConfig()
    d = DockingPolicy().controller_config(cfg)
    assert d.Q[:3] == cfg.Q[:3] and d.QN[:3] == cfg.QN[:3]
    assert d.Q[3:] == (800.0, 800.0, 400.0)
    assert d.H == cfg.H and d.u_max == cfg.u_max


def test_dock_attempt_restores_transit_weights():
    vessel = VesselConfig()
    port = DockPort(position=(0.0, 0.0), facing=0.0, name="p")
    q0 = np.zeros(6)
    q0[0] = port.docked_pose(0.0, vessel.connector_base, 0.6)[0]
    sim = Simulator(vessel, q0, 0.0)
    ctl = NmpcController(NmpcConfig.with_f_max(vessel.f_max))
    transit = ctl.cfg
    assert dock_attempt(sim, ctl, port)
    assert ctl.cfg is transit
    assert sim.log.events_of("capture")[0]["port"] == "p"


def test_calm_docking_first_attempt():
    for form in ("contracted", "expanded"):
        r = docking_trial(form, seed=1)
        assert r["success"] and r["attempts"] == 1 and r["time"] < 120


def test_docking_deadline_stops_trial():
    r = docking_trial("contracted", seed=1, timeout=5.0)
    assert not r["success"] and r["time"] is None
    assert r["log"].t[-1] <= 5.0 + 0.1


def test_calm_docking_rate():
    # calm water, default presets: at least 90% over 20 trials per form
    for form in ("contracted", "expanded"):
        assert docking_monte_carlo(form, "calm", 20)["success_rate"] >= 0.9


def test_docking_paired_seeds_repeatable():
    wd = load_water("turbulent")
    a = docking_trial("expanded", 3, wd)
    b = docking_trial("expanded", 3, wd)
    assert a["log"].rows == b["log"].rows and a["attempts"] == b["attempts"]


def test_summarize_docking():
    trials = [{"success": True, "time": 10.0, "attempts": 1},
              {"success": False, "time": None, "attempts": 4},
              {"success": True, "time": 30.0, "attempts": 2}]
    s = summarize_docking(trials)
    assert s["success_rate"] == pytest.approx(2 / 3) and s["mean_time"] == 20.0
    assert s["times"] == [10.0, 30.0]
    empty = summarize_docking([])
    assert empty["success_rate"] is None and empty["mean_time"] is None


def test_run_tracking_aggregates():
    r = run_tracking("circle", "pid", "contracted", trials=2)
    assert len(r.trials) == 2
    s = r.summary()
    assert s["mae_position"] == pytest.approx(np.mean([t["mae_position"] for t in r.trials]))
