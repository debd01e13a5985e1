"""Scenario engine, waves, docking capture and identification maneuvers."""
from .docking import (CONNECTOR_BASE, LATCH_FORCES, CaptureMonitor, CaptureResult, DockPort,
                      connector_position, docking_capture_check, port_offsets)
from .engine import (COLUMNS, ScenarioConfig, SimLog, Simulator, drive, run_scenario,
                     scenario_from_kv, step)
from .maneuvers import KINDS, ManeuverLog, generate_maneuver_logs, maneuver_set
from .waves import CALM, WaveDisturbance, wave_force
