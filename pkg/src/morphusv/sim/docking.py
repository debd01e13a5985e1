"""Docking ports and the capture-window test.

Offsets are measured in the port frame: origin at the port position, x axis
along ``facing`` (the heading the vessel must hold when latched). The point
compared against the port is the vessel's bow connector at body
``x = connector_base + l``.
"""
from dataclasses import dataclass, field, replace
from math import cos, hypot, radians, sin

import numpy as np

from ..vessel.state import _wrap_scalar as _wrap, wrap_angle

LATCH_FORCES = {"long_on_on": 570.0, "lat_on_on": 150.0, "long_on_ferro": 340.0, "lat_on_ferro": 67.0}
CONNECTOR_BASE = 0.6
REASONS = ("longitudinal", "lateral", "yaw", "speed", "dwell")


@dataclass(frozen=True)
class DockPort:
    position: tuple = (0.0, 0.0)
    facing: float = 0.0
    capture_longitudinal: float = 0.04
    capture_lateral: float = 0.025
    capture_yaw: float = radians(15.0)
    approach_speed_cap: float = 0.1
    dwell: float = 0.5
    latch_forces: dict = field(default_factory=lambda: dict(LATCH_FORCES))
    name: str = "port"

    def __post_init__(self):
        if min(self.capture_longitudinal, self.capture_lateral, self.capture_yaw,
               self.approach_speed_cap) <= 0:
            raise ValueError("capture window must be strictly positive")
        if self.dwell < 0:
            raise ValueError("dwell must be nonnegative")

    def required_samples(self, dt):
        """Consecutive in-window samples spanning ``dwell`` seconds."""
        if self.dwell < dt - 1e-12:
            raise ValueError(f"dwell {self.dwell} s is shorter than one step {dt} s")
        return int(round(self.dwell / dt)) + 1

    def scaled(self, factor):
        """Same port with every tolerance multiplied by ``factor``."""
        return replace(self, capture_longitudinal=self.capture_longitudinal * factor,
                       capture_lateral=self.capture_lateral * factor,
                       capture_yaw=self.capture_yaw * factor,
                       approach_speed_cap=self.approach_speed_cap * factor)

    def docked_pose(self, expansion, base=CONNECTOR_BASE, standoff=0.0):
        """Vessel pose ``(x, y, psi)`` putting the connector ``standoff`` m short of the port."""
        c, s = np.cos(self.facing), np.sin(self.facing)
        back = base + expansion + standoff
        return np.array([self.position[0] - back * c, self.position[1] - back * s, self.facing])


@dataclass(frozen=True)
class CaptureResult:
    captured: bool
    reason: str = None
    offsets: tuple = None

    def __bool__(self):
        return self.captured


def connector_position(q, expansion, base=CONNECTOR_BASE):
    q = np.asarray(q, dtype=float)
    reach = base + np.asarray(expansion, dtype=float)
    return np.stack([q[..., 0] + reach * np.cos(q[..., 2]), q[..., 1] + reach * np.sin(q[..., 2])], axis=-1)


def port_offsets(q, expansion, port, base=CONNECTOR_BASE):
    """``(longitudinal, lateral, yaw error, speed)`` of one or many samples."""
    q = np.asarray(q, dtype=float)
    p = connector_position(q, expansion, base)
    dx = p[..., 0] - port.position[0]
    dy = p[..., 1] - port.position[1]
    c, s = np.cos(port.facing), np.sin(port.facing)
    lon = c * dx + s * dy
    lat = -s * dx + c * dy
    yaw = wrap_angle(q[..., 2] - port.facing)
    speed = np.hypot(q[..., 3], q[..., 4])
    return lon, lat, yaw, speed


def window_violation(offsets, port):
    """First violated tolerance of one sample, or None."""
    lon, lat, yaw, speed = (float(x) for x in offsets)
    if abs(lon) > port.capture_longitudinal:
        return "longitudinal"
    if abs(lat) > port.capture_lateral:
        return "lateral"
    if abs(yaw) > port.capture_yaw:
        return "yaw"
    if speed > port.approach_speed_cap:
        return "speed"
    return None


def docking_capture_check(history, port, dt, expansion=None, base=CONNECTOR_BASE):
    """Capture test over recent samples.

    ``history`` is an (n, 6) array of states, oldest first; ``expansion`` is a
    scalar or per-sample array (default 0). Captured iff the last
    ``round(dwell/dt) + 1`` samples all lie inside the window. Otherwise the
    reason is the violation of the newest sample, or ``"dwell"`` if the newest
    sample is inside but the streak is too short.
    """
    h = np.atleast_2d(np.asarray(history, dtype=float))
    if expansion is None:
        expansion = 0.0
    lon, lat, yaw, speed = port_offsets(h, expansion, port, base)
    need = port.required_samples(dt)
    last = (lon[-1], lat[-1], yaw[-1], speed[-1])
    reason = window_violation(last, port)
    if reason is not None:
        return CaptureResult(False, reason, last)
    if len(h) < need:
        return CaptureResult(False, "dwell", last)
    for k in range(len(h) - need, len(h)):
        if window_violation((lon[k], lat[k], yaw[k], speed[k]), port) is not None:
            return CaptureResult(False, "dwell", last)
    return CaptureResult(True, None, last)


class CaptureMonitor:
    """Streaming version of :func:`docking_capture_check` for one port."""

    def __init__(self, port, dt, base=CONNECTOR_BASE):
        self.port = port
        self.base = base
        self.need = port.required_samples(dt)
        self.streak = 0
        self.last_reason = None

    def reset(self):
        self.streak = 0
        self.last_reason = None

    def update(self, q, expansion):
        # scalar version of port_offsets, called once per simulation step
        port = self.port
        reach = self.base + expansion
        px = q[0] + reach * cos(q[2]) - port.position[0]
        py = q[1] + reach * sin(q[2]) - port.position[1]
        c, s = cos(port.facing), sin(port.facing)
        off = (c * px + s * py, -s * px + c * py, _wrap(q[2] - port.facing), hypot(q[3], q[4]))
        reason = window_violation(off, port)
        if reason is None:
            self.streak += 1
        else:
            self.streak = 0
        self.last_reason = reason
        return self.streak >= self.need
