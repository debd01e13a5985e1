"""Planar pose, body velocity and the combined vessel state."""
from dataclasses import dataclass, field
from math import pi

import numpy as np

L_MAX = 0.5  # identified expansion range [m]


def wrap_angle(a):
    """Wrap an angle (scalar or array) to the half-open interval (-pi, pi]."""
    if np.ndim(a) == 0:
        return _wrap_scalar(float(a))
    w = np.mod(np.asarray(a, dtype=float) + pi, 2.0 * pi) - pi
    w[w <= -pi] = pi
    return w


def _wrap_scalar(a):
    w = (a + pi) % (2.0 * pi) - pi
    return pi if w <= -pi else w


def rotation_matrix(psi):
    """Body-to-inertial rotation for planar motion (3x3)."""
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "psi", _wrap_scalar(float(self.psi)))


@dataclass(frozen=True)
class BodyVelocity:
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.u, self.v, self.r])):
            raise ValueError(f"non-finite body velocity {self}")


@dataclass(frozen=True)
class VesselState:
    """Pose, body velocity and expansion length of the vehicle."""

    pose: Pose = field(default_factory=Pose)
    vel: BodyVelocity = field(default_factory=BodyVelocity)
    expansion: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.expansion <= L_MAX + 1e-12:
            raise ValueError(f"expansion {self.expansion} outside [0, {L_MAX}]")

    def as_array(self):
        """State vector ``q = [x, y, psi, u, v, r]``."""
        p, v = self.pose, self.vel
        return np.array([p.x, p.y, p.psi, v.u, v.v, v.r])

    @classmethod
    def from_array(cls, q, expansion=0.0):
        q = [float(a) for a in q]
        return cls(Pose(*q[:3]), BodyVelocity(*q[3:]), float(expansion))
