"""Scissor-like deployable mechanism: servo angle <-> outrigger expansion.

Joint ``P_i`` sits at ``(sum_j l_j cos th_j, sum_j l_j sin th_j + y_P0)``.
Closure at ``P_1`` and ``P_3`` fixes ``th_2`` and ``th_4`` as functions of the
input angle ``th_1``; the expansion is ``x_P4`` measured from its smallest
reachable value.
"""
from dataclasses import dataclass, field
from math import asin, cos, pi, radians, sin

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import GeometryError, RangeError


def _asin_checked(arg, what):
    if not -1.0 - 1e-12 <= arg <= 1.0 + 1e-12:
        raise GeometryError(f"{what}: arcsine argument {arg:.6g} outside [-1, 1]")
    return asin(min(1.0, max(-1.0, arg)))


@dataclass(frozen=True)
class MechanismGeometry:
    l1: float = 0.19
    l2: float = 0.19
    l3: float = 0.19
    l4: float = 0.19
    y_p0: float = 0.0
    y_p4: float = 0.0
    theta_min: float = 0.0
    theta_max: float = radians(70.0)
    x_retract: float = field(default=None)

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3, self.l4) <= 0.0:
            raise GeometryError("rod lengths must be positive")
        if not 0.0 <= self.theta_min < self.theta_max < pi / 2:
            raise GeometryError(
                f"need 0 <= theta_min < theta_max < pi/2, got [{self.theta_min}, {self.theta_max}]")
        computed = _min_x_p4(self)
        if self.x_retract is None:
            object.__setattr__(self, "x_retract", computed)
        elif abs(self.x_retract - computed) > 1e-9:
            raise GeometryError(
                f"x_retract {self.x_retract} disagrees with the minimum reachable x_P4 {computed}")

    def joint_angles(self, theta1):
        """Return ``(theta2, theta4)`` for input angle ``theta1``."""
        s1 = sin(theta1)
        theta2 = -_asin_checked((self.l1 * s1 + self.y_p0) / self.l2, "theta2")
        # y_P3 = l3 sin(theta3) = y_P4 - l4 sin(theta4) with theta3 = -theta2
        s3 = -sin(theta2)
        theta4 = _asin_checked((self.y_p4 - self.l3 * s3) / self.l4, "theta4")
        return theta2, theta4

    def x_p4(self, theta1):
        theta2, theta4 = self.joint_angles(theta1)
        return self.l1 * cos(theta1) + (self.l2 + self.l3) * cos(theta2) + self.l4 * cos(theta4)

    def joints(self, theta1):
        """All five joint positions ``P_0..P_4`` as a (5, 2) array."""
        theta2, theta4 = self.joint_angles(theta1)
        th = [theta1, theta2, -theta2, theta4]
        ls = [self.l1, self.l2, self.l3, self.l4]
        pts = np.zeros((5, 2))
        pts[0, 1] = self.y_p0
        for i in range(4):
            pts[i + 1] = pts[i] + ls[i] * np.array([cos(th[i]), sin(th[i])])
        return pts

    @property
    def max_expansion(self):
        return mechanism_forward(self, self.theta_min)[1]


def _min_x_p4(geom):
    grid = np.linspace(geom.theta_min, geom.theta_max, 401)
    vals = np.array([geom.x_p4(t) for t in grid])
    i = int(np.argmin(vals))
    best = vals[i]
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(geom.x_p4, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return float(best)


def mechanism_forward(geom, theta1):
    """Servo angle -> ``(x_P4, expansion)``."""
    if not geom.theta_min - 1e-12 <= theta1 <= geom.theta_max + 1e-12:
        raise RangeError(f"theta1 {theta1} outside [{geom.theta_min}, {geom.theta_max}]")
    x = geom.x_p4(theta1)
    return x, max(0.0, x - geom.x_retract)


def mechanism_inverse(geom, expansion, tol=1e-13):
    """Expansion -> servo angle by bisection; the forward map must be decreasing."""
    lmax = mechanism_forward(geom, geom.theta_min)[1]
    if not 0.0 <= expansion <= lmax + 1e-12:
        raise RangeError(f"expansion {expansion} outside achievable [0, {lmax}]")
    lo, hi = geom.theta_min, geom.theta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mechanism_forward(geom, mid)[1] > expansion:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class ExpansionTable:
    """Precomputed angle/expansion table used by the servo loop."""

    def __init__(self, geom, n=256):
        self.geom = geom
        self.theta = np.linspace(geom.theta_min, geom.theta_max, n)
        self.expansion = np.array([mechanism_forward(geom, t)[1] for t in self.theta])
        if np.any(np.diff(self.expansion) >= 0.0):
            raise GeometryError("expansion is not strictly decreasing in theta1; table lookup is ambiguous")

    def angle_for(self, expansion):
        if not 0.0 <= expansion <= self.expansion[0] + 1e-12:
            raise RangeError(f"expansion {expansion} outside table range")
        # np.interp needs increasing abscissae
        return float(np.interp(expansion, self.expansion[::-1], self.theta[::-1]))
