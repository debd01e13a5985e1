"""Thruster layout, force allocation and the PWM propulsion table."""
from dataclasses import dataclass

import numpy as np

from ..errors import RangeError, SaturationError
from .params import thruster_arm

F_MAX = 6.0  # per-thruster force bound [N]
DUTY_MIN = 0.061
DUTY_MAX = 0.088
DUTY_NEUTRAL = 0.0745
DEADBAND = 0.001


def allocation_matrix(arm):
    """3x4 map from thruster forces ``[f1..f4]`` to ``[Fx, Fy, Mz]``.

    Thrusters 2 and 4 push along the body x axis, 1 and 3 along y.
    """
    return np.array([
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [-arm, -arm, arm, arm],
    ])


def allocation(u, arm, f_max=None):
    """Generalised force ``E u``; raises SaturationError if any ``|f_i| > f_max``."""
    u = np.asarray(u, dtype=float)
    if f_max is not None and np.any(np.abs(u) > f_max + 1e-12):
        raise SaturationError(f"thruster command {u} exceeds +/-{f_max} N")
    arm = float(arm)
    return np.array([u[1] + u[3], u[0] + u[2], arm * (u[2] + u[3] - u[0] - u[1])])


@dataclass(frozen=True)
class ThrusterLayout:
    arm: float
    f_max: float = F_MAX

    @classmethod
    def for_expansion(cls, expansion, f_max=F_MAX):
        return cls(thruster_arm(expansion), f_max)

    @property
    def matrix(self):
        return allocation_matrix(self.arm)


class PropulsionTable:
    """Monotone piecewise-linear duty-cycle <-> thrust map.

    Knots are ``(duty, force)`` pairs sorted by duty. Duty cycles inside the
    deadband around the neutral value produce no thrust.
    """

    def __init__(self, duty, force, neutral=DUTY_NEUTRAL):
        duty = np.asarray(duty, dtype=float)
        force = np.asarray(force, dtype=float)
        if duty.shape != force.shape or duty.ndim != 1 or len(duty) < 2:
            raise ValueError("duty and force must be equal-length 1-D sequences")
        if np.any(np.diff(duty) <= 0):
            raise ValueError("duty knots must be strictly increasing")
        if np.any(np.diff(force) < 0):
            raise ValueError("force knots must be nondecreasing")
        if not duty[0] <= neutral <= duty[-1] or np.interp(neutral, duty, force) != 0.0:
            raise ValueError("neutral duty must map to zero thrust")
        self.duty = duty
        self.force = force
        self.neutral = neutral

    @classmethod
    def default(cls, f_max=F_MAX, knots_per_side=6):
        """Synthetic symmetric table with a +/-0.001 deadband around 0.0745."""
        k = np.linspace(0.0, 1.0, knots_per_side)
        side = DUTY_NEUTRAL + DEADBAND + k * (DUTY_MAX - DUTY_NEUTRAL - DEADBAND)
        mag = f_max * k ** 1.5
        duty = np.concatenate([2 * DUTY_NEUTRAL - side[::-1], side])
        force = np.concatenate([-mag[::-1], mag])
        return cls(duty, force)

    @property
    def f_max(self):
        return min(-self.force[0], self.force[-1])

    def pwm_to_force(self, duty):
        if not self.duty[0] - 1e-12 <= duty <= self.duty[-1] + 1e-12:
            raise RangeError(f"duty {duty} outside [{self.duty[0]}, {self.duty[-1]}]")
        return float(np.interp(duty, self.duty, self.force))

    def force_to_pwm(self, force):
        if not self.force[0] - 1e-12 <= force <= self.force[-1] + 1e-12:
            raise RangeError(f"force {force} N outside [{self.force[0]}, {self.force[-1]}]")
        if force == 0.0:
            return self.neutral
        zero = self.duty[self.force == 0.0]
        if force > 0:
            pos = self.force > 0
            f = np.concatenate([[0.0], self.force[pos]])
            d = np.concatenate([[zero.max()], self.duty[pos]])
        else:
            neg = self.force < 0
            f = np.concatenate([self.force[neg], [0.0]])
            d = np.concatenate([self.duty[neg], [zero.min()]])
        return float(np.interp(force, f, d))
