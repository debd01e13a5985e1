"""Hydrodynamic coefficients and their dependence on expansion length."""
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ParameterError, RangeError
from .state import L_MAX

ARM_OFFSET = 0.4435  # thruster arm at zero expansion [m]


def thruster_arm(expansion):
    """Distance from the body centre to each thruster [m]."""
    return expansion + ARM_OFFSET


@dataclass(frozen=True)
class HydroParams:
    """Mass (rigid + added) and linear drag coefficients of the planar model."""

    m1: float
    m2: float
    m3: float
    Xu: float
    Yv: float
    Nr: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise ParameterError(f"hydrodynamic parameters must be finite and positive: {self}")
        if self.m1 != self.m2 or self.Xu != self.Yv:
            raise ParameterError(f"symmetric hull requires m1 == m2 and Xu == Yv: {self}")

    @classmethod
    def symmetric(cls, m12, m3, xuv, nr):
        return cls(m12, m12, m3, xuv, xuv, nr)

    @classmethod
    def from_reduced(cls, x):
        """Build from the 4-vector ``[m12, m3, Xuv, Nr]``."""
        return cls.symmetric(*(float(a) for a in x))

    def reduced(self):
        return np.array([self.m1, self.m3, self.Xu, self.Nr])

    def as_array(self):
        return np.array([self.m1, self.m2, self.m3, self.Xu, self.Yv, self.Nr], dtype=float)

    def with_payload(self, mass, radius=0.0):
        """Add a rigidly attached payload of ``mass`` kg carried at ``radius`` m.

        Drag is unchanged; yaw inertia gains ``mass * radius**2``.
        """
        if mass == 0.0:
            return self
        return replace(self, m1=self.m1 + mass, m2=self.m2 + mass,
                       m3=self.m3 + mass * radius ** 2)


FAMILIES = ("m12", "m3", "Xuv", "Nr")


@dataclass(frozen=True)
class ParamPolynomials:
    """Quadratic coefficient table: ``lambda(l) = c2 l^2 + c1 l + c0`` per family.

    Each field holds ``(c2, c1, c0)``.
    """

    m12: tuple
    m3: tuple
    Xuv: tuple
    Nr: tuple

    def coefficients(self):
        """4x3 array, rows in ``FAMILIES`` order, columns (c2, c1, c0)."""
        return np.array([self.m12, self.m3, self.Xuv, self.Nr], dtype=float)

    @classmethod
    def from_coefficients(cls, coef):
        coef = np.asarray(coef, dtype=float)
        return cls(*(tuple(float(c) for c in row) for row in coef))

    def reduced_at(self, expansion):
        return np.array([np.polyval(row, expansion) for row in self.coefficients()])


# identified coefficient table of the prototype
TABLE_II = ParamPolynomials(
    m12=(0.11317070, 8.13430784, 22.82839307),
    m3=(0.13027175, 1.88878483, 7.57931479),
    Xuv=(-1.01327442, 9.75583033, 19.79519544),
    Nr=(0.21534853, 1.19699306, 2.27478185),
)


def eval_params(poly=TABLE_II, expansion=0.0, allow_extrapolate=False):
    """Evaluate the parameter polynomials at an expansion length.

    Raises RangeError outside ``[0, 0.5]`` unless ``allow_extrapolate``.
    """
    if not allow_extrapolate and not (0.0 <= expansion <= L_MAX):
        raise RangeError(f"expansion {expansion} m outside identified range [0, {L_MAX}]")
    return HydroParams.from_reduced(poly.reduced_at(expansion))
