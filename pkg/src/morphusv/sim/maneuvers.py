"""Open-loop identification maneuvers and their log format."""
import csv
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import RangeError
from ..vessel.dynamics import param_vector
from ..vessel.params import thruster_arm
from ..vessel.state import L_MAX, wrap_angle

KINDS = ("straight", "circle", "spin")
MANEUVER_COLUMNS = ("t", "x", "y", "psi", "u", "v", "r", "f1", "f2", "f3", "f4", "l")


@dataclass
class ManeuverLog:
    """Uniformly sampled ``q`` (n, 6) and held thruster forces ``u`` (n, 4).

    ``u[k]`` acts over ``[t_k, t_k + dt)``; the last row's command is unused by
    the replay. ``substeps`` is the number of RK4 steps per sample used to
    generate (and replay) the log.
    """

    expansion: float
    dt: float
    t: np.ndarray
    q: np.ndarray
    u: np.ndarray
    kind: str = "custom"
    substeps: int = 5

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        n = len(self.t)
        if self.q.shape != (n, 6) or self.u.shape != (n, 4):
            raise ValueError("q must be (n, 6) and u (n, 4) for n time samples")
        if n > 1 and np.max(np.abs(np.diff(self.t) - self.dt)) > 1e-9:
            raise ValueError("maneuver log must be uniformly sampled at dt")

    @property
    def velocities(self):
        return self.q[:, 3:]

    def split(self, k):
        """Two contiguous logs sharing sample ``k``."""
        a = ManeuverLog(self.expansion, self.dt, self.t[:k + 1], self.q[:k + 1], self.u[:k + 1],
                        self.kind, self.substeps)
        b = ManeuverLog(self.expansion, self.dt, self.t[k:], self.q[k:], self.u[k:],
                        self.kind, self.substeps)
        return a, b

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(MANEUVER_COLUMNS)
            for t, q, u in zip(self.t, self.q, self.u):
                w.writerow([repr(float(x)) for x in (t, *q, *u, self.expansion)])

    @classmethod
    def from_csv(cls, path, kind="custom", substeps=5, differentiate=False):
        """Read a log; with ``differentiate`` the body velocities are recomputed from the pose."""
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = tuple(h.strip() for h in next(r))
            if header != MANEUVER_COLUMNS:
                raise ValueError(f"{path}: expected columns {MANEUVER_COLUMNS}, got {header}")
            data = np.array([[float(x) for x in row] for row in r if row])
        if len(data) < 2:
            raise ValueError(f"{path}: need at least two samples")
        ls = data[:, 11]
        if np.ptp(ls) > 0:
            raise ValueError(f"{path}: expansion must be constant within one log")
        t = data[:, 0]
        q = data[:, 1:7].copy()
        if differentiate:
            q[:, 3:] = body_velocities_from_pose(t, q[:, :3])
        return cls(float(ls[0]), float(t[1] - t[0]), t, q, data[:, 7:11], kind, substeps)


def body_velocities_from_pose(t, pose):
    """Central-difference world velocities mapped into the body frame (one-sided at the ends)."""
    pose = np.asarray(pose, dtype=float)
    psi = np.unwrap(pose[:, 2])
    xyp = np.column_stack([pose[:, :2], psi])
    d = np.gradient(xyp, np.asarray(t, dtype=float), axis=0)
    c, s = np.cos(psi), np.sin(psi)
    return np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1], d[:, 2]])


def thrust_program(kind, n, dt, level=1.0):
    """Piecewise-constant forces for one maneuver kind.

    Each program steps its amplitude halfway through so both the transient
    (mass) and the steady state (damping) are excited.
    straight: equal longitudinal pair ``[0, f, 0, f]``;
    circle: unequal longitudinal pair ``[0, f_a, 0, f_b]``;
    spin: ``[-f, -f, f, f]``, which cancels Fx and Fy exactly.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown maneuver kind {kind!r}")
    u = np.zeros((n, 4))
    half = n // 2
    if kind == "straight":
        u[:half] = [0.0, 4.0, 0.0, 4.0]
        u[half:] = [0.0, 1.5, 0.0, 1.5]
    elif kind == "circle":
        u[:half] = [0.0, 1.0, 0.0, 4.0]
        u[half:] = [0.0, 3.0, 0.0, 0.5]
    else:
        u[:half] = [-1.5, -1.5, 1.5, 1.5]
        u[half:] = [0.5, 0.5, -0.5, -0.5]
    return level * u


def generate_maneuver_logs(params_truth, kind, expansion, duration=20.0, seed=0, dt=0.1,
                           substeps=5, noise=0.0, level=1.0):
    """Simulate one open-loop maneuver from rest at the origin.

    ``noise`` adds Gaussian noise to the logged body velocities with standard
    deviation ``noise`` times the RMS of each velocity component.
    """
    if not 0.0 <= expansion <= L_MAX:
        raise RangeError(f"expansion {expansion} outside [0, {L_MAX}]")
    n = int(round(duration / dt)) + 1
    u = thrust_program(kind, n, dt, level)
    p = param_vector(params_truth)
    q = kernels.rollout(np.zeros(6), u[:-1], p, thruster_arm(expansion), dt, substeps)
    q = np.array(q)
    q[:, 2] = wrap_angle(q[:, 2])
    if noise > 0:
        rng = np.random.default_rng(seed)
        rms = np.sqrt(np.mean(q[:, 3:] ** 2, axis=0))
        q[:, 3:] += rng.standard_normal((n, 3)) * (noise * rms)
    t = dt * np.arange(n)
    return ManeuverLog(float(expansion), dt, t, q, u, kind, substeps)


def maneuver_set(params_truth, expansion, duration=20.0, seed=0, noise=0.0, dt=0.1):
    """One log of each kind at one expansion; the kinds get distinct noise seeds."""
    return [generate_maneuver_logs(params_truth, k, expansion, duration, seed * 7 + i, dt,
                                   noise=noise) for i, k in enumerate(KINDS)]
