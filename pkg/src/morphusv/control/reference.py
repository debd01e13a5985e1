"""Reference trajectories sampled at the controller rate."""
from dataclasses import dataclass, field
from math import atan2, ceil, cos, hypot, pi, sin

import numpy as np

from ..vessel.state import wrap_angle

SHAPES = ("circle", "square", "hourglass", "dock_approach", "custom")


@dataclass
class ReferenceTrajectory:
    """Target states ``q_ref`` (n x 6) at times ``t`` spaced by ``dt``.

    Velocity components are body-frame values from forward differences of the
    pose samples. ``corners`` holds the times at which a polyline reference
    passes a vertex.
    """

    t: np.ndarray
    q: np.ndarray
    shape: str = "custom"
    corners: list = field(default_factory=list)
    vertices: np.ndarray = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if len(self.t) != len(self.q) or self.q.shape[1] != 6:
            raise ValueError("t and q must have matching lengths and q six columns")
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("reference time must be strictly increasing")
        self.q[:, 2] = wrap_angle(self.q[:, 2])

    @property
    def dt(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def index(self, time):
        if len(self.t) == 1:
            return 0
        i = int(round((time - self.t[0]) / self.dt))
        return min(max(i, 0), len(self.t) - 1)

    def at(self, time):
        return self.q[self.index(time)]

    def window(self, time, n):
        """``n + 1`` samples starting at ``time``; the last sample is held past the end."""
        i0 = self.index(time)
        idx = np.minimum(np.arange(i0, i0 + n + 1), len(self.t) - 1)
        win = self.q[idx].copy()
        past = np.arange(i0, i0 + n + 1) >= len(self.t) - 1
        win[past, 3:] = 0.0  # hold the final pose at rest
        return win

    def final(self):
        return self.q[-1]


def _with_velocities(t, pose):
    """Append body-frame forward-difference velocities to an (n, 3) pose array."""
    n = len(t)
    q = np.zeros((n, 6))
    q[:, :3] = pose
    if n > 1:
        dt = np.diff(t)
        dp = np.diff(pose[:, :2], axis=0) / dt[:, None]
        dpsi = wrap_angle(np.diff(pose[:, 2])) / dt
        c, s = np.cos(pose[:-1, 2]), np.sin(pose[:-1, 2])
        q[:-1, 3] = c * dp[:, 0] + s * dp[:, 1]
        q[:-1, 4] = -s * dp[:, 0] + c * dp[:, 1]
        q[:-1, 5] = dpsi
    return q


def polyline_reference(vertices, speed, dt=0.1, heading="segment", shape="custom",
                       hold=0.0, t0=0.0):
    """Constant-speed traversal of a polyline.

    ``heading`` is ``"segment"`` (face along each segment), a float (fixed
    heading) or a sequence with one heading per vertex (linear in arc length
    between vertices, shortest way round).
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
        raise ValueError("need at least two 2-D vertices")
    if speed <= 0:
        raise ValueError("speed must be positive")
    seg = np.diff(v, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    if np.any(seg_len <= 0):
        raise ValueError("degenerate zero-length segment")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    n = int(ceil(total / speed / dt - 1e-9))
    t = t0 + dt * np.arange(n + 1 + int(round(hold / dt)))
    s = np.minimum(speed * (t - t0), total)
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[k]) / seg_len[k]
    pos = v[k] + frac[:, None] * seg[k]

    seg_heading = np.arctan2(seg[:, 1], seg[:, 0])
    if isinstance(heading, str):
        if heading != "segment":
            raise ValueError(f"unknown heading mode {heading!r}")
        psi = seg_heading[k]
    elif np.ndim(heading) == 0:
        psi = np.full(len(t), float(heading))
    else:
        hv = np.asarray(heading, dtype=float)
        if len(hv) != len(v):
            raise ValueError("need one heading per vertex")
        delta = wrap_angle(np.diff(hv))
        psi = hv[k] + frac * delta[k]
    q = _with_velocities(t, np.column_stack([pos, psi]))
    q[s >= total, 3:] = 0.0
    corners = [float(t0 + c / speed) for c in cum[1:-1]]
    return ReferenceTrajectory(t, q, shape=shape, corners=corners, vertices=v)


def circle_reference(radius, speed, origin=(0.0, 0.0), dt=0.1, laps=1.0):
    if radius <= 0 or speed <= 0:
        raise ValueError("radius and speed must be positive")
    omega = speed / radius
    period = 2 * pi / omega
    n = int(ceil(laps * period / dt - 1e-9))
    t = dt * np.arange(n + 1)
    theta = -pi / 2 + np.minimum(omega * t, laps * 2 * pi)
    pos = np.column_stack([origin[0] + radius * np.cos(theta), origin[1] + radius * np.sin(theta)])
    psi = theta + pi / 2
    q = np.zeros((len(t), 6))
    q[:, :2] = pos
    q[:, 2] = psi
    q[:, 3] = speed
    q[:, 5] = omega
    q[-1, 3:] = 0.0
    return ReferenceTrajectory(t, q, shape="circle")


def square_vertices(side, origin=(0.0, 0.0)):
    x0, y0 = origin
    return np.array([[x0, y0], [x0 + side, y0], [x0 + side, y0 + side], [x0, y0 + side], [x0, y0]])


def hourglass_vertices(size, origin=(0.0, 0.0)):
    """Two triangles touching at the waist ``origin``, traced in one stroke.

    The path runs waist -> upper right -> upper left -> waist -> lower right ->
    lower left -> waist, so it crosses itself straight through the waist.
    """
    x0, y0 = origin
    h, w = size, size / 2
    return np.array([[x0, y0], [x0 + w, y0 + h], [x0 - w, y0 + h], [x0, y0],
                     [x0 + w, y0 - h], [x0 - w, y0 - h], [x0, y0]])


def build_reference(shape, size, speed, origin=(0.0, 0.0), dt=0.1):
    """Reference for the tracking experiments: circle radius / square side / hourglass height."""
    if size <= 0 or speed <= 0:
        raise ValueError(f"size and speed must be positive (got {size}, {speed})")
    if shape == "circle":
        return circle_reference(size, speed, origin, dt)
    if shape == "square":
        return polyline_reference(square_vertices(size, origin), speed, dt, shape="square")
    if shape == "hourglass":
        return polyline_reference(hourglass_vertices(size, origin), speed, dt, shape="hourglass")
    raise ValueError(f"unknown tracking shape {shape!r}")


def move_reference(start, goal, speed, dt=0.1, yaw_rate=0.5, t0=0.0, shape="custom"):
    """Straight move between two poses ``(x, y, psi)``.

    Heading turns linearly over the move, slowed so the yaw rate stays below
    ``yaw_rate``; a pure rotation results when the positions coincide.
    """
    x0, y0, p0 = start
    x1, y1, p1 = goal
    dist = hypot(x1 - x0, y1 - y0)
    dpsi = wrap_angle(p1 - p0)
    duration = max(dist / speed, abs(dpsi) / yaw_rate, dt)
    n = int(ceil(duration / dt - 1e-9))
    t = t0 + dt * np.arange(n + 1)
    frac = np.minimum((t - t0) / duration, 1.0)
    pose = np.column_stack([x0 + frac * (x1 - x0), y0 + frac * (y1 - y0), p0 + frac * dpsi])
    q = _with_velocities(t, pose)
    q[-1, 3:] = 0.0
    return ReferenceTrajectory(t, q, shape=shape)


def hold_reference(pose, duration, dt=0.1, t0=0.0):
    n = max(1, int(ceil(duration / dt - 1e-9)))
    t = t0 + dt * np.arange(n + 1)
    q = np.zeros((n + 1, 6))
    q[:, :3] = pose
    return ReferenceTrajectory(t, q)


def segment_intersections(vertices, tol=1e-9):
    """Distinct points where non-adjacent segments of a closed polyline meet."""
    v = np.asarray(vertices, dtype=float)
    segs = list(zip(v[:-1], v[1:]))
    m = len(segs)
    pts = []
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue  # closing segments share the start vertex
            p = _intersect(*segs[i], *segs[j], tol)
            if p is not None and not any(np.hypot(*(p - q)) < 1e-6 for q in pts):
                pts.append(p)
    return pts


def _intersect(a, b, c, d, tol):
    r, s = b - a, d - c
    den = r[0] * s[1] - r[1] * s[0]
    if abs(den) < tol:
        return None
    qp = c - a
    t = (qp[0] * s[1] - qp[1] * s[0]) / den
    u = (qp[0] * r[1] - qp[1] * r[0]) / den
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        return a + t * r
    return None


def heading_to(src, dst):
    return atan2(dst[1] - src[1], dst[0] - src[0])


def unit(angle):
    return np.array([cos(angle), sin(angle)])
