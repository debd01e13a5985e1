"""Tracking error and control effort metrics."""
import numpy as np

from ..errors import MisalignedError
from ..vessel.state import wrap_angle


def align(log_t, ref_t, tol=1e-7):
    """Indices of ``log_t`` matching every time in ``ref_t``; MisalignedError otherwise."""
    log_t = np.asarray(log_t, dtype=float)
    ref_t = np.asarray(ref_t, dtype=float)
    idx = np.clip(np.searchsorted(log_t, ref_t), 0, len(log_t) - 1)
    lo = np.clip(idx - 1, 0, len(log_t) - 1)
    closer = np.abs(log_t[lo] - ref_t) < np.abs(log_t[idx] - ref_t)
    idx = np.where(closer, lo, idx)
    gap = np.abs(log_t[idx] - ref_t)
    if len(ref_t) == 0 or np.any(gap > tol):
        bad = ref_t[np.argmax(gap)] if len(ref_t) else None
        raise MisalignedError(f"reference time {bad} has no matching log sample")
    return idx


def control_effort(t, u):
    """Trapezoidal integral of u'u over time."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if len(t) < 2:
        return 0.0
    uu = np.einsum("ij,ij->i", u, u)
    return float(np.sum(0.5 * (uu[1:] + uu[:-1]) * np.diff(t)))


def tracking_metrics(log, ref, t_end=None):
    """Position MAE, yaw MAE and effort of a run against its reference.

    ``log`` needs ``t``, ``q`` and ``u`` arrays; ``ref`` needs ``t`` and ``q``.
    Errors are sampled at the reference times (which must all appear in the
    log); the effort covers the logged interval up to ``t_end``.
    """
    ref_t, ref_q = np.asarray(ref.t), np.asarray(ref.q)
    log_t = np.asarray(log.t)
    if t_end is not None:
        keep = ref_t <= t_end + 1e-9
        ref_t, ref_q = ref_t[keep], ref_q[keep]
    idx = align(log_t, ref_t)
    q = np.asarray(log.q)[idx]
    pos = np.hypot(q[:, 0] - ref_q[:, 0], q[:, 1] - ref_q[:, 1])
    yaw = np.abs(wrap_angle(q[:, 2] - ref_q[:, 2]))
    stop = len(log_t) if t_end is None else int(np.searchsorted(log_t, t_end + 1e-9))
    return {
        "mae_position": float(np.mean(pos)),
        "mae_yaw": float(np.mean(yaw)),
        "effort": control_effort(log_t[:stop], np.asarray(log.u)[:stop]),
        "samples": int(len(idx)),
    }
