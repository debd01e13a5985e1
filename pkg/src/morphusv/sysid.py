"""Gray-box identification of the hydrodynamic parameters.

For each expansion length the logged thruster commands are replayed through
the model from the logged initial state, and the weighted squared difference
between logged and simulated body velocities is minimised over the reduced
vector ``(m12, m3, Xuv, Nr)`` with a bounded trust-region-reflective solver.
The per-length estimates are then regressed onto quadratics in ``l``.
"""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import kernels
from .errors import IdentificationError, RankError
from .vessel.params import FAMILIES, TABLE_II, HydroParams, ParamPolynomials, eval_params, thruster_arm
from .sim.maneuvers import maneuver_set

W_DEFAULT = (1.0, 1.0, 0.25)
GUESS_DEFAULT = (42.0, 42.0 * 0.18, 15.0, 15.0 * 0.18)
BOUND_FACTORS = (0.2, 5.0)
DIVERGED = 1e6  # residual entry used when a candidate blows up
LENGTHS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def _as_params(lam):
    if isinstance(lam, HydroParams):
        return lam
    lam = np.asarray(lam, dtype=float)
    if lam.shape == (4,):
        return HydroParams.from_reduced(lam)
    return HydroParams(*lam)


def simulate_candidate(log, lam):
    """Replay a log's commands under parameters ``lam``; simulated body velocities (n, 3).

    Returns None if the trajectory is not finite.
    """
    p = _as_params(lam).as_array()
    with np.errstate(all="ignore"):
        q = kernels.rollout(log.q[0], log.u[:-1], p, thruster_arm(log.expansion), log.dt,
                            log.substeps)
    q = np.asarray(q)
    if not np.all(np.isfinite(q)):
        return None
    return q[:, 3:]


@dataclass
class IdentificationProblem:
    logs: list
    W: tuple = W_DEFAULT
    guess: tuple = GUESS_DEFAULT
    lower: tuple = None
    upper: tuple = None
    starts: int = 5
    jitter: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not self.logs:
            raise ValueError("identification needs at least one log")
        w = np.asarray(self.W, dtype=float)
        if w.shape != (3,) or np.any(w <= 0):
            raise ValueError("W must be three positive diagonal weights")
        g = np.asarray(self.guess, dtype=float)
        if self.lower is None:
            self.lower = tuple(g * BOUND_FACTORS[0])
        if self.upper is None:
            self.upper = tuple(g * BOUND_FACTORS[1])
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if np.any(lo <= 0) or np.any(lo > g) or np.any(g > hi):
            raise ValueError("bounds must satisfy 0 < lower <= guess <= upper")
        ls = {round(log.expansion, 12) for log in self.logs}
        if len(ls) != 1:
            raise ValueError("all logs of one problem must share the expansion length")

    @property
    def expansion(self):
        return self.logs[0].expansion

    def residuals(self, x):
        """Stacked ``sqrt(W) * (v_e - v_s)`` over all logs and samples."""
        sw = np.sqrt(np.asarray(self.W, dtype=float))
        parts = []
        for log in self.logs:
            vs = simulate_candidate(log, x)
            if vs is None:
                parts.append(np.full(log.velocities.size, DIVERGED))
            else:
                parts.append(((log.velocities - vs) * sw).ravel())
        return np.concatenate(parts)


def velocity_error_cost(problem, lam):
    """Sum over logs and samples of ``e' W e``; ``inf`` if any replay diverges."""
    total = 0.0
    w = np.asarray(problem.W, dtype=float)
    for log in problem.logs:
        vs = simulate_candidate(log, lam)
        if vs is None:
            return float("inf")
        e = log.velocities - vs
        total += float(np.sum(e * e * w))
    return total


@dataclass
class IdentificationResult:
    params: HydroParams
    residual: float
    diagnostics: dict = field(default_factory=dict)


def identify_at_length(problem):
    """Bounded multi-start least squares over ``(m12, m3, Xuv, Nr)``.

    The first start is the guess, the others are jittered by up to
    ``problem.jitter`` (relative) with a fixed seed and clipped to the bounds.
    """
    lo = np.asarray(problem.lower, dtype=float)
    hi = np.asarray(problem.upper, dtype=float)
    g = np.asarray(problem.guess, dtype=float)
    rng = np.random.default_rng(problem.seed)
    starts = [g]
    for _ in range(problem.starts - 1):
        starts.append(np.clip(g * (1.0 + rng.uniform(-problem.jitter, problem.jitter, 4)), lo, hi))
    runs = []
    for x0 in starts:
        try:
            sol = least_squares(problem.residuals, x0, bounds=(lo, hi), method="trf",
                                x_scale="jac", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=400)
        except (ValueError, FloatingPointError) as exc:
            runs.append({"start": x0.tolist(), "error": str(exc)})
            continue
        cost = velocity_error_cost(problem, sol.x)
        runs.append({"start": x0.tolist(), "x": sol.x.tolist(), "cost": cost,
                     "nfev": int(sol.nfev), "status": int(sol.status)})
    ok = [r for r in runs if "cost" in r and np.isfinite(r["cost"])]
    if not ok:
        raise IdentificationError(f"all {len(runs)} starts diverged at l={problem.expansion}",
                                  diagnostics={"runs": runs})
    best = min(ok, key=lambda r: r["cost"])
    x = np.asarray(best["x"])
    span = hi - lo
    active = [FAMILIES[i] for i in range(4)
              if x[i] - lo[i] <= 1e-6 * span[i] or hi[i] - x[i] <= 1e-6 * span[i]]
    diag = {"runs": runs, "active_bounds": active, "best_start": runs.index(best)}
    if active:
        diag["flags"] = ["active-bound"]
    return IdentificationResult(HydroParams.from_reduced(x), best["cost"], diag)


def fit_polynomials(points, degree=2):
    """Least-squares quadratic in ``l`` per parameter family.

    ``points`` is a sequence of ``(l, HydroParams)``; needs at least three
    distinct lengths.
    """
    ls = np.array([float(l) for l, _ in points])
    if len(np.unique(ls)) < degree + 1:
        raise RankError(f"need at least {degree + 1} distinct expansion lengths, got {len(np.unique(ls))}")
    vals = np.array([_as_params(p).reduced() for _, p in points])
    V = np.vander(ls, degree + 1)
    coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
    return ParamPolynomials.from_coefficients(coef.T)


@dataclass
class IdentifiedSet:
    lengths: list
    params: list
    residuals: list
    poly: ParamPolynomials
    post_residuals: list
    diagnostics: list = field(default_factory=list)

    def relative_error(self, truth=TABLE_II, grid=None):
        """Max relative deviation per family of the fitted polynomials from ``truth`` on [0, 0.5]."""
        grid = np.linspace(0.0, 0.5, 51) if grid is None else grid
        a = np.array([truth.reduced_at(l) for l in grid])
        b = np.array([self.poly.reduced_at(l) for l in grid])
        err = np.max(np.abs(b - a) / np.abs(a), axis=0)
        return dict(zip(FAMILIES, err.tolist()))

    def report(self):
        return {
            "lengths": list(self.lengths),
            "parameters": [dict(zip(FAMILIES, p.reduced().tolist())) for p in self.params],
            "residual_pre_regression": list(self.residuals),
            "residual_post_regression": list(self.post_residuals),
            "coefficients": {f: list(c) for f, c in zip(FAMILIES, self.poly.coefficients().tolist())},
            "active_bounds": [d.get("active_bounds", []) for d in self.diagnostics],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.report(), fh, indent=1, sort_keys=True)


def identify_sweep(log_sets, W=W_DEFAULT, seed=0, **problem_kw):
    """Identify at every length, regress, and re-score with the fitted polynomials."""
    log_sets = sorted(log_sets, key=lambda logs: logs[0].expansion)
    lengths = [logs[0].expansion for logs in log_sets]
    if np.any(np.diff(lengths) <= 0):
        raise ValueError("expansion lengths of the sweep must be distinct")
    problems = [IdentificationProblem(list(logs), W=W, seed=seed, **problem_kw) for logs in log_sets]
    results = [identify_at_length(p) for p in problems]
    poly = fit_polynomials([(l, r.params) for l, r in zip(lengths, results)])
    post = [velocity_error_cost(p, eval_params(poly, l, allow_extrapolate=True))
            for p, l in zip(problems, lengths)]
    return IdentifiedSet(lengths, [r.params for r in results], [r.residual for r in results],
                         poly, post, [r.diagnostics for r in results])


def synthetic_pipeline(truth=TABLE_II, lengths=LENGTHS, noise=0.0, seed=0, duration=20.0, **kw):
    """Generate logs from ``truth`` at each length, then run :func:`identify_sweep`."""
    sets = [maneuver_set(eval_params(truth, l), l, duration, seed=seed * 100 + i, noise=noise)
            for i, l in enumerate(lengths)]
    return identify_sweep(sets, seed=seed, **kw)
