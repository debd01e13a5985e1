"""Key-value configuration files.

All configuration (vessel, scenario, controller, mission plan) uses INI-style
sections read with :mod:`configparser`. Keys are addressed by dotted paths
``section.key`` in error messages. Vector values are comma separated.

Vessel schema (every key optional, defaults in brackets)::

    [vessel]
    f_max = 6.0              ; per-thruster bound [N]
    dt = 0.02                ; integration step [s]
    expansion_rate = 0.05    ; mechanism speed bound [m/s]
    connector_base = 0.6     ; docking connector x offset at zero expansion [m]

    [params]                 ; c2, c1, c0 per family
    m12 = 0.11317070, 8.13430784, 22.82839307
    m3 = ...
    xuv = ...
    nr = ...

    [mechanism]
    l1 = 0.19                ; also l2, l3, l4 [m]
    y_p0 = 0.0               ; also y_p4 [m]
    theta_min_deg = 0.0
    theta_max_deg = 70.0

    [propulsion]
    duty = 0.061, ...        ; knots, strictly increasing
    force = -6.0, ...        ; knots [N], nondecreasing
"""
import configparser
import io
import os
from dataclasses import dataclass, field
from math import radians

import numpy as np

from .errors import ConfigError, GeometryError
from .vessel.mechanism import MechanismGeometry
from .vessel.params import FAMILIES, TABLE_II, ParamPolynomials
from .vessel.propulsion import F_MAX, PropulsionTable
from .vessel.state import L_MAX


def read_kv(source):
    """Parse a key-value file (path or literal text) into ``{section: {key: str}}``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            with open(source) as fh:
                parser.read_file(fh)
        elif isinstance(source, str) and ("\n" in source or source.lstrip().startswith("[")):
            parser.read_string(source)
        else:
            raise ConfigError(f"config file not found: {source}")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def write_kv(data, path=None):
    """Write ``{section: {key: value}}``; returns the text."""
    parser = configparser.ConfigParser()
    for section, items in data.items():
        parser[section] = {k: _fmt(v) for k, v in items.items()}
    buf = io.StringIO()
    parser.write(buf)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _fmt(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return ", ".join(repr(float(x)) if not isinstance(x, str) else x for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def get(data, path, default=None, kind=float):
    """Fetch ``section.key`` converted by ``kind``; ConfigError names the key on failure."""
    section, key = path.rsplit(".", 1)
    raw = data.get(section, {}).get(key)
    if raw is None:
        return default
    try:
        if kind is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if kind == "vector":
            return np.array([float(x) for x in raw.split(",") if x.strip()])
        if kind == "list":
            return [x.strip() for x in raw.split(",") if x.strip()]
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot convert {raw!r}: {exc}", key=path) from exc


@dataclass(frozen=True)
class VesselConfig:
    poly: ParamPolynomials = TABLE_II
    geometry: MechanismGeometry = field(default_factory=MechanismGeometry)
    f_max: float = F_MAX
    propulsion: PropulsionTable = None
    dt: float = 0.02
    expansion_rate: float = 0.05
    connector_base: float = 0.6

    def __post_init__(self):
        if self.propulsion is None:
            object.__setattr__(self, "propulsion", PropulsionTable.default(self.f_max))
        validate_vessel(self)

    def as_dict(self):
        c = self.poly.coefficients()
        g = self.geometry
        return {
            "vessel": {"f_max": self.f_max, "dt": self.dt, "expansion_rate": self.expansion_rate,
                       "connector_base": self.connector_base},
            "params": {name.lower(): list(c[i]) for i, name in enumerate(FAMILIES)},
            "mechanism": {"l1": g.l1, "l2": g.l2, "l3": g.l3, "l4": g.l4, "y_p0": g.y_p0,
                          "y_p4": g.y_p4, "theta_min_deg": float(np.degrees(g.theta_min)),
                          "theta_max_deg": float(np.degrees(g.theta_max))},
            "propulsion": {"duty": list(self.propulsion.duty), "force": list(self.propulsion.force)},
        }


def validate_vessel(cfg):
    """Raise ConfigError at the first violated invariant."""
    if not cfg.f_max > 0:
        raise ConfigError("must be positive", key="vessel.f_max")
    if not cfg.dt > 0:
        raise ConfigError("must be positive", key="vessel.dt")
    if not cfg.expansion_rate > 0:
        raise ConfigError("must be positive", key="vessel.expansion_rate")
    grid = np.linspace(0.0, L_MAX, 51)
    coef = cfg.poly.coefficients()
    for i, name in enumerate(FAMILIES):
        if np.any(np.polyval(coef[i], grid) <= 0.0):
            raise ConfigError(f"polynomial is not positive on [0, {L_MAX}]", key=f"params.{name.lower()}")
    table = cfg.propulsion
    if table.force[0] > -cfg.f_max + 1e-9 or table.force[-1] < cfg.f_max - 1e-9:
        raise ConfigError(f"table must cover [-{cfg.f_max}, {cfg.f_max}] N", key="propulsion.force")


def vessel_from_kv(data):
    g_kw = {}
    for k in ("l1", "l2", "l3", "l4", "y_p0", "y_p4"):
        v = get(data, f"mechanism.{k}")
        if v is not None:
            g_kw[k] = v
    for k in ("theta_min", "theta_max"):
        v = get(data, f"mechanism.{k}_deg")
        if v is not None:
            g_kw[k] = radians(v)
    try:
        geometry = MechanismGeometry(**g_kw)
    except GeometryError as exc:
        raise ConfigError(str(exc), key="mechanism") from exc

    coef = TABLE_II.coefficients()
    for i, name in enumerate(FAMILIES):
        v = get(data, f"params.{name.lower()}", kind="vector")
        if v is not None:
            if v.shape != (3,):
                raise ConfigError("expected three coefficients c2, c1, c0", key=f"params.{name.lower()}")
            coef[i] = v
    f_max = get(data, "vessel.f_max", F_MAX)
    if not f_max > 0:
        raise ConfigError("must be positive", key="vessel.f_max")
    duty = get(data, "propulsion.duty", kind="vector")
    force = get(data, "propulsion.force", kind="vector")
    if (duty is None) != (force is None):
        raise ConfigError("duty and force knots must be given together", key="propulsion")
    table = None
    if duty is not None:
        try:
            table = PropulsionTable(duty, force)
        except ValueError as exc:
            raise ConfigError(str(exc), key="propulsion") from exc
    return VesselConfig(
        poly=ParamPolynomials.from_coefficients(coef),
        geometry=geometry,
        f_max=f_max,
        propulsion=table if table is not None else PropulsionTable.default(f_max),
        dt=get(data, "vessel.dt", 0.02),
        expansion_rate=get(data, "vessel.expansion_rate", 0.05),
        connector_base=get(data, "vessel.connector_base", 0.6),
    )


def load_vessel_config(source=None):
    """Load a vessel configuration; ``None`` returns the built-in defaults."""
    if source is None:
        return VesselConfig()
    return vessel_from_kv(read_kv(source))
