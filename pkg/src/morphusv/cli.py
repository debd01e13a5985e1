"""Command-line entry point: simulate, identify, track, dock, bridge, replay.

Every command resolves an effective options dict (flags over config file over
built-in defaults), runs from that dict alone, and writes a manifest with the
dict and sha256 checksums of all artifacts. ``replay`` re-runs a manifest and
compares checksums.

Exit codes: 0 success, 1 domain failure, 2 configuration error.
"""
import argparse
import csv
import glob
import hashlib
import json
import os
import sys
import tempfile
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, kernels
from .config import VesselConfig, read_kv, vessel_from_kv, write_kv
from .errors import ConfigError, IdentificationError, MorphUSVError, PlanningError, RankError

OUT_ENV = "MORPHUSV_OUT"
MANIFEST = "manifest.json"
VESSEL_SECTIONS = ("vessel", "params", "mechanism", "propulsion")
SHAPES = ("circle", "square", "hourglass")
CONTROLLERS = ("nmpc", "pid")
FORM_NAMES = ("contracted", "expanded")

DEFAULTS = {
    "simulate": {"seed": 0, "scenario": None},
    "identify": {"seed": 0, "lengths": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], "noise": 0.0,
                 "duration": 20.0, "logs": []},
    "track": {"seed": 0, "shapes": list(SHAPES), "controllers": list(CONTROLLERS),
              "forms": list(FORM_NAMES), "water": "calm", "repetitions": 3, "speed": 0.2},
    "dock": {"seed": 0, "forms": list(FORM_NAMES), "water": "turbulent", "repetitions": 20,
             "timeout": 300.0, "trial_logs": False},
    "bridge": {"seed": 0, "blocks": 6, "water": "calm", "mission": {}},
}

# option name -> kind, for values read from a config file section
KINDS = {"seed": int, "lengths": "floats", "noise": float, "duration": float, "logs": "list",
         "shapes": "list", "controllers": "list", "forms": "list", "water": str,
         "repetitions": int, "speed": float, "timeout": float, "trial_logs": bool, "blocks": int}


class CommandFailed(MorphUSVError):
    """A run finished but its domain outcome is a failure (artifacts are still written)."""


# files and manifest

def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def write_manifest(out, command, effective, config_paths, artifacts, status):
    man = {
        "command": command,
        "config_paths": {p: sha256(p) for p in config_paths},
        "seed": effective.get("seed"),
        "output_dir": os.path.abspath(out),
        "effective": effective,
        "artifacts": {os.path.relpath(a, out): sha256(a) for a in sorted(set(artifacts))},
        "status": status,
        "backend": kernels.BACKEND,
        "version": __version__,
    }
    write_atomic(os.path.join(out, MANIFEST),
                 json.dumps(man, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return man


def pool_map(fn, items, workers=1):
    """Ordered map, fanned out to processes when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# effective configuration

def _split_list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [x.strip() for x in str(value).split(",") if x.strip()]


def _convert(key, raw):
    kind = KINDS.get(key, str)
    try:
        if kind == "list":
            return _split_list(raw)
        if kind == "floats":
            return [float(x) for x in _split_list(raw)]
        if kind is bool:
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot convert {raw!r}", key=key) from exc


def _expand_all(values, allowed, key):
    values = list(allowed) if values in (["all"], "all") else _split_list(values)
    for v in values:
        if v not in allowed:
            raise ConfigError(f"unknown value {v!r}, expected one of {', '.join(allowed)}", key=key)
    return values


def resolve(command, args):
    """Effective options for ``command`` and the config paths that fed them."""
    eff = json.loads(json.dumps(DEFAULTS[command]))
    paths = []
    data = {}
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        paths.append(args.config)
        data = read_kv(args.config)
    section = data.get(command, {})
    for k, raw in section.items():
        if k not in eff:
            raise ConfigError("unknown option", key=f"{command}.{k}")
        eff[k] = _convert(k, raw)
    vessel = {s: data[s] for s in VESSEL_SECTIONS if s in data}
    if vessel:
        eff["vessel"] = vessel
    if command == "simulate":
        eff["scenario"] = {s: v for s, v in data.items() if s not in VESSEL_SECTIONS} or None
    if command == "bridge" and "mission" in data:
        eff["mission"] = dict(data["mission"])
    if command == "identify" and eff["logs"] and args.config:
        base = os.path.dirname(os.path.abspath(args.config))
        eff["logs"] = [p if os.path.isabs(p) else os.path.join(base, p) for p in eff["logs"]]
    flags = {"seed": "seed", "shape": "shapes", "controller": "controllers", "form": "forms",
             "water": "water", "repetitions": "repetitions", "blocks": "blocks",
             "lengths": "lengths", "noise": "noise", "logs": "logs", "speed": "speed",
             "timeout": "timeout", "trial_logs": "trial_logs", "duration": "duration"}
    for flag, key in flags.items():
        v = getattr(args, flag, None)
        if v is None or v is False:
            continue
        if command == "simulate":
            eff[flag] = v
        elif key in eff:
            eff[key] = _convert(key, v) if isinstance(v, str) else v
    if "shapes" in eff:
        eff["shapes"] = _expand_all(eff["shapes"], SHAPES, "shape")
        eff["controllers"] = _expand_all(eff["controllers"], CONTROLLERS, "controller")
    if "forms" in eff:
        eff["forms"] = _expand_all(eff["forms"], FORM_NAMES, "form")
    for k in ("repetitions", "blocks"):
        if k in eff and eff[k] < 0:
            raise ConfigError("must be nonnegative", key=k)
    return eff, paths


def _vessel(eff):
    return vessel_from_kv(eff["vessel"]) if eff.get("vessel") else VesselConfig()


# commands

def run_simulate(eff, out):
    from .experiments import FORMS, PRESET_DIR
    from .sim.engine import run_scenario, scenario_from_kv
    from . import plots

    data = eff["scenario"] or {"scenario": {"duration": "60", "controller": "constant",
                                            "constant_u": "0, 6, 0, 6"}}
    data = json.loads(json.dumps(data))
    sc = data.setdefault("scenario", {})
    sc["seed"] = str(eff["seed"])
    if eff.get("form"):
        sc["expansion"] = repr(FORMS[_expand_all(eff["form"], FORM_NAMES, "form")[0]])
    if eff.get("duration"):
        sc["duration"] = repr(float(eff["duration"]))
    if eff.get("controller"):
        sc["controller"] = _expand_all(eff["controller"], CONTROLLERS, "controller")[0]
    if eff.get("shape"):
        data.setdefault("reference", {})["shape"] = _expand_all(eff["shape"], SHAPES, "shape")[0]
    if sc.get("controller") in CONTROLLERS and "reference" not in data:
        data["reference"] = {"shape": "square"}
    if eff.get("water"):
        path = eff["water"]
        if path in ("calm", "turbulent"):
            path = os.path.join(PRESET_DIR, f"{path}.ini")
        data["waves"] = read_kv(path).get("waves", {})
    for s in VESSEL_SECTIONS:
        if s in eff.get("vessel", {}):
            data[s] = eff["vessel"][s]
    eff["resolved_scenario"] = data
    cfg = scenario_from_kv(data)
    log = run_scenario(cfg)
    arts = list(log.save(os.path.join(out, "log")))
    arts.append(plots.plot_path(arts[0], os.path.join(out, "path.svg"), title="simulate"))
    summary = {"samples": len(log), "t_end": float(log.t[-1]) if len(log) else 0.0,
               "events": {k: len(log.events_of(k)) for k in sorted({e["kind"] for e in log.events})}}
    arts.append(write_json(os.path.join(out, "summary.json"), summary))
    print(f"simulated {summary['t_end']:.2f} s, {summary['samples']} samples")
    if log.events_of("abort"):
        raise CommandFailed(f"run aborted: {log.events_of('abort')[0]['error']}", arts)
    return arts


def _read_log_sets(paths):
    from .sim.maneuvers import ManeuverLog

    files = []
    for p in paths:
        if os.path.isdir(p):
            found = sorted(glob.glob(os.path.join(p, "*.csv")))
            if not found:
                raise ConfigError(f"no log files in {p}", key="logs")
            files += found
        elif os.path.exists(p):
            files.append(p)
        else:
            raise ConfigError(f"log file not found: {p}", key="logs")
    groups = {}
    for f in files:
        try:
            log = ManeuverLog.from_csv(f)
        except ValueError as exc:
            raise ConfigError(str(exc), key="logs") from exc
        groups.setdefault(log.expansion, []).append(log)
    return [groups[k] for k in sorted(groups)]


def run_identify(eff, out):
    from .sim.maneuvers import maneuver_set
    from .sysid import identify_sweep
    from .vessel.params import eval_params
    from . import plots

    vessel = _vessel(eff)
    if eff["logs"]:
        sets = _read_log_sets(eff["logs"])
        source = "logs"
    else:
        lengths = sorted(set(eff["lengths"]))
        for l in lengths:
            if not 0.0 <= l <= 0.5:
                raise ConfigError(f"length {l} outside [0, 0.5]", key="lengths")
        if len(lengths) < 3:
            raise RankError(f"need at least 3 distinct expansion lengths, got {len(lengths)}")
        sets = [maneuver_set(eval_params(vessel.poly, l), l, eff["duration"],
                             seed=eff["seed"] * 100 + i, noise=eff["noise"])
                for i, l in enumerate(lengths)]
        source = "synthetic"
    if len(sets) < 3:
        raise RankError(f"need at least 3 distinct expansion lengths, got {len(sets)}")
    try:
        ident = identify_sweep(sets, seed=eff["seed"])
    except IdentificationError as exc:
        path = write_json(os.path.join(out, "diagnostics.json"), exc.diagnostics)
        raise CommandFailed(f"identification failed: {exc}", [path]) from exc
    rep = ident.report()
    rep["source"] = source
    if source == "synthetic":
        rep["relative_error"] = ident.relative_error(vessel.poly)
    arts = [write_json(os.path.join(out, "report.json"), rep)]
    poly_path = os.path.join(out, "polynomials.ini")
    write_kv({"params": {f.lower(): list(c) for f, c in rep["coefficients"].items()}}, poly_path)
    arts.append(poly_path)
    arts.append(plots.plot_identification(arts[0], os.path.join(out, "residuals.svg")))
    for l, pre, post in zip(rep["lengths"], rep["residual_pre_regression"],
                            rep["residual_post_regression"]):
        print(f"l={l:.2f}  residual {pre:.4g} -> {post:.4g}")
    if "relative_error" in rep:
        print("max relative error: " + ", ".join(f"{k} {v:.2%}" for k, v in rep["relative_error"].items()))
    return arts


def _track_job(job):
    from .experiments import load_water, tracking_trial

    shape, ctl, form, seed, water, speed, vessel = job
    wd = load_water(water)
    metrics, log = tracking_trial(shape, ctl, form, seed, wd, vessel, speed=speed)
    metrics["solver_max_iter"] = sum(1 for e in log.events_of("solver") if e["status"] == "max_iter")
    metrics["controller_errors"] = len(log.events_of("controller_error"))
    return metrics, log


def run_track(eff, out, workers=1):
    from .control import build_reference
    from .experiments import SHAPE_SIZES, load_water
    from . import plots

    load_water(eff["water"])
    vessel = _vessel(eff)
    combos = [(s, c, f) for s in eff["shapes"] for c in eff["controllers"] for f in eff["forms"]]
    jobs = [(s, c, f, eff["seed"] + i, eff["water"], eff["speed"], vessel)
            for s, c, f in combos for i in range(eff["repetitions"])]
    results = pool_map(_track_job, jobs, workers)
    rows, arts = [], []
    n = eff["repetitions"]
    for k, (s, c, f) in enumerate(combos):
        chunk = results[k * n:(k + 1) * n]
        if not chunk:
            continue
        ms = [m for m, _ in chunk]
        row = {"shape": s, "controller": c, "form": f, "water": eff["water"], "trials": n}
        for key in ("mae_position", "mae_yaw", "effort"):
            row[key] = float(np.mean([m[key] for m in ms]))
        row["solver_max_iter"] = int(sum(m["solver_max_iter"] for m in ms))
        row["controller_errors"] = int(sum(m["controller_errors"] for m in ms))
        rows.append(row)
        stem = os.path.join(out, f"track_{s}_{c}_{f}")
        log = chunk[0][1]
        arts += log.save(stem)
        ref = build_reference(s, SHAPE_SIZES[s], eff["speed"])
        ref_path = stem + "_reference.csv"
        with open(ref_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "psi"])
            for t, q in zip(ref.t, ref.q):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in q[:3]])
        arts.append(ref_path)
        arts.append(plots.plot_path(stem + ".csv", stem + ".svg", ref_path, f"{s} {c} {f}"))
        print(f"{s:9s} {c:4s} {f:10s}  MAE {row['mae_position']:.4f} m  "
              f"{np.degrees(row['mae_yaw']):.2f} deg  effort {row['effort']:.1f}")
    table = os.path.join(out, "metrics.csv")
    cols = ["shape", "controller", "form", "water", "trials", "mae_position", "mae_yaw", "effort",
            "solver_max_iter", "controller_errors"]
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    arts.append(table)
    arts.append(write_json(os.path.join(out, "metrics.json"), {"results": rows}))
    if rows:
        arts.append(plots.plot_tracking_table(arts[-1], os.path.join(out, "metrics.svg")))
    return arts


def _dock_job(job):
    from .experiments import docking_trial, load_water

    form, seed, water, vessel, timeout, keep = job
    r = docking_trial(form, seed, load_water(water), vessel, timeout=timeout)
    if not keep:
        r.pop("log")
    return r


def run_dock(eff, out, workers=1):
    from .experiments import load_water, summarize_docking
    from . import plots

    load_water(eff["water"])
    vessel = _vessel(eff)
    n = eff["repetitions"]
    jobs = [(f, eff["seed"] + i, eff["water"], vessel, eff["timeout"], eff["trial_logs"])
            for f in eff["forms"] for i in range(n)]
    results = pool_map(_dock_job, jobs, workers)
    arts = []
    report = {"water": eff["water"], "repetitions": n, "forms": {}}
    rows = []
    for k, f in enumerate(eff["forms"]):
        trials = results[k * n:(k + 1) * n]
        for r in trials:
            if "log" in r:
                arts += r.pop("log").save(os.path.join(out, f"dock_{f}_{r['seed']}"))
            rows.append(r)
        s = summarize_docking(trials)
        s.pop("trials")
        s["attempts"] = [r["attempts"] for r in trials]
        s["quartiles"] = (np.percentile(s["times"], [0, 25, 50, 75, 100]).tolist()
                          if s["times"] else None)
        report["forms"][f] = s
        rate = "n/a" if s["success_rate"] is None else f"{s['success_rate']:.0%}"
        mean = "n/a" if s["mean_time"] is None else f"{s['mean_time']:.1f} s"
        print(f"{f:10s} success {rate}  mean time {mean}  ({n} trials)")
    path = os.path.join(out, "trials.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["form", "seed", "success", "time", "attempts"])
        for r in rows:
            w.writerow([r["form"], r["seed"], int(r["success"]),
                        "" if r["time"] is None else repr(r["time"]), r["attempts"]])
    arts.append(path)
    arts.append(write_json(os.path.join(out, "report.json"), report))
    if n > 0:
        arts.append(plots.plot_docking(arts[-1], os.path.join(out, "docking.svg")))
    return arts


def _frames(log, frame_dt=0.5):
    """Animation frames: pose, expansion, phase and blocks placed every ``frame_dt`` s."""
    step = max(1, int(round(frame_dt / log.dt)))
    phases = [(e["t"], e["phase"]) for e in log.events if e["kind"] == "phase"]
    placed = [e["t"] for e in log.events if e["kind"] == "block_placed"]
    pt = [p[0] for p in phases]
    out = []
    for row in log.rows[::step]:
        t = row[0]
        i = bisect_right(pt, t + 1e-9) - 1
        out.append((t, row[1], row[2], row[3], row[7], phases[i][1] if i >= 0 else "",
                    bisect_right(placed, t + 1e-9)))
    return out


def run_bridge(eff, out):
    from .experiments import load_water
    from .mission import mission_report, plan_bridge, plan_from_kv, run_mission
    from . import plots

    wd = load_water(eff["water"])
    data = {"mission": dict(eff["mission"])}
    data["mission"]["blocks"] = str(eff["blocks"])
    plan = plan_from_kv(data)
    state, log = run_mission(plan, _vessel(eff), wd, seed=eff["seed"])
    arts = list(log.save(os.path.join(out, "mission_log")))
    rep = mission_report(log)
    rep["plan"] = {"blocks": plan.blocks, "targets": [list(t) for t in plan.targets],
                   "pickup": list(plan.pickup)}
    arts.append(write_json(os.path.join(out, "summary.json"), rep))
    phases = [e for e in log.events if e["kind"] == "phase"]
    path = os.path.join(out, "timeline.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "start", "end", "duration"])
        ends = [e["t"] for e in phases[1:]] + [float(log.t[-1])]
        for e, end in zip(phases, ends):
            w.writerow([e["phase"], repr(float(e["t"])), repr(float(end)), repr(float(end - e["t"]))])
    arts.append(path)
    path = os.path.join(out, "frames.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "psi", "l", "phase", "blocks_placed"])
        for t, x, y, psi, l, ph, nb in _frames(log):
            w.writerow([*(repr(float(v)) for v in (t, x, y, psi, l)), ph, nb])
    arts.append(path)
    arts.append(plots.plot_mission(path, plan.targets, os.path.join(out, "mission.svg")))
    print(f"blocks placed {rep['blocks_placed']}/{plan.blocks} in {rep['total_time']:.1f} s, "
          f"retries {sum(rep['retries'].values())}")
    if not rep["success"]:
        raise CommandFailed(f"mission aborted in {rep['failed_phase']}: {rep['failure']}", arts)
    return arts


RUNNERS = {"simulate": run_simulate, "identify": run_identify, "track": run_track,
           "dock": run_dock, "bridge": run_bridge}
POOLED = ("track", "dock")


def execute(command, eff, out, config_paths=(), workers=1):
    """Run ``command`` with effective options into ``out``; returns (exit code, manifest)."""
    os.makedirs(out, exist_ok=True)
    kw = {"workers": workers} if command in POOLED else {}
    status, code = "ok", 0
    try:
        arts = RUNNERS[command](eff, out, **kw)
    except CommandFailed as exc:
        arts = exc.args[1] if len(exc.args) > 1 else []
        status, code = f"failed: {exc.args[0]}", 1
        print(f"error: {exc.args[0]}", file=sys.stderr)
    man = write_manifest(out, command, eff, config_paths, arts, status)
    return code, man


def replay(manifest_path, out=None, workers=1):
    """Re-run a manifest; returns (exit code, list of mismatched artifacts)."""
    with open(manifest_path) as fh:
        man = json.load(fh)
    if man.get("backend") != kernels.BACKEND:
        print(f"warning: manifest backend {man.get('backend')} differs from {kernels.BACKEND}",
              file=sys.stderr)
    for p, digest in man.get("config_paths", {}).items():
        if not os.path.exists(p) or sha256(p) != digest:
            print(f"note: config {p} changed since the run; the recorded effective config is used",
                  file=sys.stderr)
    out = out or os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "replay")
    if os.path.abspath(out) == os.path.abspath(os.path.dirname(manifest_path)):
        raise ConfigError("replay output must differ from the original run directory", key="out")
    eff = man["effective"]
    eff.pop("resolved_scenario", None)
    code, new = execute(man["command"], eff, out, (), workers)
    bad = sorted(k for k in set(man["artifacts"]) | set(new["artifacts"])
                 if man["artifacts"].get(k) != new["artifacts"].get(k))
    for k in bad:
        print(f"mismatch: {k}", file=sys.stderr)
    if not bad:
        print(f"replay identical: {len(new['artifacts'])} artifacts")
    return (1 if bad else code), bad


# argument parsing

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override its values")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<command>-<seed>)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo")

    p = argparse.ArgumentParser(prog="morphusv", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run one scenario")
    s.add_argument("--form", choices=FORM_NAMES)
    s.add_argument("--controller", choices=CONTROLLERS)
    s.add_argument("--shape", choices=SHAPES)
    s.add_argument("--water")
    s.add_argument("--duration", type=float)

    s = sub.add_parser("identify", parents=[common], help="identification sweep and regression")
    s.add_argument("--lengths", help="comma-separated expansion lengths")
    s.add_argument("--noise", type=float, help="relative velocity noise for synthetic logs")
    s.add_argument("--duration", type=float)
    s.add_argument("--logs", action="append", help="maneuver log file or directory (repeatable)")

    s = sub.add_parser("track", parents=[common], help="trajectory tracking comparison")
    s.add_argument("--shape", help="circle, square, hourglass, comma list or all")
    s.add_argument("--controller", help="nmpc, pid, comma list or all")
    s.add_argument("--form", help="contracted, expanded or comma list")
    s.add_argument("--water")
    s.add_argument("--repetitions", type=int)
    s.add_argument("--speed", type=float)

    s = sub.add_parser("dock", parents=[common], help="Monte Carlo docking trials")
    s.add_argument("--form", help="contracted, expanded or comma list")
    s.add_argument("--water")
    s.add_argument("--repetitions", type=int)
    s.add_argument("--timeout", type=float)
    s.add_argument("--trial-logs", action="store_true", help="also write every trial's log")

    s = sub.add_parser("bridge", parents=[common], help="bridge-building mission")
    s.add_argument("--blocks", type=int)
    s.add_argument("--water")

    s = sub.add_parser("replay", help="re-run a manifest and compare artifact checksums")
    s.add_argument("manifest")
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=1)
    return p


def default_out(command, eff):
    root = os.environ.get(OUT_ENV, "runs")
    return os.path.join(root, f"{command}-{eff.get('seed', 0)}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            code, _ = replay(args.manifest, args.out, args.workers)
            return code
        if args.command == "identify" and args.logs:
            args.logs = [p for item in args.logs for p in _split_list(item)]
        eff, paths = resolve(args.command, args)
        out = args.out or default_out(args.command, eff)
        code, _ = execute(args.command, eff, out, paths, args.workers)
        print(f"outputs in {out}")
        return code
    except (ConfigError, PlanningError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MorphUSVError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
