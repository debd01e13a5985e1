"""Static SVG figures rendered from emitted CSV/JSON artifacts only."""
import csv
import json

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "morphusv"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [row for row in r if row]
    return header, rows


def _numeric(path):
    header, rows = _read_csv(path)
    return header, np.array([[float(x) for x in row] for row in rows]).reshape(-1, len(header))


def plot_path(log_csv, out_svg, ref_csv=None, title=None):
    """Top view of a run from its log CSV (and optional reference CSV with x, y)."""
    plt = _pyplot()
    header, d = _numeric(log_csv)
    fig, ax = plt.subplots(figsize=(5, 5))
    if ref_csv is not None:
        rh, r = _numeric(ref_csv)
        ax.plot(r[:, rh.index("x")], r[:, rh.index("y")], "k--", lw=1, label="reference")
    ax.plot(d[:, header.index("x")], d[:, header.index("y")], lw=1.2, label="vessel")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, out_svg)


def plot_tracking_table(metrics_json, out_svg):
    """Grouped bars of position MAE and effort per shape, controller and form."""
    plt = _pyplot()
    with open(metrics_json) as fh:
        rows = json.load(fh)["results"]
    labels = [f"{r['shape']}\n{r['controller']}/{r['form'][0]}" for r in rows]
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(max(5, 0.7 * len(rows)), 6), sharex=True)
    x = np.arange(len(rows))
    a1.bar(x, [r["mae_position"] for r in rows], color="tab:blue")
    a1.set_ylabel("position MAE [m]")
    a2.bar(x, [r["effort"] for r in rows], color="tab:orange")
    a2.set_ylabel("effort [N^2 s]")
    a2.set_xticks(x)
    a2.set_xticklabels(labels, fontsize=7)
    return _save(fig, out_svg)


def plot_identification(report_json, out_svg):
    """Per-length parameters with fitted quadratics and pre/post-regression residuals."""
    plt = _pyplot()
    with open(report_json) as fh:
        rep = json.load(fh)
    ls = np.array(rep["lengths"])
    grid = np.linspace(0.0, 0.5, 101)
    fams = list(rep["coefficients"])
    fig, axes = plt.subplots(1, len(fams) + 1, figsize=(3 * (len(fams) + 1), 3))
    for ax, f in zip(axes, fams):
        ax.plot(ls, [p[f] for p in rep["parameters"]], "o", ms=4)
        ax.plot(grid, np.polyval(rep["coefficients"][f], grid), "-", lw=1)
        ax.set_title(f)
        ax.set_xlabel("l [m]")
    ax = axes[-1]
    w = 0.02
    ax.bar(ls - w / 2, rep["residual_pre_regression"], w, label="identified")
    ax.bar(ls + w / 2, rep["residual_post_regression"], w, label="regressed")
    ax.set_title("velocity error")
    ax.set_xlabel("l [m]")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_svg)


def plot_docking(report_json, out_svg):
    """Box plot of time to dock per form, success rate in the labels."""
    plt = _pyplot()
    with open(report_json) as fh:
        rep = json.load(fh)
    forms = [k for k in rep["forms"]]
    data = [rep["forms"][k]["times"] or [np.nan] for k in forms]
    labels = [f"{k}\n{(rep['forms'][k]['success_rate'] or 0) * 100:.0f}%" for k in forms]
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.boxplot(data)
    ax.set_xticks(range(1, len(forms) + 1))
    ax.set_xticklabels(labels)
    ax.set_ylabel("time to dock [s]")
    ax.set_title(rep.get("water", ""))
    return _save(fig, out_svg)


def plot_mission(frames_csv, targets, out_svg):
    plt = _pyplot()
    header, rows = _read_csv(frames_csv)
    ix, iy = header.index("x"), header.index("y")
    xy = np.array([[float(r[ix]), float(r[iy])] for r in rows]).reshape(-1, 2)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(xy[:, 0], xy[:, 1], lw=0.8)
    t = np.asarray(targets, dtype=float).reshape(-1, 2)
    if len(t):
        ax.plot(t[:, 0], t[:, 1], "s", ms=10, mfc="none", color="tab:brown")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    return _save(fig, out_svg)
