"""Compare the compiled and pure-Python integration kernels.

Times the three hot paths of the NMPC: a horizon rollout, the rollout with
sensitivities and the box-constrained QP. Each backend is checked against the
other on the same inputs before timing.

    python3 benchmarks/bench_kernels.py [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from morphusv import kernels
from morphusv.vessel.dynamics import param_vector
from morphusv.vessel.params import TABLE_II, eval_params

N = 20
DT = 0.1


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    p = param_vector(eval_params(TABLE_II, 0.25))
    q0 = np.array([0.3, -0.2, 0.4, 0.15, -0.05, 0.1])
    U = rng.uniform(-8.0, 8.0, size=(N, 4))
    A = rng.standard_normal((4 * N, 4 * N))
    G = A @ A.T + 4 * N * np.eye(4 * N)
    g = rng.standard_normal(4 * N) * 50.0
    lo, hi = np.full(4 * N, -1.0), np.full(4 * N, 1.0)
    return p, q0, U, G, g, lo, hi


def cases(mod, arm=0.6435):
    p, q0, U, G, g, lo, hi = _inputs()
    return {
        "rollout": lambda: mod.rollout(q0, U, p, arm, DT, 1),
        "rollout_sensitivity": lambda: mod.rollout_sensitivity(q0, U, p, arm, DT),
        "box_qp": lambda: mod.box_qp(G, g, lo, hi),
    }


def _agree(a, b):
    if isinstance(a, tuple):
        return all(_agree(x, y) for x, y in zip(a, b))
    if isinstance(a, (int, float, np.ndarray)):
        return np.allclose(a, b, rtol=1e-9, atol=1e-9)
    return True


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    found = kernels.backends()
    print(f"active backend: {kernels.BACKEND}; available: {', '.join(found)}")
    table = {name: cases(mod) for name, mod in found.items()}
    names = list(table["python"])
    if "cython" in table:
        for c in names:
            if not _agree(table["python"][c](), table["cython"][c]()):
                raise SystemExit(f"backends disagree on {c}")
    print(f"{'kernel':22s}" + "".join(f"{b:>14s}" for b in found) + ("   speedup" if len(found) > 1 else ""))
    for c in names:
        times = {b: min(timeit.repeat(table[b][c], number=args.repeat, repeat=3)) / args.repeat
                 for b in found}
        row = f"{c:22s}" + "".join(f"{times[b] * 1e6:11.1f} us" for b in found)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
