"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on inputs of production size; outputs of both backends
are compared before timing so a fast-but-wrong backend cannot win.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from uqpde import femlite
from uqpde.kernels import available_backends


def _heat_inputs():
    n = 100
    h = 1.0 / (n + 1)
    lower = np.full(n - 1, 1.0 / h**2)
    upper = lower.copy()
    diag = np.full(n, -2.0 / h**2)
    u0 = np.sin(np.pi * np.linspace(h, 1 - h, n))
    return (lower, diag, upper, u0, np.zeros(n), 0.01 / 224, 224, 1e300)


def _wave_inputs():
    x = np.linspace(-1, 2, 1501)
    u0 = np.exp(-200 * (x - 0.5) ** 2)
    return (u0, 1.0, 500, np.array([500, 1000], dtype=np.int64), 2)


def _cholesky_inputs():
    mesh = femlite.mesh_unit_square(48, 48)
    K = femlite.assemble_p1(mesh, np.ones(mesh.n_nodes)).stiffness
    K = (K + sp.identity(K.shape[0])).tocsc()
    K.sort_indices()
    C = sp.triu(K, format="csc")
    Cp, Ci = C.indptr.astype(np.int32), C.indices.astype(np.int32)
    return Cp, Ci, C.data.copy(), K.shape[0]


def cases(mod):
    heat = _heat_inputs()
    wave = _wave_inputs()
    Cp, Ci, Cx, n = _cholesky_inputs()
    parent, Lp = mod.cholesky_symbolic(Cp, Ci, n)
    Li, Lx, _ = mod.cholesky_numeric(Cp, Ci, Cx, parent, Lp)
    b = np.linspace(0, 1, n)
    return {
        "euler_tridiag (n=100, 224 steps)": lambda: mod.euler_tridiag(*heat),
        "leapfrog_record (1501 nodes, 500 steps)": lambda: mod.leapfrog_record(*wave),
        "cholesky_numeric (n=2401)": lambda: mod.cholesky_numeric(Cp, Ci, Cx, parent, Lp),
        "cholesky_solve (n=2401)": lambda: mod.cholesky_solve(Lp, Li, Lx, b),
    }


def _as_array(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o, dtype=np.float64)) for o in out])
    return np.ravel(np.asarray(out, dtype=np.float64))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    table = {name: cases(mod) for name, mod in backends.items()}
    if len(backends) > 1:
        for label in table["python"]:
            a, c = _as_array(table["python"][label]()), _as_array(table["cython"][label]())
            err = np.max(np.abs(a - c)) / max(1.0, np.max(np.abs(a)))
            if err > 1e-10:
                raise SystemExit(f"{label}: backends disagree (rel err {err:.2e})")
    else:
        print("compiled extension not available; timing the Python backend only")

    print(f"{'kernel':42s}" + "".join(f"{b:>14s}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for label in table["python"]:
        times = {}
        for name in backends:
            fn = table[name][label]
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            times[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
        row = f"{label:42s}" + "".join(f"{times[b] * 1e3:11.3f} ms" for b in backends)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
