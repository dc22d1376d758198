"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, and the
speedup of the compiled backend when it is built. An end-to-end section runs
the dual solver and the grid oracle in a fresh interpreter per backend, since
the backend is fixed at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from phiproj import kernels, make_family


def cases(rng):
    fam = make_family(0.5)
    x = rng.exponential(size=1_000_000)
    t = rng.uniform(-5.0, 1.9, size=1_000_000)
    n, dim = 6, 2
    w = rng.dirichlet(np.ones(n))
    base = rng.uniform(0.5, 1.5, n)
    basis = np.linalg.qr(rng.normal(size=(n, dim)))[0]
    axis = np.linspace(-1.0, 1.0, 401)
    coeffs = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, dim)
    return {
        "phi_values (1e6)": lambda k: k.phi_values(fam._kind, fam.gamma, x),
        "conj_values (1e6)": lambda k: k.conj_values(fam._kind, fam.gamma, t),
        "grid_objective (401^2, n=6)": lambda k: k.grid_objective(
            fam._kind, fam.gamma, w, base, basis, coeffs),
    }


END_TO_END = """
import timeit, warnings
import numpy as np
from phiproj import ProbabilityMeasure, build_problem, make_family, oracle_solve, solve_dual
rng = np.random.default_rng(1)
n = 2001
x = (np.arange(n) + 0.5) / n
big = build_problem(ProbabilityMeasure.uniform(n), np.column_stack([x - 0.25, x**2 - 0.1]),
                    make_family(0.5))
P = ProbabilityMeasure(rng.dirichlet(np.ones(5)), renormalize=True)
G = rng.normal(size=(5, 2))
small = build_problem(P, G - rng.dirichlet(np.ones(5)) @ G, make_family(0.5))
warnings.simplefilter("ignore")
t1 = min(timeit.repeat(lambda: solve_dual(big), number=1, repeat=REPEAT))
t2 = min(timeit.repeat(lambda: oracle_solve(small), number=1, repeat=REPEAT))
print(t1, t2)
"""


def end_to_end(pure, repeat):
    env = dict(os.environ, PHIPROJ_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END.replace("REPEAT", str(repeat))],
                         env=env, capture_output=True, text=True, check=True)
    return [float(v) for v in out.stdout.split()]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy backend only")
    rng = np.random.default_rng(0)
    names = sorted(backends)
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, fn in cases(rng).items():
        times = {}
        for name in names:
            mod = backends[name]
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{label:32s}" + "".join(f"{times[n] * 1e3:10.2f}ms" for n in names)
        if "compiled" in times:
            row += f"  {times['python'] / times['compiled']:8.2f}x"
        print(row)

    print()
    labels = ("solve_dual (n=2001, l=2)", "oracle_solve (n=5, dim 2)")
    runs = {name: end_to_end(name == "python", args.repeat) for name in names}
    for i, label in enumerate(labels):
        row = f"{label:32s}" + "".join(f"{runs[n][i] * 1e3:10.2f}ms" for n in names)
        if "compiled" in runs:
            row += f"  {runs['python'][i] / runs['compiled'][i]:8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
