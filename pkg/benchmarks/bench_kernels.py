"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the two hot loops directly, then an end-to-end periodic solve and IVP run in
a subprocess per backend (the backend is fixed at import time).
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from efklab import _kernels_py

try:
    from efklab import _ckernels
except ImportError:
    _ckernels = None

END_TO_END = """
import json, time
import efklab
from efklab.problem import *
from efklab.periodic_solver import picard_iterate
from efklab.delay_integrator import solve_ivp
f = ForcingSpec.from_harmonics([{"c": 1.0, "fn": "cos", "m": 1, "j": 1}], 1.0)
p = ProblemSpec(1.0, 1.0, DelaySpec((0.01,)), parse_nonlinearity("tanh_scaled(10, 1)", 1, [10.0]), f,
                Discretization(64, None, 2e-4), Tolerances(1e-12, 40))
t0 = time.perf_counter(); u, rep = picard_iterate(p); t1 = time.perf_counter()
solve_ivp(p, u, 0.15); t2 = time.perf_counter()
print(json.dumps({"backend": efklab.BACKEND, "picard_s": t1 - t0, "ivp_s": t2 - t1, "iterations": rep.iterations}))
"""


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    N, steps = 64, 5000
    a0, E, w0, w1 = (rng.random(N) for _ in range(4))
    phi = rng.standard_normal((steps, N))
    K, Q = 5000, 20000
    knots = np.cumsum(rng.uniform(0.5, 1.5, K))
    vals, dr, dl = (rng.standard_normal((K, N)) for _ in range(3))
    q = rng.uniform(knots[0], knots[-1], Q)

    backends = {"python": _kernels_py}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    rows = {
        f"etd_sweep {steps}x{N}": lambda m: (lambda: m.etd_sweep(a0, E, w0, w1, phi)),
        f"hermite_eval {Q} q, {K} k": lambda m: (lambda: m.hermite_eval(knots, vals, dr, dl, q, 1e-9)),
    }
    for name, make in rows.items():
        t = {b: bench(make(m), args.repeat) for b, m in backends.items()}
        line = f"{name:<28}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in backends)
        if len(t) == 2:
            line += f"{t['python'] / t['cython']:>11.1f}x"
        print(line)

    print("\nend to end (periodic solve + IVP, N=64, h=2e-4):")
    for b in backends:
        env = {**os.environ, "EFKLAB_PURE_PYTHON": "1" if b == "python" else "0"}
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        r = json.loads(out.stdout)
        print(f"  {r['backend']:<8} picard {r['picard_s']:.3f}s ({r['iterations']} iterations), ivp {r['ivp_s']:.3f}s")


if __name__ == "__main__":
    main()
