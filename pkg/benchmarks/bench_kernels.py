"""Time the compiled kernels against their pure-Python fallbacks.

    python3 benchmarks/bench_kernels.py [--samples 4000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from gpclab import _accel
from gpclab.carima import CarimaModel
from gpclab.controller import ControllerSpec
from gpclab.kernels import allpole_filter, closed_loop, plant_response
from gpclab.simkit import SignalGen, as_signal, controller_for
from gpclab.closedloop import reference_drive


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    K = args.samples

    model = CarimaModel(a=[-0.5, -0.8], b=[0, 0, 2, 1, 0.5])
    gains = controller_for(model, ControllerSpec(4, lam=1.0))
    a, b = np.asarray(model.a), np.asarray(model.b)
    r = reference_drive(gains, lambda k: float(k), K)
    w = np.zeros(K)
    chi = as_signal(SignalGen("noise", seed=1), K).samples
    den = np.array([1.0, 0.58, 0.34, -0.02])
    u = np.random.default_rng(0).normal(size=K)

    cases = {
        "closed_loop": (closed_loop, (a, b, np.asarray(gains.psi_row), gains.e0, r, w, chi, 1e12)),
        "allpole_filter": (allpole_filter, (den, chi)),
        "plant_response": (plant_response, (a, b, u, chi)),
    }
    print(f"backend: {_accel.backend()}  samples: {K}  best of {args.repeat}")
    print(f"{'kernel':<16}{'compiled [ms]':>15}{'python [ms]':>14}{'speedup':>10}")
    for name, (fn, fargs) in cases.items():
        fn(*fargs)  # compile
        fast = best_of(lambda: fn(*fargs), args.repeat)
        slow = best_of(lambda: fn.py_func(*fargs), args.repeat)
        print(f"{name:<16}{fast * 1e3:>15.3f}{slow * 1e3:>14.3f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
