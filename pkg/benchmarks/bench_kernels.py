"""Wall-clock comparison of the compiled and pure-Python step kernels.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import statistics
import time

import numpy as np

from solitonlab import HAVE_COMPILED, ode_s, ode_t, special
from solitonlab.model import AnsatzParams, SpecialState, StateS

STEADY = AnsatzParams(0.0, 1, 1, 2.0)


def workloads():
    shoot = ode_t.ShootingConfig(F0=1.0, f2=-0.5, horizon=50.0)
    s_state = StateS(0.0, 1.0, 0.5, 2.0, 0.3, 0.0, 0.1)
    return {
        "shoot t-system to t=50": lambda b: ode_t.shoot(STEADY, shoot, backend=b),
        "s-system to s=20": lambda b: ode_s.integrate_s(STEADY, s_state, 20.0, backend=b),
        "reduced system to underflow": lambda b: special.integrate_special(
            1, 0.0, SpecialState(0.0, 2.0, 1.0, 1.0), 1.0, backend=b),
    }


def bench(fn, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        tr = fn(backend)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), tr


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"] + (["compiled"] if HAVE_COMPILED else [])
    if not HAVE_COMPILED:
        print("compiled kernel not built; timing the fallback only")
    print(f"{'workload':<30} {'steps':>6} " + " ".join(f"{b + ' [ms]':>14}" for b in backends)
          + ("  speedup  max |diff|" if HAVE_COMPILED else ""))
    for name, fn in workloads().items():
        res = {b: bench(fn, b, args.repeat) for b in backends}
        row = f"{name:<30} {res['python'][1].meta['steps']:>6} "
        row += " ".join(f"{1e3 * res[b][0]:>14.2f}" for b in backends)
        if HAVE_COMPILED:
            diff = np.max(np.abs(res["python"][1].y - res["compiled"][1].y))
            row += f"  {res['python'][0] / res['compiled'][0]:7.1f}x  {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
