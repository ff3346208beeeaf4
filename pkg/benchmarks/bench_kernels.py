"""Numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once before timing so compilation is excluded.  The
end-to-end rows run the public path routines under the default backend.
"""
import argparse
import time
import warnings

import numpy as np

import cartanflow as cf
from cartanflow import _kernels as K
from cartanflow import weyl as W


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def kernel_cases():
    rng = np.random.default_rng(0)
    vs = rng.normal(size=(20000, 8))
    us5, vs5 = rng.normal(size=(2000, 5)), rng.normal(size=(2000, 5))
    _, inv, sg = W.group_table("B", 5)
    jets = [rng.normal(size=5) for _ in range(4)]
    coords = rng.normal(size=8)
    return [
        ("chamber_sort_batch B, 20000 x 8", lambda j: K.chamber_sort_batch(vs, K.TYPE_B, use_jit=j)),
        ("weyl_min_batch B5, 2000 pairs", lambda j: K.weyl_min_batch(us5, vs5, inv, sg, use_jit=j)),
        ("match_enumerate B5, 1 jet", lambda j: K.match_enumerate(*jets, 1e-3, inv, sg, use_jit=j)),
        ("root_gaps B8, 1 point", lambda j: K.root_gaps(coords, K.TYPE_B, 1e-8, use_jit=j)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    warnings.simplefilter("ignore", cf.MatchAmbiguous)
    print(f"default backend: {K.backend()}")
    print(f"{'kernel':36s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, fn in kernel_cases():
        t_np = best_of(lambda: fn(False), args.repeat)
        if K.JIT_ENABLED:
            t_jit = best_of(lambda: fn(True), args.repeat)
            print(f"{name:36s} {1e3 * t_jit:12.3f} {1e3 * t_np:12.3f} {t_np / t_jit:8.1f}")
        else:
            print(f"{name:36s} {'-':>12s} {1e3 * t_np:12.3f} {'-':>8s}")
    rellich = cf.builtin("rellich")
    rotation = cf.builtin("rotation-flow")
    rows = [
        ("sorted_curve rellich, 2001", lambda: cf.sorted_curve(rellich, (-1, 1, 2001))),
        ("c1_lift chamber-cross, 401", lambda: cf.c1_lift(cf.builtin("chamber-cross"), (-1, 1, 401))),
        ("analytic_flow rotation, 6284", lambda: cf.analytic_flow(rotation, (0, 2 * np.pi, 6284))),
    ]
    print(f"\n{'end to end (' + K.backend() + ')':36s} {'time [s]':>12s}")
    for name, fn in rows:
        print(f"{name:36s} {best_of(fn, 1):12.3f}")


if __name__ == "__main__":
    main()
