"""Compare the compiled kernels with the numpy fallback on training-sized workloads.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import time

import numpy as np

from normsep import _kernels_py as ref

try:
    from normsep import _kernels as compiled
except ImportError:
    compiled = None

CASES = [
    (50, (10, 48)),
    (800, (10, 48)),
    (50, (10, 48, 48)),
    (800, (10, 48, 48)),
    (800, (10, 128, 128)),
]


def time_call(fn, repeats):
    fn()
    t = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t) / repeats * 1e6


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels are not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'m':>5} {'dims':<16} {'kernel':<10} {'numpy us':>10} {'compiled us':>12} {'speedup':>8}")
    for m, dims in CASES:
        theta = rng.normal(size=ref.n_params(dims)) * 0.3
        X = rng.normal(size=(m, dims[0]))
        y = rng.normal(size=m)
        g = np.zeros_like(theta)
        for label, call in (("loss_grad", lambda K: K.loss_grad(theta, dims, X, y, g)),
                            ("forward", lambda K: K.forward(theta, dims, X))):
            t_ref = time_call(lambda: call(ref), args.repeats)
            if compiled is None:
                print(f"{m:>5} {str(dims):<16} {label:<10} {t_ref:>10.1f} {'-':>12} {'-':>8}")
                continue
            t_c = time_call(lambda: call(compiled), args.repeats)
            print(f"{m:>5} {str(dims):<16} {label:<10} {t_ref:>10.1f} {t_c:>12.1f} {t_ref / t_c:>7.2f}x")
    sq = rng.normal(size=(2000, 10))
    t_ref = time_call(lambda: ref.min_pairwise_sqdist(sq), 10)
    line = f"{2000:>5} {'(10,)':<16} {'min_pair':<10} {t_ref:>10.1f}"
    if compiled is not None:
        t_c = time_call(lambda: compiled.min_pairwise_sqdist(sq), 10)
        line += f" {t_c:>12.1f} {t_ref / t_c:>7.2f}x"
    print(line)


if __name__ == "__main__":
    main()
