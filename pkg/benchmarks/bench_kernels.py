"""Compare the compiled and pure-Python argmax kernels on Myerson-style batches.

    python3 benchmarks/bench_kernels.py --rows 20000
"""

import argparse
import json
import time

import numpy as np

from xmkt import batch, kernels
from xmkt.distributions import Uniform
from xmkt.model import Role
from xmkt.valuation import PiecewisePolynomial


def workload(rows, seed):
    layout = batch.Layout.build([Role.OFFENDER, Role.DEFENDER],
                                [PiecewisePolynomial.polynomial([1.0, -1.0]), PiecewisePolynomial.constant(1.0)])
    rng = np.random.default_rng(seed)
    dists = [Uniform(160, 400), Uniform(0.5, 15)]
    reports = np.column_stack([d.ppf(rng.random(rows)) for d in dists])
    w = batch.virtual_values(dists, reports) * layout.signs
    return layout.breaks, np.einsum("rn,npd->rpd", w, layout.cum)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    breaks, coefs = workload(args.rows, args.seed)
    results = {}
    for name, impl in sorted(kernels.backends().items()):
        secs, (t, v) = best_of(lambda: impl.pp_argmax_batch(breaks, coefs), args.repeat)
        results[name] = (secs, t, v)
        print(json.dumps({"backend": name, "rows": args.rows, "seconds": round(secs, 6),
                          "rows_per_second": round(args.rows / secs)}))
    if len(results) == 2:
        (_, t1, v1), (_, t2, v2) = results["compiled"], results["python"]
        print(json.dumps({"speedup": round(results["python"][0] / results["compiled"][0], 1),
                          "max_abs_t_diff": float(np.abs(t1 - t2).max()),
                          "max_abs_value_diff": float(np.abs(v1 - v2).max())}))


if __name__ == "__main__":
    main()
