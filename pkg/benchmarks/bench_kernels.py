"""Compare the compiled and numpy adjacency kernels.

    python3 benchmarks/bench_kernels.py [--sizes 200 500 1000 2000] [--repeat 5]

Prints the median wall time per call of ``adjacency_grad`` and
``adjacency_sums`` on random latent-distance graphs, the speed-up of the
compiled kernel and the largest relative disagreement between backends.
"""

import argparse
import statistics
import time

import numpy as np

from jane import kernels
from jane.genmodel import LatentState, sample_graph


def median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 500, 1000, 2000])
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    found = kernels.backends()
    if "compiled" not in found:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'n':>6} {'edges':>7} {'kernel':<6} " + " ".join(f"{name + ' ms':>12}" for name in found)
          + f" {'speed-up':>9} {'max rel diff':>13}")
    rng = np.random.default_rng(args.seed)
    for n in args.sizes:
        U = rng.standard_normal((n, args.k)) * np.sqrt(n) / 20.0
        g = sample_graph(LatentState(U, 1.0), rng, warn=False)
        for label, fn in (("grad", kernels.adjacency_grad), ("sums", kernels.adjacency_sums)):
            times = {name: median_time(lambda name=name: fn(g, U, 1.0, backend=name), args.repeat)
                     for name in found}
            outs = {name: np.atleast_1d(np.asarray(fn(g, U, 1.0, backend=name), dtype=np.float64))
                    for name in found}
            ref = outs["python"]
            diff = max(float(np.max(np.abs(o - ref)) / max(1e-300, float(np.max(np.abs(ref)))))
                       for o in outs.values())
            speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
            cols = " ".join(f"{times[name] * 1e3:12.3f}" for name in found)
            print(f"{n:>6} {g.num_edges:>7} {label:<6} {cols} {speedup:9.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
