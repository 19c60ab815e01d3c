"""Time the prior kernels: compiled vs NumPy, plus an oracle lower bound.

    python benchmarks/bench_sse.py --size 640 --repeat 5

Both backends must agree bit for bit; the script checks this before timing.
The oracle figure extrapolates the per-pixel combine cost of the nested-loop
reference (tests/oracles.py) measured on a small tile, so it is a lower
bound on what a full naive run would take.
"""

import argparse
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from shipprior import available_backends
from shipprior.sse import sse_multi_scale


def time_backend(img, scales, backend, repeat):
    sse_multi_scale(img, scales, backend=backend)  # warm-up
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        sse_multi_scale(img, scales, backend=backend)
        runs.append(time.perf_counter() - t0)
    return runs


def oracle_lower_bound(img, scales, tile):
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
    from oracles import NaivePrior

    naive = NaivePrior(img)
    y0 = x0 = (min(img.shape) - tile) // 2
    pixels = [(x, y) for y in range(y0, y0 + tile) for x in range(x0, x0 + tile)]
    for n in scales:
        for x, y in pixels:
            naive.pixel(x, y, n)
    t0 = time.perf_counter()
    for x, y in pixels:
        max(naive.pixel(x, y, n) for n in scales)
    return (time.perf_counter() - t0) / len(pixels) * img.size


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=640)
    ap.add_argument("--scales", default="1,2,3")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--tile", type=int, default=32, help="oracle tile edge; 0 skips the oracle")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    scales = tuple(int(s) for s in args.scales.split(","))
    img = np.random.default_rng(args.seed).uniform(0, 255, (args.size, args.size))
    backends = available_backends()
    if len(backends) > 1:
        ref = sse_multi_scale(img, scales, backend=backends[0])
        for b in backends[1:]:
            if not np.array_equal(ref, sse_multi_scale(img, scales, backend=b)):
                sys.exit(f"backend {b} disagrees with {backends[0]}")

    print(f"image {args.size}x{args.size}, scales {scales}, {args.repeat} runs")
    medians = {}
    for b in backends:
        runs = time_backend(img, scales, b, args.repeat)
        medians[b] = statistics.median(runs)
        print(f"  {b:9s} median {medians[b] * 1e3:9.1f} ms   min {min(runs) * 1e3:9.1f} ms")
    if "compiled" in medians and "numpy" in medians:
        print(f"  compiled is {medians['numpy'] / medians['compiled']:.1f}x faster than numpy")
    if args.tile:
        bound = oracle_lower_bound(img, scales, min(args.tile, args.size))
        print(f"  oracle    >= {bound:9.1f} s (extrapolated)")
        for b, t in medians.items():
            print(f"  {b} speedup over oracle >= {bound / t:.0f}x")


if __name__ == "__main__":
    main()
