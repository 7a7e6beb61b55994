"""
Compare the compiled and numpy backends of the per-trial kernel.

    python benchmarks/bench_kernels.py [--sizes 10000 100000 1000000] [--repeat 5]

Reports the best-of-``repeat`` wall time per call and the throughput in
realizations per second, then checks the two backends agree.
"""

import argparse
import timeit

import numpy as np

from ancsim import NetworkTopology, kernels, sample_channels, uniform_gamma
from ancsim.power import NoisePowers, allocate, thermal_noise_power


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--pairs", type=int, default=2)
    args = p.parse_args(argv)

    k = args.pairs
    # mid-sweep geometry, where the ANC term dominates
    topo = NetworkTopology.symmetric(k, 1000.0, 800.0, 646.0, 646.0)
    alloc = allocate(2.0, np.full(k, 0.75 / k))
    s2 = NoisePowers.uniform(thermal_noise_power(22e6), k)
    backends = kernels.available_backends()

    print(f"K={k}, backends: {', '.join(backends)}")
    print(f"{'size':>10} " + " ".join(f"{b + ' [ms]':>14} {b + ' [M/s]':>14}" for b in backends)
          + ("   speedup" if len(backends) > 1 else ""))
    for n in args.sizes:
        h = sample_channels(uniform_gamma(0.5, k), np.random.default_rng(0), size=n)
        times, outs = {}, {}
        for b in backends:
            fn = lambda: kernels.evaluate_destination(topo, alloc, s2, h, 0, backend=b)
            outs[b] = fn()
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        line = f"{n:>10} " + " ".join(f"{times[b] * 1e3:>14.2f} {n / times[b] / 1e6:>14.2f}"
                                      for b in backends)
        if len(backends) > 1:
            line += f"   {times['python'] / times['cython']:>7.2f}x"
            np.testing.assert_allclose(outs["cython"]["variance"], outs["python"]["variance"],
                                       rtol=1e-12)
        print(line)


if __name__ == "__main__":
    main()
