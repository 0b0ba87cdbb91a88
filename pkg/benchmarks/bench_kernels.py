"""Compare the numba and numpy kernel paths.

    python benchmarks/bench_kernels.py [--repeat 5]

Times population repair/evaluation on a large random instance, exhaustive
prefix enumeration near the 10**7 guard, and a full GA run on the bundled
instance. JIT compilation is excluded (kernels are warmed first).
"""

import argparse
import time

import numpy as np

from spatial_mobility import _kernels
from spatial_mobility.ga import GAConfig, evolve
from spatial_mobility.instance import paper_instance, random_instance


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--population", type=int, default=20000)
    args = parser.parse_args()

    _kernels.warmup()
    rng = np.random.default_rng(0)
    big = random_instance(rng, sites=(8, 8), list_size=(10, 25), capacity=(20, 60))
    L = big.layout
    genes = rng.integers(0, L.cardinality + 1, size=(args.population, L.cardinality.size)).astype(np.int64)

    card = np.array([24, 24, 24, 24, 24], dtype=np.int64)  # 25**5 ~ 9.8e6 tuples
    weights = -np.sort(-rng.integers(0, 100, size=(5, 24)), axis=1).astype(float)
    prefix = np.concatenate([np.zeros((5, 1)), np.cumsum(weights, axis=1)], axis=1)

    paper = paper_instance()
    cases = {
        f"repair {args.population}x{L.cardinality.size}":
            lambda b: _kernels.repair_population(genes.copy(), L.dest, L.weights, L.capacities, b),
        f"evaluate {args.population}x{L.cardinality.size}":
            lambda b: _kernels.evaluate_population(genes, L.prefix, b),
        "enumerate 25^5 tuples":
            lambda b: _kernels.best_prefix_tuple(prefix, card, 40, b),
    }
    backends = sorted(_kernels.IMPLEMENTATIONS)
    print(f"{'case':34s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
        speedup = t["numpy"] / t["numba"] if "numba" in t else float("nan")
        print(f"{name:34s}" + "".join(f"{t[b] * 1e3:10.1f}ms" for b in backends) + f"{speedup:9.1f}x")

    saved = _kernels.BACKEND
    t = {}
    for b in backends:
        _kernels.BACKEND = b
        t[b] = best_of(lambda: evolve(paper, GAConfig(seed=1, max_generations=200, stagnation_limit=200)),
                       args.repeat)
    _kernels.BACKEND = saved
    speedup = t["numpy"] / t["numba"] if "numba" in t else float("nan")
    print(f"{'evolve paper, 200 generations':34s}" + "".join(f"{t[b] * 1e3:10.1f}ms" for b in backends)
          + f"{speedup:9.1f}x")


if __name__ == "__main__":
    main()
