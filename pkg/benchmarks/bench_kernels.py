"""Time the numba tiling kernel against the numpy fallback.

    python benchmarks/bench_kernels.py [--configs 64] [--repeat 3]

Both paths search the same (layer, config) grid; the script checks that they
agree and prints per-pair timings and the speedup.
"""

import argparse
import time

import numpy as np

from hwcodesign.accel import tiling
from hwcodesign.accel.space import valid_configs
from hwcodesign.nnspace import ChoiceId, block_workloads, fixed_workloads, supernet


def workload_rows(dataset="cifar10"):
    spec = supernet(dataset)
    head, tail = fixed_workloads(spec)
    rows = {w.as_row() for w in head + tail}
    for pos in range(spec.n_blocks):
        for choice in ChoiceId:
            rows.update(w.as_row() for w in block_workloads(spec, pos, choice))
    return np.array(sorted(rows), dtype=np.int64)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    layers = workload_rows()
    pool = valid_configs()
    configs = pool[np.random.default_rng(args.seed).choice(len(pool), args.configs, replace=False)]
    pairs = len(layers) * len(configs)

    t = time.perf_counter()
    tiling.tiling_table(layers[:1], configs[:1], use_jit=True)
    compile_s = time.perf_counter() - t

    t_jit, a = best_of(lambda: tiling.tiling_table(layers, configs, use_jit=True), args.repeat)
    t_np, b = best_of(lambda: tiling.tiling_table(layers, configs, use_jit=False), args.repeat)
    if not np.allclose(a, b):
        raise SystemExit("numba and numpy kernels disagree")

    print(f"pairs            {pairs} ({len(layers)} layers x {len(configs)} configs)")
    print(f"numba compile    {compile_s:.3f} s (first call, includes cache load)")
    print(f"numba            {t_jit:.4f} s  {1e6 * t_jit / pairs:8.2f} us/pair")
    print(f"numpy            {t_np:.4f} s  {1e6 * t_np / pairs:8.2f} us/pair")
    print(f"speedup          {t_np / t_jit:.1f}x")


if __name__ == "__main__":
    main()
