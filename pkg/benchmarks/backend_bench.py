"""Time the compiled episode kernel against the pure-numpy twin.

Both backends must produce identical bits; this script checks that while
measuring throughput on a synthetic action with a configurable mix of
independent outcomes and one exclusive group.

    python3 benchmarks/backend_bench.py --episodes 2000000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from avrisk._kernels import episode_costs_numba, episode_costs_numpy
from avrisk.simulate import CHUNK, _substream


def build_layout(n_independent: int, group_size: int, rng: np.random.Generator):
    ind_p = rng.uniform(0.0001, 0.3, n_independent)
    ind_m = rng.uniform(1.0, 50_000.0, n_independent)
    grp_p = rng.uniform(0.01, 0.2, group_size)
    grp_p /= max(grp_p.sum() * 1.5, 1.0)  # keep the group sum below 1
    grp_m = rng.uniform(100.0, 10_000.0, group_size)
    grp_off = np.array([0, group_size], dtype=np.int64)
    return ind_p, ind_m, grp_off, grp_p, grp_m


def run(kernel, episodes: int, seed: int, layout) -> tuple[float, float]:
    """Kernel-only time; the identical RNG draws stay outside the clock."""
    ind_p, ind_m, grp_off, grp_p, grp_m = layout
    n_cols = len(ind_p) + len(grp_p)
    total = 0.0
    elapsed = 0.0
    done = 0
    chunk = 0
    while done < episodes:
        rows = min(CHUNK, episodes - done)
        u = _substream(seed, chunk).random((rows, n_cols))
        start = time.perf_counter()
        costs = kernel(u, ind_p, ind_m, grp_off, grp_p, grp_m)
        elapsed += time.perf_counter() - start
        total += float(np.sum(costs))
        done += rows
        chunk += 1
    return elapsed, total


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=1_000_000)
    parser.add_argument("--independent", type=int, default=6)
    parser.add_argument("--group-size", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    layout = build_layout(args.independent, args.group_size, np.random.default_rng(42))

    # warm up the JIT outside the timed region
    warm = _substream(args.seed, 0).random((8, args.independent + args.group_size))
    episode_costs_numba(warm, *layout[:2], *layout[2:])

    t_numba, sum_numba = run(episode_costs_numba, args.episodes, args.seed, layout)
    t_numpy, sum_numpy = run(episode_costs_numpy, args.episodes, args.seed, layout)

    rate_numba = args.episodes / t_numba
    rate_numpy = args.episodes / t_numpy
    print(f"episodes           {args.episodes}")
    print(f"numba              {t_numba:8.3f} s   {rate_numba:12.0f} episodes/s")
    print(f"numpy              {t_numpy:8.3f} s   {rate_numpy:12.0f} episodes/s")
    print(f"speedup            {t_numpy / t_numba:8.2f} x")
    print(f"identical totals   {sum_numba == sum_numpy}")


if __name__ == "__main__":
    main()
