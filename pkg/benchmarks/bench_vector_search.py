#!/usr/bin/env python3
"""Compare the numba-jitted and pure-numpy exact top-k scan kernels.

Usage: python benchmarks/bench_vector_search.py [n] [dim] [k] [queries]
"""

import sys

from sagekb._bench import run_benchmark

if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:5]]
    defaults = [100_000, 64, 10, 100]
    n, dim, k, queries = args + defaults[len(args) :]
    run_benchmark(n, dim, k, queries)
