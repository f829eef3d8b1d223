"""Compare the jit and plain-numpy kernel builds on realistic workloads.

Run:  python3 benchmarks/bench_backends.py

Both implementations live in mixreplay._kernels regardless of which one the
package selected at import time, so a single process can time the pair and
check they agree.  The jit build pays its compile cost on a small warmup
call before timing starts.
"""
import time

import numpy as np

from mixreplay import _kernels


def bench(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def report(name, numpy_s, numba_s):
    if numba_s is None:
        print(f"{name:<28} numpy {numpy_s * 1e3:8.2f} ms   numba      n/a")
        return
    print(f"{name:<28} numpy {numpy_s * 1e3:8.2f} ms   "
          f"numba {numba_s * 1e3:8.2f} ms   x{numpy_s / numba_s:5.1f}")


def main():
    rng = np.random.default_rng(0)
    have_numba = _kernels.knn_select_numba is not None
    print(f"selected backend: {_kernels.BACKEND}"
          f"{'' if have_numba else '  (numba unavailable)'}")

    # knn: 50k-row buffer, batch of 100 queries, k=10
    points = rng.normal(size=(50_000, 4))
    queries = rng.normal(size=(100, 4))
    order = np.arange(50_000, dtype=np.int64)
    exclude = np.full(100, -1, dtype=np.int64)
    if have_numba:
        _kernels.knn_select_numba(points[:64], queries[:2], order[:64], 3,
                                  exclude[:2])
    args = (points, queries, order, 10, exclude)
    report("knn_select 100x50k k=10",
           bench(_kernels.knn_select_numpy, args, 5),
           bench(_kernels.knn_select_numba, args, 5) if have_numba else None)

    # sum tree writes: 100k single-leaf updates against a 2^17 tree
    cap = 1 << 17
    tree_a = np.zeros(2 * cap)
    tree_b = np.zeros(2 * cap)
    idxs = rng.integers(0, cap, size=100_000).astype(np.int64)
    vals = rng.random(100_000)
    if have_numba:
        _kernels.sumtree_set_numba(tree_b.copy(), cap, idxs[:8], vals[:8])
    report("sumtree_set 100k writes",
           bench(_kernels.sumtree_set_numpy, (tree_a, cap, idxs, vals), 3),
           bench(_kernels.sumtree_set_numba, (tree_b, cap, idxs, vals), 3)
           if have_numba else None)
    _kernels.sumtree_set_numpy(tree_a, cap, idxs, vals)
    _kernels.sumtree_set_numpy(tree_b, cap, idxs, vals)

    # sum tree descent: 100k prioritized draws from the tree built above
    us = rng.random(100_000) * tree_a[1]
    if have_numba:
        _kernels.sumtree_locate_numba(tree_b, cap, us[:8])
    got_np = _kernels.sumtree_locate_numpy(tree_a, cap, us)
    report("sumtree_locate 100k draws",
           bench(_kernels.sumtree_locate_numpy, (tree_a, cap, us), 3),
           bench(_kernels.sumtree_locate_numba, (tree_b, cap, us), 3)
           if have_numba else None)

    if have_numba:
        same_knn = np.array_equal(
            _kernels.knn_select_numpy(*args), _kernels.knn_select_numba(*args))
        same_loc = np.array_equal(
            got_np, _kernels.sumtree_locate_numba(tree_b, cap, us))
        same_tree = np.array_equal(tree_a, tree_b)
        print(f"agreement: knn={same_knn} locate={same_loc} tree={same_tree}")


if __name__ == "__main__":
    main()
