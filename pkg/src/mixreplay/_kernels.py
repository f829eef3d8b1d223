"""Hot numeric kernels: exact k-nearest-neighbor selection and sum-tree ops.

Each kernel exists twice: a numba-compiled loop and a pure-numpy fallback
that produces identical output.  The active backend is chosen once at
import time from the MIXREPLAY_BACKEND environment variable:

    MIXREPLAY_BACKEND=numba   require numba, fail loudly if missing
    MIXREPLAY_BACKEND=numpy   force the fallback
    unset / auto              numba when importable, else numpy

Both neighbor paths accumulate squared distances in the same dimension
order, so selections agree bitwise across backends, ties included.
"""
from __future__ import annotations

import os

import numpy as np

_INT64_MAX = np.iinfo(np.int64).max


# -- pure numpy implementations ----------------------------------------


def knn_select_numpy(points: np.ndarray, queries: np.ndarray, order: np.ndarray,
                     k: int, exclude: np.ndarray) -> np.ndarray:
    """Row indices of the k nearest points per query, ties by lowest order.

    Parameters:
        points: (N, d) float64 candidate rows.
        queries: (m, d) float64 query rows.
        order: (N,) int64 unique tie-break keys, ascending wins.
        k: neighbors per query, 1 <= k <= number of eligible rows.
        exclude: (m,) int64 row index to skip per query, -1 for none.
    """
    m = queries.shape[0]
    d = points.shape[1]
    out = np.empty((m, k), dtype=np.int64)
    for qi in range(m):
        diff = points - queries[qi]
        sq = diff * diff
        acc = sq[:, 0].copy()
        for j in range(1, d):
            acc += sq[:, j]
        if exclude[qi] >= 0:
            acc[exclude[qi]] = np.inf
        out[qi] = np.lexsort((order, acc))[:k]
    return out


def sumtree_set_numpy(tree: np.ndarray, leaf_base: int, idxs: np.ndarray,
                      vals: np.ndarray) -> None:
    """Write leaf priorities and refresh every ancestor from its children.

    Recomputing parents as left+right (rather than adding deltas) keeps
    internal sums exactly consistent with the leaves below them.
    """
    for t in range(idxs.shape[0]):
        pos = leaf_base + int(idxs[t])
        tree[pos] = vals[t]
        pos >>= 1
        while pos >= 1:
            tree[pos] = tree[2 * pos] + tree[2 * pos + 1]
            pos >>= 1


def sumtree_locate_numpy(tree: np.ndarray, leaf_base: int,
                         us: np.ndarray) -> np.ndarray:
    """Descend the tree for each cumulative value in `us`.

    `us` must lie in [0, root total).  Returns leaf indices.  A landing on
    a zero-mass leaf (possible only through float rounding at the upper
    boundary) is nudged left to the nearest populated leaf.
    """
    n = us.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pos = np.ones(n, dtype=np.int64)
    u = us.astype(np.float64)
    # full binary tree: every lane reaches the leaf level together
    while pos[0] < leaf_base:
        left = 2 * pos
        tl = tree[left]
        go_left = u < tl
        u = np.where(go_left, u, u - tl)
        pos = np.where(go_left, left, left + 1)
    for t in range(n):
        p = int(pos[t])
        while tree[p] == 0.0 and p > leaf_base:
            p -= 1
        pos[t] = p
    return pos - leaf_base


# -- numba implementations ---------------------------------------------

_numba_err = None
try:
    from numba import njit
except ImportError as exc:  # pragma: no cover - exercised only without numba
    njit = None
    _numba_err = exc

if njit is not None:

    @njit(cache=True)
    def _knn_select_jit(points, queries, order, k, exclude, out):
        m = queries.shape[0]
        n = points.shape[0]
        d = points.shape[1]
        best_d = np.empty(k, dtype=np.float64)
        best_o = np.empty(k, dtype=np.int64)
        best_i = np.empty(k, dtype=np.int64)
        for qi in range(m):
            for t in range(k):
                best_d[t] = np.inf
                best_o[t] = _INT64_MAX
                best_i[t] = -1
            ex = exclude[qi]
            for i in range(n):
                if i == ex:
                    continue
                acc = 0.0
                for j in range(d):
                    diff = queries[qi, j] - points[i, j]
                    acc += diff * diff
                o = order[i]
                last = k - 1
                if acc > best_d[last] or (acc == best_d[last] and o >= best_o[last]):
                    continue
                t = last
                while t > 0 and (best_d[t - 1] > acc
                                 or (best_d[t - 1] == acc and best_o[t - 1] > o)):
                    best_d[t] = best_d[t - 1]
                    best_o[t] = best_o[t - 1]
                    best_i[t] = best_i[t - 1]
                    t -= 1
                best_d[t] = acc
                best_o[t] = o
                best_i[t] = i
            for t in range(k):
                out[qi, t] = best_i[t]

    def knn_select_numba(points, queries, order, k, exclude):
        out = np.empty((queries.shape[0], k), dtype=np.int64)
        _knn_select_jit(points, queries, order, k, exclude, out)
        return out

    @njit(cache=True)
    def _sumtree_set_jit(tree, leaf_base, idxs, vals):
        for t in range(idxs.shape[0]):
            pos = leaf_base + idxs[t]
            tree[pos] = vals[t]
            pos >>= 1
            while pos >= 1:
                tree[pos] = tree[2 * pos] + tree[2 * pos + 1]
                pos >>= 1

    def sumtree_set_numba(tree, leaf_base, idxs, vals):
        _sumtree_set_jit(tree, leaf_base, idxs, vals)

    @njit(cache=True)
    def _sumtree_locate_jit(tree, leaf_base, us, out):
        for t in range(us.shape[0]):
            u = us[t]
            pos = 1
            while pos < leaf_base:
                left = 2 * pos
                if u < tree[left]:
                    pos = left
                else:
                    u -= tree[left]
                    pos = left + 1
            while tree[pos] == 0.0 and pos > leaf_base:
                pos -= 1
            out[t] = pos - leaf_base
        return out

    def sumtree_locate_numba(tree, leaf_base, us):
        out = np.empty(us.shape[0], dtype=np.int64)
        _sumtree_locate_jit(tree, leaf_base, us.astype(np.float64), out)
        return out

else:
    knn_select_numba = None
    sumtree_set_numba = None
    sumtree_locate_numba = None


# -- backend selection --------------------------------------------------

def _pick_backend() -> str:
    choice = os.environ.get("MIXREPLAY_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if njit is not None else "numpy"
    if choice == "numba":
        if njit is None:
            raise ImportError(
                "MIXREPLAY_BACKEND=numba but numba is not importable"
            ) from _numba_err
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(
        f"MIXREPLAY_BACKEND must be 'numba', 'numpy', or 'auto', got {choice!r}"
    )


BACKEND = _pick_backend()

if BACKEND == "numba":
    knn_select = knn_select_numba
    sumtree_set = sumtree_set_numba
    sumtree_locate = sumtree_locate_numba
else:
    knn_select = knn_select_numpy
    sumtree_set = sumtree_set_numpy
    sumtree_locate = sumtree_locate_numpy
