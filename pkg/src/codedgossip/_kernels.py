"""Compiled inner loops.

For one packet with per-node uniforms ``u``, node ``v`` is reached at
forwarding probability ``p`` iff some source path has every intermediate
relay ``w`` permitted and ``u[w] <= p``. The least such ``p`` is the minimax
path cost from the source under node weights ``u``. Only its position on the
probe grid matters, and binning commutes with max/min, so the kernel runs the
minimax search directly on grid-bin indices with a bucket queue: one
``O(N + E + G)`` pass gives the packet's reach set at every grid ``p``.

Bin of ``x`` = number of grid points strictly below ``x``, hence
``x <= grid[g]`` iff ``bin(x) <= g``; bin ``G`` means "above every probe".
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def reach_levels(indptr, indices, mask, source, ubin, n_grid, level, head, link, stack):
    """Fill ``level[v]`` with the bin of the least grid ``p`` reaching ``v``.

    ``ubin`` holds per-node activation bins. ``head``/``link``/``stack`` are
    scratch arrays of length ``n_grid`` and ``N``.
    """
    n_nodes = indptr.shape[0] - 1
    for v in range(n_nodes):
        level[v] = n_grid
    for b in range(n_grid):
        head[b] = -1
    level[source] = 0
    top = 0
    stack[top] = source
    top += 1
    for b in range(n_grid):
        w = head[b]
        while w != -1:
            stack[top] = w
            top += 1
            w = link[w]
        while top > 0:
            top -= 1
            w = stack[top]
            for e in range(indptr[w], indptr[w + 1]):
                x = indices[e]
                if level[x] != n_grid:
                    continue
                level[x] = b
                if not mask[x]:
                    continue
                ub = ubin[x]
                if ub <= b:
                    stack[top] = x
                    top += 1
                elif ub < n_grid:
                    link[x] = head[ub]
                    head[ub] = x


@njit(cache=True, nogil=True, inline="always")
def _bin(grid, x):
    lo = 0
    hi = grid.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if grid[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def trial_counts(indptr, indices, mask, source, u, k, ns, grid):
    """Receiver and transmission counts of one trial at every grid point.

    ``u`` has shape (max(ns), N); packet ``j`` uses row ``j``. Rows beyond a
    given ``n`` are ignored, so prefixes are shared across ``ns``. Returns two
    (len(ns), len(grid)) int64 arrays.
    """
    n_nodes = indptr.shape[0] - 1
    n_grid = grid.shape[0]
    hist = np.zeros((n_nodes, n_grid + 1), dtype=np.int64)
    tx_hist = np.zeros(n_grid + 1, dtype=np.int64)
    ubin = np.empty(n_nodes, dtype=np.int64)
    level = np.empty(n_nodes, dtype=np.int64)
    head = np.empty(n_grid, dtype=np.int64)
    link = np.empty(n_nodes, dtype=np.int64)
    stack = np.empty(n_nodes, dtype=np.int64)
    receivers = np.zeros((ns.shape[0], n_grid), dtype=np.int64)
    transmissions = np.zeros((ns.shape[0], n_grid), dtype=np.int64)
    nxt = 0
    for j in range(ns[ns.shape[0] - 1]):
        for v in range(n_nodes):
            ubin[v] = _bin(grid, u[j, v])
        reach_levels(indptr, indices, mask, source, ubin, n_grid, level, head, link, stack)
        for v in range(n_nodes):
            hist[v, level[v]] += 1
            if v != source and mask[v]:
                tx_hist[max(level[v], ubin[v])] += 1
        while nxt < ns.shape[0] and ns[nxt] == j + 1:
            decode_hist = np.zeros(n_grid + 1, dtype=np.int64)
            for v in range(n_nodes):
                acc = 0
                b = 0
                while b < n_grid:
                    acc += hist[v, b]
                    if acc >= k:
                        break
                    b += 1
                decode_hist[b] += 1
            acc_r = 0
            acc_t = j + 1
            for g in range(n_grid):
                acc_r += decode_hist[g]
                acc_t += tx_hist[g]
                receivers[nxt, g] = acc_r
                transmissions[nxt, g] = acc_t
            nxt += 1
    return receivers, transmissions
