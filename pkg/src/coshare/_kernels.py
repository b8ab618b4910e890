"""Compiled graph kernels (CSR adjacency, unweighted metrics).

Pure-python twins of the numba kernels are kept here too: small graphs use
them to avoid JIT latency, and the test suite cross-checks both paths.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

# below this node count the python paths are faster than paying JIT cost
JIT_MIN_NODES = 2000


def build_csr(n: int, edges: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric CSR (indptr, indices) with sorted neighbor lists."""
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int32)
    cursor = indptr[:-1].copy()
    for u, v in edges:
        indices[cursor[u]] = v
        cursor[u] += 1
        indices[cursor[v]] = u
        cursor[v] += 1
    for i in range(n):
        indices[indptr[i] : indptr[i + 1]].sort()
    return indptr, indices


@njit(cache=True, parallel=True)
def _nb_bfs_sums(indptr, indices, n):
    sums = np.zeros(n, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    for s in prange(n):
        dist = np.full(n, -1, dtype=np.int32)
        queue = np.empty(n, dtype=np.int32)
        dist[s] = 0
        queue[0] = s
        head, tail = 0, 1
        total = 0
        reached = 1
        while head < tail:
            x = queue[head]
            head += 1
            dx = dist[x]
            for j in range(indptr[x], indptr[x + 1]):
                y = indices[j]
                if dist[y] < 0:
                    dist[y] = dx + 1
                    total += dx + 1
                    reached += 1
                    queue[tail] = y
                    tail += 1
        sums[s] = total
        counts[s] = reached
    return sums, counts


def _py_bfs_sums(indptr, indices, n):
    sums = np.zeros(n, dtype=np.int64)
    counts = np.zeros(n, dtype=np.int64)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        queue = [s]
        head = 0
        total = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            dx = dist[x]
            for y in indices[indptr[x] : indptr[x + 1]]:
                if dist[y] < 0:
                    dist[y] = dx + 1
                    total += dx + 1
                    queue.append(y)
        sums[s] = total
        counts[s] = len(queue)
    return sums, counts


def bfs_distance_sums(indptr, indices, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per source: sum of hop distances to reachable nodes, reachable count
    (source included in the count, not the sum)."""
    if n >= JIT_MIN_NODES:
        return _nb_bfs_sums(indptr, indices, n)
    return _py_bfs_sums(indptr, indices, n)


@njit(cache=True, parallel=True)
def _nb_triangles(indptr, indices, n):
    tri = np.zeros(n, dtype=np.int64)
    for u in prange(n):
        count = 0
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            # merge-intersect sorted neighbor lists of u and v
            a, b = indptr[u], indptr[v]
            while a < indptr[u + 1] and b < indptr[v + 1]:
                x, y = indices[a], indices[b]
                if x == y:
                    count += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
        tri[u] = count // 2  # each triangle met via two incident edges
    return tri


def _py_triangles(indptr, indices, n):
    neighbors = [set(indices[indptr[u] : indptr[u + 1]].tolist()) for u in range(n)]
    tri = np.zeros(n, dtype=np.int64)
    for u in range(n):
        count = 0
        for v in neighbors[u]:
            count += len(neighbors[u] & neighbors[v])
        tri[u] = count // 2
    return tri


def triangle_counts(indptr, indices, n: int) -> np.ndarray:
    if n >= JIT_MIN_NODES:
        return _nb_triangles(indptr, indices, n)
    return _py_triangles(indptr, indices, n)


def component_labels(indptr, indices, n: int) -> np.ndarray:
    """Connected-component labels, numbered by smallest member node index."""
    labels = np.full(n, -1, dtype=np.int64)
    next_label = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        labels[s] = next_label
        queue = [s]
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            for y in indices[indptr[x] : indptr[x + 1]]:
                if labels[y] < 0:
                    labels[y] = next_label
                    queue.append(int(y))
        next_label += 1
    return labels
