# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph traversal kernels.

Must stay output-identical to ``_pytraversal.py`` (the pure-Python reference);
tests/test_kernels.py enforces parity on random graphs.
"""

import numpy as np

cimport cython
from libc.string cimport memset


def bfs_distance(indptr, nbr, long src, long dst, long cap):
    """Undirected BFS hop distance from src to dst; -1 if > cap or unreachable."""
    if src == dst:
        return 0
    if cap <= 0:
        return -1
    cdef long[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int[::1] nbr_v = np.ascontiguousarray(nbr, dtype=np.int32)
    cdef Py_ssize_t n = indptr_v.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    queue_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] dist = dist_arr
    cdef int[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0
    cdef long u, v, slot, du
    dist[src] = 0
    queue[tail] = <int> src
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if du >= cap:
            continue
        for slot in range(indptr_v[u], indptr_v[u + 1]):
            v = nbr_v[slot]
            if dist[v] < 0:
                dist[v] = <int> (du + 1)
                if v == dst:
                    return du + 1
                queue[tail] = <int> v
                tail += 1
    return -1


def bfs_distances(indptr, nbr, long src, long radius):
    """Distances from src to every entity within radius; -1 elsewhere."""
    cdef long[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int[::1] nbr_v = np.ascontiguousarray(nbr, dtype=np.int32)
    cdef Py_ssize_t n = indptr_v.shape[0] - 1
    dist_arr = np.full(n, -1, dtype=np.int32)
    cdef int[::1] dist = dist_arr
    dist[src] = 0
    if radius <= 0:
        return dist_arr
    queue_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0
    cdef long u, v, slot, du
    queue[tail] = <int> src
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if du >= radius:
            continue
        for slot in range(indptr_v[u], indptr_v[u + 1]):
            v = nbr_v[slot]
            if dist[v] < 0:
                dist[v] = <int> (du + 1)
                queue[tail] = <int> v
                tail += 1
    return dist_arr


def enum_paths(indptr, nbr, long src, long max_hops, first_allowed, long cap):
    """Enumerate simple paths out of src in DFS preorder.

    Same contract as the pure-Python reference: first hop restricted by the
    ``first_allowed`` mask over src's slots, no repeated entities in a path,
    emission stops after ``cap`` paths. Returns (flat, offsets) arrays.
    """
    if max_hops <= 0 or cap <= 0:
        return (np.empty(0, dtype=np.int32), np.zeros(1, dtype=np.int64))
    cdef long[::1] indptr_v = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef int[::1] nbr_v = np.ascontiguousarray(nbr, dtype=np.int32)
    cdef unsigned char[::1] first_v = np.ascontiguousarray(first_allowed, dtype=np.uint8)
    cdef Py_ssize_t n = indptr_v.shape[0] - 1

    visited_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] visited = visited_arr
    flat_arr = np.empty(cap * max_hops, dtype=np.int32)
    offsets_arr = np.empty(cap + 1, dtype=np.int64)
    cdef int[::1] flat = flat_arr
    cdef long[::1] offsets = offsets_arr
    nodes_arr = np.empty(max_hops + 1, dtype=np.int64)
    cursors_arr = np.empty(max_hops + 1, dtype=np.int64)
    path_arr = np.empty(max_hops, dtype=np.int64)
    cdef long[::1] nodes = nodes_arr
    cdef long[::1] cursors = cursors_arr
    cdef long[::1] path = path_arr

    cdef long base = indptr_v[src]
    cdef long level = 0, count = 0, flat_len = 0
    cdef long u, end, cur, found, v, i

    visited[src] = 1
    nodes[0] = src
    cursors[0] = base
    offsets[0] = 0

    while level >= 0:
        u = nodes[level]
        end = indptr_v[u + 1]
        cur = cursors[level]
        found = -1
        while cur < end:
            v = nbr_v[cur]
            if visited[v] == 0 and (level > 0 or first_v[cur - base] != 0):
                found = cur
                break
            cur += 1
        if found < 0:
            cursors[level] = cur
            level -= 1
            if level >= 0:
                visited[nbr_v[path[level]]] = 0
            continue
        cursors[level] = found + 1
        path[level] = found
        for i in range(level + 1):
            flat[flat_len] = <int> path[i]
            flat_len += 1
        count += 1
        offsets[count] = flat_len
        if count >= cap:
            break
        if level + 1 < max_hops:
            v = nbr_v[found]
            visited[v] = 1
            nodes[level + 1] = v
            cursors[level + 1] = indptr_v[v]
            level += 1

    return flat_arr[:flat_len], offsets_arr[: count + 1]
