"""Pure-Python graph traversal kernels.

Reference implementation of the traversal primitives; the compiled module in
``_cytraversal.pyx`` must produce identical outputs (slot-for-slot) so the two
backends are interchangeable. All functions operate on the CSR incident-edge
arrays built by :mod:`gskgc.kg`:

    indptr  int64[n_entities + 1]
    nbr     int32[n_slots]   other endpoint of the edge at each slot

Slots for one entity are contiguous in ``[indptr[u], indptr[u+1])``.
"""

from collections import deque

import numpy as np


def bfs_distance(indptr, nbr, src, dst, cap):
    """Undirected BFS hop distance from src to dst; -1 if > cap or unreachable."""
    if src == dst:
        return 0
    if cap <= 0:
        return -1
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du >= cap:
            continue
        for slot in range(indptr[u], indptr[u + 1]):
            v = nbr[slot]
            if dist[v] < 0:
                dist[v] = du + 1
                if v == dst:
                    return du + 1
                queue.append(v)
    return -1


def bfs_distances(indptr, nbr, src, radius):
    """Distances from src to every entity within radius; -1 elsewhere."""
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[src] = 0
    if radius <= 0:
        return dist
    queue = deque([src])
    while queue:
        u = queue.popleft()
        du = dist[u]
        if du >= radius:
            continue
        for slot in range(indptr[u], indptr[u + 1]):
            v = nbr[slot]
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return dist


def enum_paths(indptr, nbr, src, max_hops, first_allowed, cap):
    """Enumerate simple paths out of src in DFS preorder.

    A path is a sequence of edge slots; every prefix of an emitted path was
    emitted before it. The first hop is restricted to the slots of src whose
    entry in ``first_allowed`` (length = degree of src) is nonzero; later hops
    may use any edge to a not-yet-visited entity. Entities never repeat within
    a path. Enumeration stops after ``cap`` paths.

    Returns (flat, offsets): path i is flat[offsets[i]:offsets[i+1]].
    """
    flat = []
    offsets = [0]
    if max_hops <= 0 or cap <= 0:
        return (np.asarray(flat, dtype=np.int32),
                np.asarray(offsets, dtype=np.int64))
    n = len(indptr) - 1
    visited = np.zeros(n, dtype=np.uint8)
    visited[src] = 1
    base = int(indptr[src])

    nodes = [src] + [0] * max_hops           # node chain, nodes[L] scanned at level L
    cursors = [base] + [0] * max_hops        # next slot to examine per level
    path = [0] * max_hops                    # slots of the current path
    level = 0
    count = 0

    while level >= 0:
        u = nodes[level]
        end = int(indptr[u + 1])
        cur = cursors[level]
        found = -1
        while cur < end:
            v = nbr[cur]
            if not visited[v] and (level > 0 or first_allowed[cur - base]):
                found = cur
                break
            cur += 1
        if found < 0:
            cursors[level] = cur
            level -= 1
            if level >= 0:
                visited[nodes[level + 1]] = 0
            continue
        cursors[level] = found + 1
        path[level] = found
        flat.extend(path[: level + 1])
        offsets.append(len(flat))
        count += 1
        if count >= cap:
            break
        if level + 1 < max_hops:
            v = nbr[found]
            visited[v] = 1
            nodes[level + 1] = v
            cursors[level + 1] = int(indptr[v])
            level += 1

    return (np.asarray(flat, dtype=np.int32),
            np.asarray(offsets, dtype=np.int64))
