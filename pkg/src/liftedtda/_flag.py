"""Compiled kernels for persistent homology of flag (clique) filtrations.

Degree 0 uses union-find with the elder rule.  Degree 1 reduces the
coboundary matrix (edges against triangles) with clearing: edges that
merge components are skipped, and a column whose smallest cofacet is still
unclaimed is paired without being materialised.

A triangle is keyed by ``rank(max edge) * N + opposite vertex``, which is a
total order compatible with the filtration.
"""
from __future__ import annotations

import heapq

import numpy as np
from numba import njit, types
from numba.typed import Dict, List


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def h0_pairs(n, vrank, ei, ej):
    """Elder-rule merges.  Returns ``(young_vertex, edge_rank)`` per merge,
    the negative-edge mask and the surviving roots."""
    parent = np.arange(n)
    young = np.empty(n, dtype=np.int64)
    killer = np.empty(n, dtype=np.int64)
    negative = np.zeros(len(ei), dtype=np.bool_)
    k = 0
    for r in range(len(ei)):
        a = _find(parent, ei[r])
        b = _find(parent, ej[r])
        if a == b:
            continue
        negative[r] = True
        if vrank[a] > vrank[b]:
            a, b = b, a
        young[k] = b
        killer[k] = r
        k += 1
        parent[b] = a
    roots = np.empty(n - k, dtype=np.int64)
    c = 0
    for v in range(n):
        if parent[v] == v:
            roots[c] = v
            c += 1
    return young[:k], killer[:k], negative, roots


@njit(cache=True)
def _tri_key(n, r, i, j, k, rik, rjk):
    if r >= rik and r >= rjk:
        return r * n + k
    if rik >= rjk:
        return rik * n + j
    return rjk * n + i


@njit(cache=True)
def _push_coboundary(heap, n, r, ei, ej, R, adj_ptr, adj):
    i = ei[r]
    j = ej[r]
    for p in range(adj_ptr[i], adj_ptr[i + 1]):
        k = adj[p]
        rjk = R[j, k]
        if rjk < 0 or k == j:
            continue
        heapq.heappush(heap, _tri_key(n, r, i, j, k, R[i, k], rjk))


@njit(cache=True)
def _pop_pivot(heap):
    """Smallest key occurring an odd number of times, removed from the heap;
    -1 when the column is zero."""
    while len(heap) > 0:
        piv = heapq.heappop(heap)
        if len(heap) > 0 and heap[0] == piv:
            heapq.heappop(heap)
        else:
            return piv
    return -1


@njit(cache=True)
def _min_cofacet(n, r, i, j, R):
    """Smallest triangle key on edge ``r = ij`` (or the int64 maximum).

    Rows of ``R`` are scanned contiguously; a triangle in which ``r`` is
    the longest edge has the smallest possible key ``r * n + k``, so the
    first such ``k`` ends the scan.
    """
    best = np.iinfo(np.int64).max
    Ri = R[i]
    Rj = R[j]
    for k in range(n):
        rik = Ri[k]
        rjk = Rj[k]
        if rik < 0 or rjk < 0:
            continue
        if rik < r and rjk < r:
            return r * n + k
        key = _tri_key(n, r, i, j, k, rik, rjk)
        if key < best:
            best = key
    return best


@njit(cache=True)
def _mod2(v):
    v = np.sort(v)
    out = np.empty(len(v), dtype=np.int64)
    c = 0
    i = 0
    while i < len(v):
        if i + 1 < len(v) and v[i + 1] == v[i]:
            i += 2
        else:
            out[c] = v[i]
            c += 1
            i += 1
    return out[:c]


@njit(cache=True)
def h1_pairs(n, ei, ej, R, adj_ptr, adj, negative):
    """Degree-1 persistence pairs as ``(birth_edge_rank, death_edge_rank)``;
    death rank -1 marks a class that never dies.

    Reduced columns are kept implicitly as the edge sets ``V`` whose
    coboundaries sum to them; the working column lives in a lazy heap.
    """
    m = len(ei)
    owner = Dict.empty(key_type=types.int64, value_type=types.int64)
    V = List()
    V.append(np.empty(0, dtype=np.int64))
    slot = np.zeros(m, dtype=np.int64)
    births = np.empty(m, dtype=np.int64)
    deaths = np.empty(m, dtype=np.int64)
    c = 0
    big = np.iinfo(np.int64).max
    for r in range(m - 1, -1, -1):
        if negative[r]:
            continue
        i = ei[r]
        j = ej[r]
        best = _min_cofacet(n, r, i, j, R)
        births[c] = r
        if best == big:
            deaths[c] = -1
            c += 1
            continue
        if best not in owner:
            owner[best] = r
            deaths[c] = best // n
            c += 1
            continue
        heap = [np.int64(0)]
        heap.pop()
        added = [np.int64(r)]
        _push_coboundary(heap, n, r, ei, ej, R, adj_ptr, adj)
        piv = _pop_pivot(heap)
        while piv != -1 and piv in owner:
            heapq.heappush(heap, piv)
            o = owner[piv]
            if slot[o] > 0:
                for e in V[slot[o]]:
                    added.append(e)
                    _push_coboundary(heap, n, e, ei, ej, R, adj_ptr, adj)
            else:
                added.append(o)
                _push_coboundary(heap, n, o, ei, ej, R, adj_ptr, adj)
            piv = _pop_pivot(heap)
        if piv == -1:
            deaths[c] = -1
        else:
            owner[piv] = r
            V.append(_mod2(np.array(added)))
            slot[r] = len(V) - 1
            deaths[c] = piv // n
        c += 1
    return births[:c], deaths[:c]
