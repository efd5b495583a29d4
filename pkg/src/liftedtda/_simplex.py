"""Primal network simplex for the dense transportation problem.

Sources are nodes ``0..n1-1`` with supply ``a``; sinks are ``n1..n1+n2-1``
with demand ``b``; real arc ``e`` joins ``e // n2`` to ``n1 + e % n2``.
One artificial arc per node links it to an extra root node, which gives
an initial strongly feasible spanning tree.  Tree bookkeeping (thread
order, successor counts, last successors) follows the LEMON
implementation; pricing uses block search.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

STATE_TREE = 0
STATE_LOWER = 1
DIR_UP = 1
DIR_DOWN = -1


@njit(cache=True)
def network_simplex(C, a, b, tol, max_iter):
    """Solve ``min <C, P>`` over couplings of ``a`` and ``b``.

    ``C`` is the flattened ``(n1, n2)`` cost matrix, scaled so that its
    maximum is at most 1.  Returns ``(flow, artificial_flow, status,
    iterations)``; ``flow`` has length ``n1 * n2``, status 0 is optimal and
    1 means the iteration cap was hit.
    """
    n1 = a.shape[0]
    n2 = b.shape[0]
    n = n1 + n2
    m = n1 * n2
    root = n
    inf = np.inf

    max_c = 0.0
    for e in range(m):
        if C[e] > max_c:
            max_c = C[e]
    art = (max_c + 1.0) * n
    thr = tol * art

    flow = np.zeros(m + n)
    state = np.ones(m, dtype=np.int8)

    parent = np.empty(n + 1, dtype=np.int64)
    pred = np.empty(n + 1, dtype=np.int64)
    thread = np.empty(n + 1, dtype=np.int64)
    rev_thread = np.empty(n + 1, dtype=np.int64)
    succ_num = np.empty(n + 1, dtype=np.int64)
    last_succ = np.empty(n + 1, dtype=np.int64)
    pred_dir = np.zeros(n + 1, dtype=np.int64)
    pi = np.zeros(n + 1)
    dirty = np.empty(n + 1, dtype=np.int64)

    parent[root] = -1
    pred[root] = -1
    thread[root] = 0
    rev_thread[0] = root
    succ_num[root] = n + 1
    last_succ[root] = root - 1
    for u in range(n):
        e = m + u
        parent[u] = root
        pred[u] = e
        thread[u] = u + 1
        rev_thread[u + 1] = u
        succ_num[u] = 1
        last_succ[u] = u
        s = a[u] if u < n1 else -b[u - n1]
        if s >= 0:
            pred_dir[u] = DIR_UP
            pi[u] = 0.0
            flow[e] = s
        else:
            pred_dir[u] = DIR_DOWN
            pi[u] = art
            flow[e] = -s

    block = max(int(math.ceil(math.sqrt(m))), 10)
    next_arc = 0
    it = 0
    status = 0
    while True:
        # block-search pricing over real arcs
        in_arc = -1
        best = 0.0
        cnt = block
        found = False
        for k in range(m):
            e = next_arc + k
            if e >= m:
                e -= m
            st = state[e]
            if st != STATE_TREE:
                c = st * (C[e] + pi[e // n2] - pi[n1 + e % n2])
                if c < best:
                    best = c
                    in_arc = e
            cnt -= 1
            if cnt == 0:
                if best < -thr:
                    next_arc = e + 1
                    if next_arc >= m:
                        next_arc = 0
                    found = True
                    break
                cnt = block
        if not found:
            if best < -thr:
                found = True
            else:
                break
        it += 1
        if it > max_iter:
            status = 1
            break

        # join node
        u_src = in_arc // n2
        v_tgt = n1 + in_arc % n2
        u = u_src
        v = v_tgt
        while u != v:
            if succ_num[u] < succ_num[v]:
                u = parent[u]
            else:
                v = parent[v]
        join = u

        # leaving arc (strongly feasible rule); entering arcs are at lower bound
        first = u_src
        second = v_tgt
        delta = inf
        result = 0
        u_out = -1
        u = first
        while u != join:
            d = flow[pred[u]] if pred_dir[u] == DIR_UP else inf
            if d < delta:
                delta = d
                u_out = u
                result = 1
            u = parent[u]
        u = second
        while u != join:
            d = flow[pred[u]] if pred_dir[u] == DIR_DOWN else inf
            if d <= delta:
                delta = d
                u_out = u
                result = 2
            u = parent[u]
        if result == 1:
            u_in = first
            v_in = second
        else:
            u_in = second
            v_in = first

        # change flow along the cycle
        if delta > 0:
            val = delta
            flow[in_arc] += val
            u = u_src
            while u != join:
                flow[pred[u]] -= pred_dir[u] * val
                u = parent[u]
            u = v_tgt
            while u != join:
                flow[pred[u]] += pred_dir[u] * val
                u = parent[u]
        state[in_arc] = STATE_TREE
        out_arc = pred[u_out]
        flow[out_arc] = 0.0
        if out_arc < m:
            state[out_arc] = STATE_LOWER

        # update the spanning tree
        old_rev_thread = rev_thread[u_out]
        old_succ_num = succ_num[u_out]
        old_last_succ = last_succ[u_out]
        v_out = parent[u_out]

        if u_in == u_out:
            parent[u_in] = v_in
            pred[u_in] = in_arc
            pred_dir[u_in] = DIR_UP if u_in == u_src else DIR_DOWN
            if thread[v_in] != u_out:
                after = thread[old_last_succ]
                thread[old_rev_thread] = after
                rev_thread[after] = old_rev_thread
                after = thread[v_in]
                thread[v_in] = u_out
                rev_thread[u_out] = v_in
                thread[old_last_succ] = after
                rev_thread[after] = old_last_succ
        else:
            if old_rev_thread == v_in:
                thread_continue = thread[old_last_succ]
            else:
                thread_continue = thread[v_in]
            stem = u_in
            par_stem = v_in
            last = last_succ[u_in]
            after = thread[last]
            thread[v_in] = u_in
            nd = 0
            dirty[nd] = v_in
            nd += 1
            while stem != u_out:
                next_stem = parent[stem]
                thread[last] = next_stem
                dirty[nd] = last
                nd += 1
                before = rev_thread[stem]
                thread[before] = after
                rev_thread[after] = before
                parent[stem] = par_stem
                par_stem = stem
                stem = next_stem
                if last_succ[stem] == last_succ[par_stem]:
                    last = rev_thread[par_stem]
                else:
                    last = last_succ[stem]
                after = thread[last]
            parent[u_out] = par_stem
            thread[last] = thread_continue
            rev_thread[thread_continue] = last
            last_succ[u_out] = last
            if old_rev_thread != v_in:
                thread[old_rev_thread] = after
                rev_thread[after] = old_rev_thread
            for i in range(nd):
                w = dirty[i]
                rev_thread[thread[w]] = w
            tmp_sc = 0
            tmp_ls = last_succ[u_out]
            u = u_out
            p = parent[u]
            while u != u_in:
                pred[u] = pred[p]
                pred_dir[u] = -pred_dir[p]
                tmp_sc += succ_num[u] - succ_num[p]
                succ_num[u] = tmp_sc
                last_succ[p] = tmp_ls
                u = p
                p = parent[u]
            pred[u_in] = in_arc
            pred_dir[u_in] = DIR_UP if u_in == u_src else DIR_DOWN
            succ_num[u_in] = old_succ_num

        up_limit_out = join if last_succ[join] == v_in else -1
        last_succ_out = last_succ[u_out]
        u = v_in
        while u != -1 and last_succ[u] == v_in:
            last_succ[u] = last_succ_out
            u = parent[u]
        if join != old_rev_thread and v_in != old_rev_thread:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = old_rev_thread
                u = parent[u]
        elif last_succ_out != old_last_succ:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = last_succ_out
                u = parent[u]
        u = v_in
        while u != join:
            succ_num[u] += old_succ_num
            u = parent[u]
        u = v_out
        while u != join:
            succ_num[u] -= old_succ_num
            u = parent[u]

        # update potentials on the moved subtree
        sigma = pi[v_in] - pi[u_in] - pred_dir[u_in] * C[in_arc]
        end = thread[last_succ[u_in]]
        u = u_in
        while u != end:
            pi[u] += sigma
            u = thread[u]

    return flow[:m].copy(), flow[m:].copy(), status, it
