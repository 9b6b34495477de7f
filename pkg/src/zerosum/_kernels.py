"""Numba kernels: bitset product DP, pruned multiset DFS, fixed-order finder.

Sets of group elements are ``uint64`` bitmasks, so every kernel here needs
``order <= 64``.  Right multiplication of a whole set by ``g`` goes through
byte tables ``RT[g, byte, value]``.

The sub-multiset table is laid out in mixed radix with the most recently
added support element as the most significant digit.  Appending one term
(either another copy of the last support element, or a new one) therefore
only appends a contiguous layer, and backtracking is a truncation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MAX_KERNEL_ORDER = 64

# predicate codes
PRED_FREE = 0
PRED_SHORT = 1
PRED_K = 2

# search status codes
DONE = 0
FOUND = 1
BUDGET = 2
CAPACITY = 3
COLLECT_FULL = 4
DEPTH = 5


def rmul_tables(mul: np.ndarray) -> np.ndarray:
    """RT[g, b, v] = {h*g : h in byte b of the mask with value v}."""
    order = mul.shape[0]
    if order > MAX_KERNEL_ORDER:
        raise ValueError(f"bitset kernels need order <= {MAX_KERNEL_ORDER}")
    nbytes = (order + 7) // 8
    RT = np.zeros((order, nbytes, 256), dtype=np.uint64)
    for g in range(order):
        for b in range(nbytes):
            for t in range(8):
                h = 8 * b + t
                if h >= order:
                    continue
                bit = np.uint64(1) << np.uint64(mul[h, g])
                sel = (np.arange(256) >> t) & 1 == 1
                RT[g, b, sel] |= bit
    return RT


@njit(cache=True, inline="always")
def _rmul(mask, g, RT, nbytes):
    r = np.uint64(0)
    for b in range(nbytes):
        v = (mask >> np.uint64(8 * b)) & np.uint64(255)
        if v:
            r |= RT[g, b, v]
    return r


@njit(cache=True)
def _extend(table, sizes, tsize, s_elem, s_stride, s_mult, d, g, RT, nbytes,
            digits, pi_out, kmax):
    """Append one copy of ``g``; returns (new_tsize, new_d) or (-1, d) on overflow."""
    if d > 0 and s_elem[d - 1] == g:
        j = d - 1
        stride = s_stride[j]
        base = stride * (s_mult[j] + 1)
        count = stride
        if base + count > table.shape[0]:
            return -1, d
        s_mult[j] += 1
        newd = d
    else:
        j = d
        base = tsize
        count = tsize
        if base + count > table.shape[0]:
            return -1, d
        s_elem[j] = g
        s_stride[j] = tsize
        s_mult[j] = 1
        newd = d + 1
    sj = s_stride[j]
    for i in range(j):
        digits[i] = 0
    for r in range(count):
        idx = base + r
        val = _rmul(table[idx - sj], g, RT, nbytes)
        for i in range(j):
            if digits[i] > 0:
                val |= _rmul(table[idx - s_stride[i]], s_elem[i], RT, nbytes)
        table[idx] = val
        sz = sizes[idx - sj] + 1
        sizes[idx] = sz
        if sz <= kmax:
            pi_out[sz] |= val
        i = 0
        while i < j:
            digits[i] += 1
            if digits[i] <= s_mult[i]:
                break
            digits[i] = 0
            i += 1
    return base + count, newd


@njit(cache=True)
def profile_dp(terms, order, identity, RT, nbytes, capacity):
    """Per-length subproduct sets of the multiset ``terms`` (sorted ids).

    Returns ``pi[l]`` bitmask for l = 0..len(terms) (pi[0] = {1} is the
    empty product) and a status flag (False when ``capacity`` was hit).
    """
    L = terms.shape[0]
    pi = np.zeros(L + 1, dtype=np.uint64)
    pi[0] = np.uint64(1) << np.uint64(identity)
    table = np.zeros(capacity, dtype=np.uint64)
    sizes = np.zeros(capacity, dtype=np.int32)
    table[0] = pi[0]
    s_elem = np.zeros(L + 1, dtype=np.int64)
    s_stride = np.zeros(L + 1, dtype=np.int64)
    s_mult = np.zeros(L + 1, dtype=np.int64)
    digits = np.zeros(L + 1, dtype=np.int64)
    tsize = 1
    d = 0
    for t in range(L):
        tsize, d = _extend(table, sizes, tsize, s_elem, s_stride, s_mult, d, terms[t],
                           RT, nbytes, digits, pi, L)
        if tsize < 0:
            return pi, False
    return pi, True


@njit(cache=True)
def full_product_set(terms, order, identity, RT, nbytes, capacity):
    """pi(S) for the whole multiset; (mask, ok)."""
    pi, ok = profile_dp(terms, order, identity, RT, nbytes, capacity)
    return pi[terms.shape[0]], ok


@njit(cache=True)
def subset_product_sets(terms, order, identity, RT, nbytes, capacity):
    """Product sets of every sub-multiset in mixed-radix order; (table, sizes, n, ok)."""
    L = terms.shape[0]
    pi = np.zeros(L + 1, dtype=np.uint64)
    table = np.zeros(capacity, dtype=np.uint64)
    sizes = np.zeros(capacity, dtype=np.int32)
    table[0] = np.uint64(1) << np.uint64(identity)
    s_elem = np.zeros(L + 1, dtype=np.int64)
    s_stride = np.zeros(L + 1, dtype=np.int64)
    s_mult = np.zeros(L + 1, dtype=np.int64)
    digits = np.zeros(L + 1, dtype=np.int64)
    tsize = 1
    d = 0
    for t in range(L):
        tsize, d = _extend(table, sizes, tsize, s_elem, s_stride, s_mult, d, terms[t],
                           RT, nbytes, digits, pi, L)
        if tsize < 0:
            return table, sizes, 0, False
    return table, sizes, tsize, True


@njit(cache=True)
def _bad_mask(pi_row, L, pred, k, e):
    m = np.uint64(0)
    if pred == 0:
        for l in range(L + 1):
            m |= pi_row[l]
    elif pred == 1:
        top = L if L < e - 1 else e - 1
        for l in range(top + 1):
            m |= pi_row[l]
    else:
        if L >= k - 1:
            m = pi_row[k - 1]
    return m


@njit(cache=True)
def dfs_search(order, identity, inv, RT, nbytes, abelian,
               pred, k, e, target, collect, first_ok, pair_ok,
               prefix, resume_seq, resume_nxt, budget, capacity,
               out_seq, out_collect, max_collect, stats, depth_bound):
    """Depth-first enumeration of non-decreasing free sequences.

    A node is a sorted prefix that does not satisfy the predicate
    (no product-one free / short / k-product-one subsequence).  Children
    append an element >= the last one; a child is rejected when
    ``inv[g]`` lies in the parent's relevant subproduct set, which by
    rotation of product-one orderings is exactly when the new term closes a
    product-one subsequence of the required kind.

    ``target > 0``: stop at the first node of that length (FOUND) unless
    ``collect``, in which case every such node is written to
    ``out_collect``.  ``target <= 0``: explore everything and keep the
    deepest node in ``out_seq`` (its length in stats[3]).

    stats: [nodes, prunes, collected, best_len]; budget counts nodes.
    ``depth_bound`` caps node length (all buffers are sized from it); a node
    that would exceed it aborts with DEPTH.
    Returns (status, depth, seq, nxt) where seq/nxt describe the DFS stack
    at interruption (for checkpoints).
    """
    maxdepth = target if target > 0 else depth_bound
    seq = np.zeros(maxdepth + 1, dtype=np.int64)
    nxt = np.zeros(maxdepth + 2, dtype=np.int64)
    tsize_stack = np.zeros(maxdepth + 2, dtype=np.int64)
    d_stack = np.zeros(maxdepth + 2, dtype=np.int64)
    pi = np.zeros((maxdepth + 2, maxdepth + 2), dtype=np.uint64)
    bad = np.zeros(maxdepth + 2, dtype=np.uint64)
    kmax = maxdepth + 1
    if abelian:
        table = np.zeros(1, dtype=np.uint64)
        sizes = np.zeros(1, dtype=np.int32)
    else:
        table = np.zeros(capacity, dtype=np.uint64)
        sizes = np.zeros(capacity, dtype=np.int32)
    one = np.uint64(1)
    table[0] = one << np.uint64(identity)
    pi[0, 0] = one << np.uint64(identity)
    bad[0] = _bad_mask(pi[0], 0, pred, k, e)
    s_elem = np.zeros(maxdepth + 2, dtype=np.int64)
    s_stride = np.zeros(maxdepth + 2, dtype=np.int64)
    s_mult = np.zeros(maxdepth + 2, dtype=np.int64)
    digits = np.zeros(maxdepth + 2, dtype=np.int64)
    tsize = 1
    d = 0
    tsize_stack[0] = 1
    d_stack[0] = 0

    # replay prefix then resume stack; every replayed step must be admissible
    base = prefix.shape[0]
    resumed = resume_seq.shape[0] > 0
    replay = resume_seq if resumed else prefix
    depth = 0
    if replay.shape[0] > maxdepth:
        return DEPTH, 0, seq, nxt
    for t in range(replay.shape[0]):
        g = replay[t]
        ok = True
        if (bad[depth] >> np.uint64(inv[g])) & one:
            ok = False
        if depth == 0 and not first_ok[g]:
            ok = False
        if depth == 1 and not pair_ok[seq[0], g]:
            ok = False
        if depth > 0 and g < seq[depth - 1]:
            ok = False
        if not ok:
            stats[1] += 1
            return DONE, depth, seq, nxt
        seq[depth] = g
        for l in range(depth + 2):
            pi[depth + 1, l] = pi[depth, l]
        if abelian:
            for l in range(1, depth + 2):
                pi[depth + 1, l] |= _rmul(pi[depth, l - 1], g, RT, nbytes)
            if d > 0 and s_elem[d - 1] == g:
                s_mult[d - 1] += 1
            else:
                s_elem[d] = g
                s_mult[d] = 1
                d += 1
        else:
            tsize, d = _extend(table, sizes, tsize, s_elem, s_stride, s_mult, d, g,
                               RT, nbytes, digits, pi[depth + 1], kmax)
            if tsize < 0:
                return CAPACITY, depth, seq, nxt
        depth += 1
        tsize_stack[depth] = tsize
        d_stack[depth] = d
        bad[depth] = _bad_mask(pi[depth], depth, pred, k, e)
    if resumed:
        for t in range(depth + 1):
            nxt[t] = resume_nxt[t]
    else:
        # visit the branch root
        stats[0] += 1
        if depth > stats[3]:
            stats[3] = depth
            for t in range(depth):
                out_seq[t] = seq[t]
        if target > 0 and depth == target:
            if collect:
                out_collect[stats[2], :depth] = seq[:depth]
                stats[2] += 1
                return DONE, depth, seq, nxt
            for t in range(depth):
                out_seq[t] = seq[t]
            return FOUND, depth, seq, nxt
        nxt[depth] = seq[depth - 1] if depth > 0 else 0

    while True:
        if stats[0] >= budget:
            return BUDGET, depth, seq, nxt
        g = nxt[depth]
        if g >= order:
            if depth <= base:
                return DONE, depth, seq, nxt
            depth -= 1
            tsize = tsize_stack[depth]
            d = d_stack[depth]
            if d_stack[depth + 1] == d:
                s_mult[d - 1] -= 1
            nxt[depth] += 1
            continue
        if (bad[depth] >> np.uint64(inv[g])) & one:
            stats[1] += 1
            nxt[depth] += 1
            continue
        if depth == 0 and not first_ok[g]:
            nxt[depth] += 1
            continue
        if depth == 1 and not pair_ok[seq[0], g]:
            nxt[depth] += 1
            continue
        if depth >= maxdepth:
            return DEPTH, depth, seq, nxt
        # push
        seq[depth] = g
        for l in range(depth + 2):
            pi[depth + 1, l] = pi[depth, l]
        if abelian:
            for l in range(1, depth + 2):
                pi[depth + 1, l] |= _rmul(pi[depth, l - 1], g, RT, nbytes)
            if d > 0 and s_elem[d - 1] == g:
                s_mult[d - 1] += 1
            else:
                s_elem[d] = g
                s_mult[d] = 1
                d += 1
        else:
            tsize, d = _extend(table, sizes, tsize, s_elem, s_stride, s_mult, d, g,
                               RT, nbytes, digits, pi[depth + 1], kmax)
            if tsize < 0:
                return CAPACITY, depth, seq, nxt
        depth += 1
        tsize_stack[depth] = tsize
        d_stack[depth] = d
        stats[0] += 1
        if depth > stats[3]:
            stats[3] = depth
            for t in range(depth):
                out_seq[t] = seq[t]
        if target > 0 and depth == target:
            if collect:
                if stats[2] >= max_collect:
                    return COLLECT_FULL, depth, seq, nxt
                for t in range(depth):
                    out_collect[stats[2], t] = seq[t]
                stats[2] += 1
                nxt[depth] = order  # leaf: force backtrack
                continue
            for t in range(depth):
                out_seq[t] = seq[t]
            return FOUND, depth, seq, nxt
        bad[depth] = _bad_mask(pi[depth], depth, pred, k, e)
        nxt[depth] = g


@njit(cache=True)
def ordered_finder(terms, k, identity, inv, RT, nbytes, chosen):
    """Fixed-order DP: can k of ``terms`` (kept in the given order) multiply to 1?

    On success marks the chosen positions in ``chosen`` and returns True.
    """
    L = terms.shape[0]
    reach = np.zeros((L + 1, k + 1), dtype=np.uint64)
    one = np.uint64(1)
    reach[0, 0] = one << np.uint64(identity)
    for i in range(L):
        g = terms[i]
        top = i + 1 if i + 1 < k else k
        reach[i + 1, 0] = reach[i, 0]
        for c in range(1, top + 1):
            reach[i + 1, c] = reach[i, c] | _rmul(reach[i, c - 1], g, RT, nbytes)
    if not (reach[L, k] >> np.uint64(identity)) & one:
        return False
    h = identity
    c = k
    for i in range(L, 0, -1):
        chosen[i - 1] = False
        if c == 0:
            continue
        if (reach[i - 1, c] >> np.uint64(h)) & one:
            continue
        chosen[i - 1] = True
        # h = h' * g  =>  h' = h * g^-1
        g = terms[i - 1]
        ginv = inv[g]
        h = _rmul(one << np.uint64(h), ginv, RT, nbytes)
        # decode single bit
        hb = 0
        while (h >> np.uint64(hb)) & one == 0:
            hb += 1
        h = hb
        c -= 1
    return True
