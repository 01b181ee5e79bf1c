"""Compiled inner loops for batched ChrF scoring over packed bags.

Packed bags are CSR-style: row ``r`` owns ``ids[indptr[r]:indptr[r+1]]``
(sorted ascending) with matching ``counts``; ``id_order[g]`` is the n-gram
order of id ``g`` and ``totals[r, i]`` the count total of order ``i+1``.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _overlap_into(ids_a, cnt_a, ids_b, cnt_b, id_order, out):
    la = ids_a.shape[0]
    lb = ids_b.shape[0]
    if la == 0 or lb == 0:
        return
    if la > lb:
        ids_a, ids_b = ids_b, ids_a
        cnt_a, cnt_b = cnt_b, cnt_a
        la, lb = lb, la
    if la * math.log2(lb + 1.0) < la + lb:
        # small side probes the large side
        lo = 0
        for p in range(la):
            g = ids_a[p]
            hi = lb
            while lo < hi:
                mid = (lo + hi) >> 1
                if ids_b[mid] < g:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == lb:
                break
            if ids_b[lo] == g:
                ca = cnt_a[p]
                cb = cnt_b[lo]
                out[id_order[g] - 1] += ca if ca < cb else cb
    else:
        p = 0
        q = 0
        while p < la and q < lb:
            ga = ids_a[p]
            gb = ids_b[q]
            if ga < gb:
                p += 1
            elif gb < ga:
                q += 1
            else:
                ca = cnt_a[p]
                cb = cnt_b[q]
                out[id_order[ga] - 1] += ca if ca < cb else cb
                p += 1
                q += 1


@njit(cache=True)
def _fscore(match, ht, rt, beta, effective_order, scale):
    prec = 0.0
    rec = 0.0
    used = 0
    for i in range(match.shape[0]):
        if ht[i] == 0.0 and rt[i] == 0.0:
            if effective_order:
                continue
        elif ht[i] > 0.0 and rt[i] > 0.0:
            prec += match[i] / ht[i]
            rec += match[i] / rt[i]
        used += 1
    if ht[0] == 0.0 and rt[0] == 0.0:
        return scale
    if used == 0:
        return 0.0
    prec /= used
    rec /= used
    if prec == 0.0 and rec == 0.0:
        return 0.0
    b2 = beta * beta
    return scale * ((1.0 + b2) * prec * rec / (b2 * prec + rec))


@njit(cache=True)
def chrf_matrix(h_ptr, h_ids, h_cnt, h_tot, h_rows,
                r_ptr, r_ids, r_cnt, r_tot, r_rows,
                id_order, beta, effective_order, scale):
    nh = h_rows.shape[0]
    nr = r_rows.shape[0]
    max_order = h_tot.shape[1]
    out = np.empty((nh, nr))
    match = np.zeros(max_order)
    for a in range(nh):
        ha = h_rows[a]
        ids_a = h_ids[h_ptr[ha]:h_ptr[ha + 1]]
        cnt_a = h_cnt[h_ptr[ha]:h_ptr[ha + 1]]
        for b in range(nr):
            rb = r_rows[b]
            match[:] = 0.0
            _overlap_into(ids_a, cnt_a, r_ids[r_ptr[rb]:r_ptr[rb + 1]],
                          r_cnt[r_ptr[rb]:r_ptr[rb + 1]], id_order, match)
            out[a, b] = _fscore(match, h_tot[ha], r_tot[rb], beta, effective_order, scale)
    return out


@njit(cache=True)
def weighted_row_means(mat, weights):
    """Left-to-right weighted mean of each row."""
    n, m = mat.shape
    out = np.empty(n)
    wsum = 0.0
    for k in range(m):
        wsum += weights[k]
    for i in range(n):
        acc = 0.0
        for k in range(m):
            acc += weights[k] * mat[i, k]
        out[i] = acc / wsum
    return out


@njit(cache=True)
def row_means(mat):
    n, m = mat.shape
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for k in range(m):
            acc += mat[i, k]
        out[i] = acc / m
    return out


@njit(cache=True)
def chrf_matrix_dense(h_ptr, h_ids, h_cnt, h_tot, h_rows,
                      r_ptr, r_ids, r_cnt, r_tot, r_rows,
                      id_order, vocab_size, beta, effective_order, scale):
    """Same result as :func:`chrf_matrix`, but each reference row is scattered
    into a dense lookup table so every hypothesis n-gram is a single probe."""
    nh = h_rows.shape[0]
    nr = r_rows.shape[0]
    max_order = h_tot.shape[1]
    out = np.empty((nh, nr))
    match = np.zeros(max_order)
    table = np.zeros(vocab_size)
    for b in range(nr):
        rb = r_rows[b]
        for q in range(r_ptr[rb], r_ptr[rb + 1]):
            table[r_ids[q]] = r_cnt[q]
        for a in range(nh):
            ha = h_rows[a]
            match[:] = 0.0
            for p in range(h_ptr[ha], h_ptr[ha + 1]):
                cb = table[h_ids[p]]
                if cb > 0.0:
                    ca = h_cnt[p]
                    match[id_order[h_ids[p]] - 1] += ca if ca < cb else cb
            out[a, b] = _fscore(match, h_tot[ha], r_tot[rb], beta, effective_order, scale)
        for q in range(r_ptr[rb], r_ptr[rb + 1]):
            table[r_ids[q]] = 0.0
    return out
