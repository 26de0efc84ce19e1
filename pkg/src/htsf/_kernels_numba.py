"""Compiled implementations of the training hot paths.

Loop order here defines the accumulation contract that the numpy backend
reproduces: histograms fill in row order, boundary scans walk bins left to
right, predictions add trees in order.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def build_histograms(codes, rows, feats, grad, hess, max_bins):
    n_sel = feats.shape[0]
    hg = np.zeros((n_sel, max_bins), dtype=np.float64)
    hh = np.zeros((n_sel, max_bins), dtype=np.float64)
    cnt = np.zeros((n_sel, max_bins), dtype=np.int64)
    for i in range(n_sel):
        f = feats[i]
        for k in range(rows.shape[0]):
            r = rows[k]
            c = codes[f, r]
            hg[i, c] += grad[r]
            hh[i, c] += hess[r]
            cnt[i, c] += 1
    return hg, hh, cnt


@njit(cache=True, nogil=True)
def best_split(hg, hh, cnt, lam, min_samples):
    n_sel = hg.shape[0]
    max_bins = hg.shape[1]
    best_gain = -np.inf
    best_f = -1
    best_b = -1
    for i in range(n_sel):
        tot_g = 0.0
        tot_h = 0.0
        tot_n = 0
        for b in range(max_bins):
            tot_g += hg[i, b]
            tot_h += hh[i, b]
            tot_n += cnt[i, b]
        parent = tot_g * tot_g / (tot_h + lam)
        gl = 0.0
        hl = 0.0
        nl = 0
        for b in range(max_bins - 1):
            gl += hg[i, b]
            hl += hh[i, b]
            nl += cnt[i, b]
            if cnt[i, b] == 0:
                continue
            nr = tot_n - nl
            if nl < min_samples or nr < min_samples:
                continue
            gr = tot_g - gl
            hr = tot_h - hl
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
            if gain > best_gain:
                best_gain = gain
                best_f = i
                best_b = b
    return best_gain, best_f, best_b


@njit(cache=True, nogil=True)
def partition_rows(codes, feat, rows, split_bin):
    n = rows.shape[0]
    n_left = 0
    for k in range(n):
        if codes[feat, rows[k]] <= split_bin:
            n_left += 1
    left = np.empty(n_left, dtype=np.int64)
    right = np.empty(n - n_left, dtype=np.int64)
    a = 0
    b = 0
    for k in range(n):
        r = rows[k]
        if codes[feat, r] <= split_bin:
            left[a] = r
            a += 1
        else:
            right[b] = r
            b += 1
    return left, right


@njit(cache=True, nogil=True)
def predict_forest(X, feat, thr, left, right, value, roots):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for r in range(n):
        s = 0.0
        for k in range(roots.shape[0]):
            node = roots[k]
            while left[node] >= 0:
                if X[r, feat[node]] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            s += value[node]
        out[r] = s
    return out


@njit(cache=True, nogil=True)
def css_residuals(w, c, phi, theta):
    n = w.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    e = np.zeros(n, dtype=np.float64)
    for t in range(p, n):
        acc = w[t] - c
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
    return e
