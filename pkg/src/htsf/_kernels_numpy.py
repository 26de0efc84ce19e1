"""Vectorized numpy implementations of the training hot paths.

This backend mirrors the compiled one bit for bit. Accumulation order is the
contract: histogram bins fill in row order, prefix sums run in bin order, and
tree outputs add in tree order, so both backends produce identical floats.
"""

from __future__ import annotations

import numpy as np


def build_histograms(codes, rows, feats, grad, hess, max_bins):
    """Per-feature histograms of gradient, hessian, and row count.

    codes is the binned feature matrix laid out feature-major (n_features x
    n_rows). Returns (n_sel x max_bins) float64 sums and int64 counts for the
    selected feature positions.
    """
    n_sel = feats.shape[0]
    hg = np.zeros((n_sel, max_bins), dtype=np.float64)
    hh = np.zeros((n_sel, max_bins), dtype=np.float64)
    cnt = np.zeros((n_sel, max_bins), dtype=np.int64)
    g = grad[rows]
    h = hess[rows]
    for i in range(n_sel):
        c = codes[feats[i], rows]
        # bincount adds in input order, matching the compiled row loop
        hg[i] = np.bincount(c, weights=g, minlength=max_bins)
        hh[i] = np.bincount(c, weights=h, minlength=max_bins)
        cnt[i] = np.bincount(c, minlength=max_bins)
    return hg, hh, cnt


def best_split(hg, hh, cnt, lam, min_samples):
    """Scan all bin boundaries for the split with maximal gain.

    Gain of a boundary is GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam) using
    that feature's own histogram totals. Boundaries whose left bin is empty
    duplicate an earlier boundary and are skipped; both sides must hold at
    least min_samples rows. Ties keep the lowest feature position, then the
    lowest bin. Returns (gain, feature_position, split_bin), or
    (-inf, -1, -1) when nothing qualifies.
    """
    n_sel = hg.shape[0]
    best_gain = -np.inf
    best_f = -1
    best_b = -1
    for i in range(n_sel):
        tg = np.cumsum(hg[i])
        th = np.cumsum(hh[i])
        tc = np.cumsum(cnt[i])
        tot_g = tg[-1]
        tot_h = th[-1]
        tot_n = tc[-1]
        gl = tg[:-1]
        hl = th[:-1]
        nl = tc[:-1]
        gr = tot_g - gl
        hr = tot_h - hl
        nr = tot_n - nl
        with np.errstate(divide="ignore", invalid="ignore"):
            parent = tot_g * tot_g / (tot_h + lam)
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
        ok = (cnt[i][:-1] > 0) & (nl >= min_samples) & (nr >= min_samples)
        gain = np.where(ok, gain, -np.inf)
        b = int(np.argmax(gain))
        if gain[b] > best_gain:
            best_gain = float(gain[b])
            best_f = i
            best_b = b
    return best_gain, best_f, best_b


def partition_rows(codes, feat, rows, split_bin):
    """Stable split of rows into (code <= split_bin, rest), order preserved."""
    mask = codes[feat, rows] <= split_bin
    return rows[mask], rows[~mask]


def predict_forest(X, feat, thr, left, right, value, roots):
    """Sum leaf values over all trees for each row of X.

    Trees are flattened into parallel node arrays; leaves have left < 0.
    Descends all rows one depth at a time per tree.
    """
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    row_ix = np.arange(n)
    for root in roots:
        idx = np.full(n, root, dtype=np.int64)
        while True:
            at_leaf = left[idx] < 0
            if at_leaf.all():
                break
            # leaf rows read a dummy feature; their idx is kept as is
            go_left = X[row_ix, feat[idx]] <= thr[idx]
            nxt = np.where(go_left, left[idx], right[idx])
            idx = np.where(at_leaf, idx, nxt)
        out += value[idx]
    return out


def css_residuals(w, c, phi, theta):
    """Conditional-sum-of-squares residual recursion for an ARMA fit.

    e[t] = w[t] - c - sum phi_i w[t-1-i] - sum theta_j e[t-1-j], with the
    first p residuals pinned at zero.
    """
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
