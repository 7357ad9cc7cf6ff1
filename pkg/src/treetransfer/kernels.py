"""Compiled inner loops for split search, threshold refitting and routing.

Node sample sets are small (tens to hundreds of rows), where numpy's per-call
overhead dominates, so these run as plain loops under numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# criterion codes for refit_search
BOTH, IG_ONLY, DG_ONLY = 0, 1, 2

TIE_TOL = 1e-12


@njit(cache=True)
def _entropy(counts, n):
    if n <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / n
            h -= p * np.log2(p)
    return h


@njit(cache=True)
def _jsd(counts, n, q):
    """JSD between counts/n and q; both sides are probability vectors."""
    out = 0.0
    for k in range(q.shape[0]):
        p = counts[k] / n if n > 0 else 0.0
        m = 0.5 * (p + q[k])
        if p > 0:
            out += 0.5 * p * np.log2(p / m)
        if q[k] > 0:
            out += 0.5 * q[k] * np.log2(q[k] / m)
    if out < 0.0:
        return 0.0
    if out > 1.0:
        return 1.0
    return out


@njit(cache=True)
def _midpoint(lo, hi):
    mid = (lo + hi) / 2.0
    if not np.isfinite(mid):
        mid = lo + (hi - lo) / 2.0
    if mid < hi:
        return mid
    return lo


@njit(cache=True)
def best_numeric_split(values, y, n_classes):
    """Highest-gain midpoint split of one feature.

    Returns (gain, threshold); gain is -1 when the feature is constant.
    Ties keep the smallest threshold.
    """
    n = values.shape[0]
    order = np.argsort(values)
    total = np.zeros(n_classes)
    for i in range(n):
        total[y[i]] += 1.0
    parent = _entropy(total, n)
    left = np.zeros(n_classes)
    right = np.zeros(n_classes)
    best_gain = -1.0
    best_threshold = 0.0
    for i in range(n - 1):
        left[y[order[i]]] += 1.0
        lo = values[order[i]]
        hi = values[order[i + 1]]
        if lo < hi:
            n_left = i + 1.0
            n_right = n - n_left
            for k in range(n_classes):
                right[k] = total[k] - left[k]
            gain = parent - (n_left * _entropy(left, n_left) + n_right * _entropy(right, n_right)) / n
            if gain < 0.0:
                gain = 0.0
            if gain > best_gain:
                best_gain = gain
                best_threshold = _midpoint(lo, hi)
    return best_gain, best_threshold


@njit(cache=True)
def refit_search(values, y, n_classes, q_left, q_right, criterion):
    """Threshold search over midpoints.

    Returns (threshold, dg, n_candidates); n_candidates == 0 means the
    feature has fewer than two distinct values.
    """
    n = values.shape[0]
    order = np.argsort(values)
    total = np.zeros(n_classes)
    for i in range(n):
        total[y[i]] += 1.0
    parent = _entropy(total, n)
    thresholds = np.empty(n)
    ig = np.empty(n)
    dg = np.empty(n)
    left = np.zeros(n_classes)
    right = np.zeros(n_classes)
    m = 0
    for i in range(n - 1):
        left[y[order[i]]] += 1.0
        lo = values[order[i]]
        hi = values[order[i + 1]]
        if lo < hi:
            n_left = i + 1.0
            n_right = n - n_left
            for k in range(n_classes):
                right[k] = total[k] - left[k]
            gain = parent - (n_left * _entropy(left, n_left) + n_right * _entropy(right, n_right)) / n
            ig[m] = gain if gain > 0.0 else 0.0
            dg[m] = 1.0 - (n_left / n) * _jsd(left, n_left, q_left) - (n_right / n) * _jsd(right, n_right, q_right)
            thresholds[m] = _midpoint(lo, hi)
            m += 1
    if m == 0:
        return 0.0, 0.0, 0

    if criterion == IG_ONLY:
        score = ig
    else:
        score = dg
    keep = np.ones(m, dtype=np.bool_)
    if criterion == BOTH:
        # local maxima of IG among adjacent candidates
        for i in range(m):
            if i > 0 and ig[i] < ig[i - 1] - TIE_TOL:
                keep[i] = False
            if i < m - 1 and ig[i] < ig[i + 1] - TIE_TOL:
                keep[i] = False
    best = -np.inf
    for i in range(m):
        if keep[i] and score[i] > best:
            best = score[i]
    # earliest (smallest) threshold within tolerance of the best
    for i in range(m):
        if keep[i] and score[i] >= best - TIE_TOL:
            return thresholds[i], dg[i], m
    return thresholds[0], dg[0], m


@njit(cache=True)
def route_votes(X, kind, feature, threshold, first_child, label, roots):
    """Predicted class of every tree for every row: (n_trees, n_rows)."""
    n_trees = roots.shape[0]
    n = X.shape[0]
    out = np.empty((n_trees, n), dtype=np.int64)
    for t in range(n_trees):
        for r in range(n):
            node = roots[t]
            while kind[node] != 0:
                v = X[r, feature[node]]
                if kind[node] == 1:
                    node = first_child[node] + (0 if v <= threshold[node] else 1)
                else:
                    node = first_child[node] + int(v)
            out[t, r] = label[node]
    return out
