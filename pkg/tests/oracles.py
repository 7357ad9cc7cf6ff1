"""Slow pure-Python reference implementations used to check the kernels."""

import math

TOL = 1e-12


def entropy(counts):
    n = sum(counts)
    if n == 0:
        return 0.0
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def kl(p, q):
    return sum(a * math.log2(a / b) for a, b in zip(p, q) if a > 0)


def jsd(p, q):
    m = [(a + b) / 2 for a, b in zip(p, q)]
    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def probs(counts):
    n = sum(counts)
    return [c / n for c in counts] if n else [0.0] * len(counts)


def side_counts(values, labels, tau, n_classes):
    left = [0] * n_classes
    right = [0] * n_classes
    for v, y in zip(values, labels):
        if v <= tau:
            left[y] += 1
        else:
            right[y] += 1
    return left, right


def info_gain(values, labels, tau, n_classes):
    left, right = side_counts(values, labels, tau, n_classes)
    n = len(labels)
    parent = [a + b for a, b in zip(left, right)]
    return entropy(parent) - sum(left) / n * entropy(left) - sum(right) / n * entropy(right)


def div_gain(values, labels, tau, n_classes, q_left, q_right):
    left, right = side_counts(values, labels, tau, n_classes)
    n = len(labels)
    out = 1.0
    if sum(left):
        out -= sum(left) / n * jsd(probs(left), q_left)
    if sum(right):
        out -= sum(right) / n * jsd(probs(right), q_right)
    return out


def midpoints(values):
    distinct = sorted(set(values))
    out = []
    for a, b in zip(distinct, distinct[1:]):
        m = (a + b) / 2
        out.append(a if m >= b else m)
    return out


def threshold_search(values, labels, n_classes, q_left, q_right, criterion="both"):
    """Exhaustive evaluation of every candidate; returns (threshold, dg)."""
    cands = midpoints(values)
    if not cands:
        raise ValueError("degenerate feature")
    ig = [info_gain(values, labels, t, n_classes) for t in cands]
    dg = [div_gain(values, labels, t, n_classes, q_left, q_right) for t in cands]
    if criterion == "ig":
        score, keep = ig, range(len(cands))
    else:
        score = dg
        if criterion == "dg":
            keep = range(len(cands))
        else:
            keep = [
                i
                for i in range(len(cands))
                if (i == 0 or ig[i] >= ig[i - 1] - TOL) and (i == len(cands) - 1 or ig[i] >= ig[i + 1] - TOL)
            ]
    best = max(score[i] for i in keep)
    i = min(i for i in keep if score[i] >= best - TOL)
    return cands[i], dg[i]


def paths(node, prefix=()):
    """Root-to-leaf literal sequences of a tree."""
    if node.is_leaf:
        yield prefix
        return
    if node.kind == "numeric":
        yield from paths(node.children[0], prefix + ((node.feature, "<=", node.threshold),))
        yield from paths(node.children[1], prefix + ((node.feature, ">", node.threshold),))
    else:
        for k, child in enumerate(node.children):
            yield from paths(child, prefix + ((node.feature, "==", k),))


def prefix_comparable(a, b):
    k = min(len(a), len(b))
    return a[:k] == b[:k]
