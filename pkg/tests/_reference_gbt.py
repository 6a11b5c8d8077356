"""Slow, literal exact-greedy boosting used as an oracle for the compiled kernel."""
import numpy as np


def _best_split(X, r, rows, min_leaf):
    m = len(rows)
    tot = r[rows].sum()
    margin = 1e-11 * (r[rows] ** 2).sum()
    best = tot * tot / m
    best_j, best_thr = -1, 0.0
    for j in range(X.shape[1]):
        srt = rows[np.argsort(X[rows, j], kind="mergesort")]
        xs = X[srt, j]
        cs = np.cumsum(r[srt])
        for c in range(min_leaf, m - min_leaf + 1):
            if xs[c] <= xs[c - 1]:
                continue
            s = cs[c - 1]
            gain = s * s / c + (tot - s) ** 2 / (m - c)
            if gain > best + margin:
                best, best_j = gain, j
                best_thr = xs[c - 1] + 0.5 * (xs[c] - xs[c - 1])
    return best_j, best_thr


def fit_tree(X, r, max_depth, min_leaf):
    """Return a list-of-leaves representation: (mask_fn, value) pairs."""
    def grow(rows, depth):
        if depth == max_depth or len(rows) < 2 * min_leaf:
            return ("leaf", r[rows].mean())
        j, thr = _best_split(X, r, rows, min_leaf)
        if j < 0:
            return ("leaf", r[rows].mean())
        go = X[rows, j] <= thr
        return ("split", j, thr, grow(rows[go], depth + 1), grow(rows[~go], depth + 1))
    return grow(np.arange(X.shape[0]), 0)


def predict_tree(tree, x):
    while tree[0] == "split":
        _, j, thr, lt, rt = tree
        tree = lt if x[j] <= thr else rt
    return tree[1]


def boost(X, y, n_trees, lr, max_depth, min_leaf):
    f = np.full(len(y), y.mean())
    trees = []
    for _ in range(n_trees):
        tree = fit_tree(X, y - f, max_depth, min_leaf)
        trees.append(tree)
        f = f + lr * np.array([predict_tree(tree, x) for x in X])
    return y.mean(), trees, f
