"""Compiled kernels for squared-error gradient boosting with exact greedy trees.

Trees are stored as complete binary arrays of ``2**(depth+1) - 1`` slots:
node ``k`` has children ``2k+1`` / ``2k+2``; ``feature[k] == -1`` marks a leaf.
Rows with ``x[feature] <= threshold`` go left.

Tree growth keeps, for every feature, the row indices of each node in one
contiguous segment sorted by that feature; splitting a node stably
partitions its segment, so children stay sorted without re-sorting.
"""
import numpy as np
from numba import njit

GAIN_TOL = 1e-11


@njit(cache=True)
def _fit_tree(XT, presorted, order, tmp, tmp2, left, r, inv, max_depth, min_leaf,
              feat, thr, val, node_of, seg_lo, seg_hi):
    p, n = XT.shape
    n_nodes = feat.shape[0]
    for k in range(n_nodes):
        feat[k] = -1
        thr[k] = 0.0
        val[k] = 0.0
        seg_lo[k] = 0
        seg_hi[k] = 0
    order[:, :] = presorted
    seg_hi[0] = n

    lo = 0
    for depth in range(max_depth):
        hi = 2 * lo + 1
        for k in range(lo, hi):
            a = seg_lo[k]
            b = seg_hi[k]
            m = b - a
            if m < 2 * min_leaf:
                continue
            tot = 0.0
            ss = 0.0
            for t in range(a, b):
                ri = r[order[0, t]]
                tot += ri
                ss += ri * ri
            # a split must beat the unsplit score tot^2 / m by more than a
            # rounding-level margin, so equal-gain splits resolve by scan order
            margin = GAIN_TOL * ss
            best = tot * tot * inv[m]
            best_j = -1
            best_thr = 0.0
            for j in range(p):
                c = 0
                s = 0.0
                last = 0.0
                for t in range(a, b - min_leaf + 1):
                    i = order[j, t]
                    x = XT[j, i]
                    if c >= min_leaf and x > last:
                        s_r = tot - s
                        gain = s * s * inv[c] + s_r * s_r * inv[m - c]
                        if gain > best + margin:
                            best = gain
                            best_j = j
                            mid = last + 0.5 * (x - last)
                            if mid >= x:
                                mid = last
                            best_thr = mid
                    c += 1
                    s += r[i]
                    last = x
            if best_j < 0:
                continue
            feat[k] = best_j
            thr[k] = best_thr
            n_left = 0
            for t in range(a, b):
                i = order[0, t]
                g = 1 if XT[best_j, i] <= best_thr else 0
                left[i] = g
                n_left += g
            # children at the deepest level are never split: only the
            # first feature's ordering is needed to locate their rows
            n_part = 1 if depth == max_depth - 1 else p
            for j in range(n_part):
                q_l = a
                q_r = a + n_left
                for t in range(a, b):
                    i = order[j, t]
                    g = left[i]
                    tmp[q_l] = i
                    tmp2[q_r] = i
                    q_l += g
                    q_r += 1 - g
                for t in range(a, a + n_left):
                    order[j, t] = tmp[t]
                for t in range(a + n_left, b):
                    order[j, t] = tmp2[t]
            seg_lo[2 * k + 1] = a
            seg_hi[2 * k + 1] = a + n_left
            seg_lo[2 * k + 2] = a + n_left
            seg_hi[2 * k + 2] = b
        lo = hi

    for k in range(n_nodes):
        a = seg_lo[k]
        b = seg_hi[k]
        if b > a and feat[k] < 0:
            tot = 0.0
            for t in range(a, b):
                i = order[0, t]
                tot += r[i]
                node_of[i] = k
            val[k] = tot / (b - a)


@njit(cache=True)
def fit_boosted(X, y, n_trees, learning_rate, max_depth, min_leaf, init,
                checkpoints, train_staged):
    """Fit ``n_trees`` rounds; returns tree arrays and training losses.

    ``train_staged[c]`` receives the training predictions after
    ``checkpoints[c]`` rounds, and ``losses[t]`` the training MSE after
    ``t+1`` rounds.
    """
    n, p = X.shape
    n_nodes = 2 ** (max_depth + 1) - 1
    feat = np.full((n_trees, n_nodes), -1, dtype=np.int32)
    thr = np.zeros((n_trees, n_nodes))
    val = np.zeros((n_trees, n_nodes))
    losses = np.zeros(n_trees)
    XT = np.ascontiguousarray(X.T)
    presorted = np.empty((p, n), dtype=np.int64)
    for j in range(p):
        presorted[j] = np.argsort(XT[j], kind="mergesort")
    order = np.empty((p, n), dtype=np.int64)
    tmp = np.empty(n + 1, dtype=np.int64)
    tmp2 = np.empty(n + 1, dtype=np.int64)
    left = np.zeros(n, dtype=np.int64)
    inv = np.zeros(n + 1)
    for c in range(1, n + 1):
        inv[c] = 1.0 / c
    seg_lo = np.zeros(n_nodes, dtype=np.int64)
    seg_hi = np.zeros(n_nodes, dtype=np.int64)

    f = np.full(n, init)
    r = np.empty(n)
    node_of = np.zeros(n, dtype=np.int64)
    c = 0
    for t in range(n_trees):
        for i in range(n):
            r[i] = y[i] - f[i]
        _fit_tree(XT, presorted, order, tmp, tmp2, left, r, inv, max_depth, min_leaf,
                  feat[t], thr[t], val[t], node_of, seg_lo, seg_hi)
        loss = 0.0
        for i in range(n):
            f[i] = f[i] + learning_rate * val[t, node_of[i]]
            d = y[i] - f[i]
            loss += d * d
        losses[t] = loss / n
        while c < checkpoints.shape[0] and checkpoints[c] == t + 1:
            train_staged[c, :] = f
            c += 1
    return feat, thr, val, losses


@njit(cache=True)
def predict_staged(X, feat, thr, val, learning_rate, init, checkpoints, out):
    """Write predictions after ``checkpoints[c]`` rounds into ``out[c]``.

    The accumulation order matches ``fit_boosted`` so in-sample predictions
    are bit-identical to the fitted values.
    """
    n = X.shape[0]
    n_trees = feat.shape[0]
    for i in range(n):
        f = init
        c = 0
        for t in range(n_trees):
            k = 0
            while feat[t, k] >= 0:
                if X[i, feat[t, k]] <= thr[t, k]:
                    k = 2 * k + 1
                else:
                    k = 2 * k + 2
            f = f + learning_rate * val[t, k]
            while c < checkpoints.shape[0] and checkpoints[c] == t + 1:
                out[c, i] = f
                c += 1
