"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation (sequential sums,
first-index tie-breaks) so both backends return identical results.
"""

from __future__ import annotations

import math

import numpy as np

TIE_RTOL = 1e-9
TAU = 1e-12


# ---------------------------------------------------------------- tree


def build_tree(X, y, min_leaf):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        yn = y[idx]
        value.append(float(np.cumsum(yn)[-1] / len(idx)))
        count.append(len(idx))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n))]
    while stack:
        node, idx = stack.pop()
        split = _best_split(X, y, idx, value[node], min_leaf)
        if split is None:
            continue
        f, thr, left_idx, right_idx = split
        feature[node] = f
        threshold[node] = thr
        li = new_node(left_idx)
        ri = new_node(right_idx)
        left[node] = li
        right[node] = ri
        stack.append((ri, right_idx))
        stack.append((li, left_idx))
    return (
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(value, dtype=np.float64),
        np.asarray(count, dtype=np.int32),
    )


def _best_split(X, y, idx, mean, min_leaf):
    n = len(idx)
    if n < 2 * min_leaf:
        return None
    yc = y[idx] - mean
    sse_parent = float(np.cumsum(yc * yc)[-1])
    if sse_parent <= 0.0:
        return None
    total = float(np.cumsum(yc)[-1])
    i = np.arange(min_leaf, n - min_leaf + 1)
    if len(i) == 0:
        return None
    best = -math.inf
    per_feature = []
    for f in range(X.shape[1]):
        order = np.argsort(X[idx, f], kind="stable")
        xs = X[idx, f][order]
        cs = np.cumsum(yc[order])
        sl = cs[i - 1]
        sr = total - sl
        gain = sl * sl / i + sr * sr / (n - i) - total * total / n
        gain[xs[i - 1] == xs[i]] = -math.inf
        per_feature.append((order, xs, gain))
        if gain.size:
            best = max(best, float(gain.max()))
    tol = TIE_RTOL * sse_parent
    if best <= tol:
        return None
    for f, (order, xs, gain) in enumerate(per_feature):
        hits = np.flatnonzero(gain >= best - tol)
        if hits.size:
            pos = int(i[hits[0]])
            thr = (xs[pos - 1] + xs[pos]) / 2.0
            left_idx = np.sort(idx[order[:pos]])
            right_idx = np.sort(idx[order[pos:]])
            return f, float(thr), left_idx, right_idx
    return None


# ---------------------------------------------------------------- SMO


def smo_solve(K, target, C, epsilon, tol, max_iter):
    """LIBSVM-style SMO for epsilon-SVR over a precomputed kernel matrix.

    Returns ``(beta, rho, iterations, gap, objective, converged)`` where the
    prediction is ``sum(beta * k(x_i, x)) - rho``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n = len(target)
    m = 2 * n
    ys = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - target, epsilon + target])
    alpha = np.zeros(m)
    G = p.copy()
    QD = np.concatenate([np.diag(K), np.diag(K)])

    it = 0
    gap = math.inf
    converged = False
    while it < max_iter:
        up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
        low = ((ys > 0) & (alpha > 0)) | ((ys < 0) & (alpha < C))
        score_up = np.where(up, -ys * G, -math.inf)
        i = int(np.argmax(score_up))
        gmax = score_up[i]
        score_low = np.where(low, ys * G, -math.inf)
        gmax2 = float(score_low.max())
        gap = gmax + gmax2
        if gap < tol or gmax == -math.inf:
            converged = True
            break
        krow = K[i % n]
        Qi = ys[i] * ys * np.concatenate([krow, krow])
        grad_diff = gmax + ys * G
        quad = QD[i] + QD - 2.0 * ys[i] * ys * Qi
        quad = np.where(quad > 0, quad, TAU)
        obj = np.where(low & (grad_diff > 0), -(grad_diff * grad_diff) / quad, math.inf)
        j = int(np.argmin(obj))
        if obj[j] == math.inf:
            converged = True
            break
        it += 1
        krow_j = K[j % n]
        Qj = ys[j] * ys * np.concatenate([krow_j, krow_j])
        ai_old, aj_old = alpha[i], alpha[j]
        ai, aj = _pair_update(ai_old, aj_old, ys[i], ys[j], G[i], G[j], QD[i], QD[j], Qi[j], C)
        alpha[i] = ai
        alpha[j] = aj
        G += Qi * (ai - ai_old) + Qj * (aj - aj_old)

    rho = _rho(alpha, ys, G, C)
    objective = float(np.cumsum(alpha * (G + p))[-1] / 2.0)
    beta = alpha[:n] - alpha[n:]
    return beta, rho, it, float(gap), objective, converged


def _pair_update(ai, aj, yi, yj, gi, gj, qdi, qdj, qij, C):
    if yi != yj:
        quad = qdi + qdj + 2.0 * qij
        if quad <= 0:
            quad = TAU
        delta = (-gi - gj) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj = 0.0
                ai = diff
        else:
            if ai < 0:
                ai = 0.0
                aj = -diff
        if diff > 0:
            if ai > C:
                ai = C
                aj = C - diff
        else:
            if aj > C:
                aj = C
                ai = C + diff
    else:
        quad = qdi + qdj - 2.0 * qij
        if quad <= 0:
            quad = TAU
        delta = (gi - gj) / quad
        s = ai + aj
        ai -= delta
        aj += delta
        if s > C:
            if ai > C:
                ai = C
                aj = s - C
        else:
            if aj < 0:
                aj = 0.0
                ai = s
        if s > C:
            if aj > C:
                aj = C
                ai = s - C
        else:
            if ai < 0:
                ai = 0.0
                aj = s
    return ai, aj


def _rho(alpha, ys, G, C):
    yG = ys * G
    at_ub = alpha >= C
    at_lb = alpha <= 0
    free = ~(at_ub | at_lb)
    if free.any():
        return float(np.cumsum(yG[free])[-1] / free.sum())
    ub_mask = (at_ub & (ys < 0)) | (at_lb & (ys > 0))
    lb_mask = (at_ub & (ys > 0)) | (at_lb & (ys < 0))
    ub = float(yG[ub_mask].min()) if ub_mask.any() else math.inf
    lb = float(yG[lb_mask].max()) if lb_mask.any() else -math.inf
    return (ub + lb) / 2.0


# ---------------------------------------------------------------- breakpoints


def _seg_sse(stats, lo, hi):
    d = stats[hi] - stats[lo]
    n, sx, sy, sxx, sxy, syy = d[..., 0], d[..., 1], d[..., 2], d[..., 3], d[..., 4], d[..., 5]
    vxx = sxx - sx * sx / n
    vyy = syy - sy * sy / n
    vxy = sxy - sx * sy / n
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = np.where(vxx > 0, vyy - vxy * vxy / np.where(vxx > 0, vxx, 1.0), vyy)
    return np.maximum(sse, 0.0)


def segmented_grid_search(stats, cuts, n_bp, min_points):
    """Exhaustive search over one or two cut positions.

    Returns ``(sse, cut_tuple)`` or ``(inf, None)`` when no placement keeps
    ``min_points`` samples in every segment.
    """
    stats = np.ascontiguousarray(stats, dtype=np.float64)
    cuts = np.asarray(cuts, dtype=np.int64)
    n = int(round(stats[-1, 0]))
    if n_bp == 1:
        c = cuts[(cuts >= min_points) & (n - cuts >= min_points)]
        if c.size == 0:
            return math.inf, None
        sse = _seg_sse(stats, 0, c) + _seg_sse(stats, c, n)
        best = float(sse.min())
        k = int(np.flatnonzero(sse <= best + TIE_RTOL * best + 1e-12)[0])
        return best, (int(c[k]),)
    if n_bp != 2:
        raise ValueError("grid kernel handles one or two breakpoints")
    c = cuts[(cuts >= min_points) & (n - cuts >= min_points)]
    best = math.inf
    rows = []
    for a in c:
        b = c[(c - a >= min_points)]
        if b.size == 0:
            rows.append(None)
            continue
        sse = _seg_sse(stats, 0, a) + _seg_sse(stats, a, b) + _seg_sse(stats, b, n)
        rows.append((b, sse))
        best = min(best, float(sse.min()))
    if best == math.inf:
        return math.inf, None
    limit = best + TIE_RTOL * best + 1e-12
    for a, row in zip(c, rows):
        if row is None:
            continue
        b, sse = row
        hits = np.flatnonzero(sse <= limit)
        if hits.size:
            return best, (int(a), int(b[hits[0]]))
    return math.inf, None
