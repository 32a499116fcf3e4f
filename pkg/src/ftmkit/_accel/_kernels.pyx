# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: CART tree growth, epsilon-SVR SMO, breakpoint search.

Semantics are identical to ``_fallback.py``; see there for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef double TIE_RTOL = 1e-9
cdef double TAU = 1e-12


# ---------------------------------------------------------------- tree

def build_tree(X, y, Py_ssize_t min_leaf):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t p = Xv.shape[1]

    feature, threshold, left, right, value, count = [], [], [], [], [], []
    root_idx = np.arange(n, dtype=np.intp)
    feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
    value.append(_mean(yv, root_idx)); count.append(n)
    stack = [(0, root_idx)]
    cdef Py_ssize_t node
    while stack:
        node, idx = stack.pop()
        split = _best_split(Xv, yv, idx, value[node], min_leaf, p)
        if split is None:
            continue
        f, thr, left_idx, right_idx = split
        feature[node] = f
        threshold[node] = thr
        for child_idx in (left_idx, right_idx):
            feature.append(-1); threshold.append(0.0); left.append(-1); right.append(-1)
            value.append(_mean(yv, child_idx)); count.append(len(child_idx))
        li = len(feature) - 2
        ri = len(feature) - 1
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


cdef double _mean(double[::1] yv, cnp.intp_t[::1] idx):
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(idx.shape[0]):
        s += yv[idx[k]]
    return s / idx.shape[0]


cdef object _best_split(double[:, ::1] Xv, double[::1] yv, object idx_obj,
                        double mean, Py_ssize_t min_leaf, Py_ssize_t p):
    cdef cnp.intp_t[::1] idx = idx_obj
    cdef Py_ssize_t n = idx.shape[0]
    if n < 2 * min_leaf:
        return None
    cdef Py_ssize_t lo = min_leaf, hi = n - min_leaf
    if hi < lo:
        return None
    cdef double[::1] yc = np.empty(n)
    cdef double sse_parent = 0.0, total = 0.0, v
    cdef Py_ssize_t k, f, i
    for k in range(n):
        yc[k] = yv[idx[k]] - mean
    for k in range(n):
        sse_parent += yc[k] * yc[k]
    if sse_parent <= 0.0:
        return None
    for k in range(n):
        total += yc[k]

    cdef double[:, ::1] gains = np.full((p, n + 1), -INFINITY)
    cdef double[:, ::1] xs_all = np.empty((p, n))
    orders = []
    cdef cnp.intp_t[::1] order
    cdef double sl, sr, g, best = -INFINITY
    cdef double base = total * total / n
    for f in range(p):
        order_obj = np.argsort(np.asarray(Xv[:, f])[idx_obj], kind="stable")
        orders.append(order_obj)
        order = order_obj
        for k in range(n):
            xs_all[f, k] = Xv[idx[order[k]], f]
        sl = 0.0
        for i in range(1, hi + 1):
            sl += yc[order[i - 1]]
            if i < lo:
                continue
            if xs_all[f, i - 1] == xs_all[f, i]:
                continue
            sr = total - sl
            g = sl * sl / i + sr * sr / (n - i) - base
            gains[f, i] = g
            if g > best:
                best = g
    cdef double tol = TIE_RTOL * sse_parent
    if best <= tol:
        return None
    cdef double limit = best - tol
    for f in range(p):
        for i in range(lo, hi + 1):
            if gains[f, i] >= limit:
                order_obj = orders[f]
                thr = (xs_all[f, i - 1] + xs_all[f, i]) / 2.0
                left_idx = np.sort(idx_obj[order_obj[:i]])
                right_idx = np.sort(idx_obj[order_obj[i:]])
                return int(f), float(thr), left_idx, right_idx
    return None


# ---------------------------------------------------------------- SMO

def smo_solve(K, target, double C, double epsilon, double tol, Py_ssize_t max_iter):
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(target, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t m = 2 * n
    cdef double[::1] ys = np.empty(m)
    cdef double[::1] p = np.empty(m)
    cdef double[::1] alpha = np.zeros(m)
    cdef double[::1] G = np.empty(m)
    cdef double[::1] QD = np.empty(m)
    cdef Py_ssize_t k, i, j, it = 0
    for k in range(n):
        ys[k] = 1.0
        ys[k + n] = -1.0
        p[k] = epsilon - t[k]
        p[k + n] = epsilon + t[k]
        QD[k] = Kv[k, k]
        QD[k + n] = Kv[k, k]
    for k in range(m):
        G[k] = p[k]

    cdef double gmax, gmax2, gap = INFINITY, s, grad_diff, quad, obj, obj_min
    cdef double qij, ai_old, aj_old, ai, aj, dai, daj, yi, yj
    cdef bint converged = False, in_up, in_low
    while it < max_iter:
        gmax = -INFINITY
        i = -1
        for k in range(m):
            if ys[k] > 0:
                in_up = alpha[k] < C
            else:
                in_up = alpha[k] > 0
            if in_up:
                s = -ys[k] * G[k]
                if s > gmax:
                    gmax = s
                    i = k
        gmax2 = -INFINITY
        for k in range(m):
            if ys[k] > 0:
                in_low = alpha[k] > 0
            else:
                in_low = alpha[k] < C
            if in_low:
                s = ys[k] * G[k]
                if s > gmax2:
                    gmax2 = s
        gap = gmax + gmax2
        if gap < tol or i < 0:
            converged = True
            break
        yi = ys[i]
        obj_min = INFINITY
        j = -1
        for k in range(m):
            if ys[k] > 0:
                in_low = alpha[k] > 0
            else:
                in_low = alpha[k] < C
            if not in_low:
                continue
            grad_diff = gmax + ys[k] * G[k]
            if grad_diff > 0:
                # Q_ik = yi*yk*K; quad = QD_i + QD_k - 2*yi*yk*Q_ik
                quad = QD[i] + QD[k] - 2.0 * yi * ys[k] * (yi * ys[k] * Kv[i % n, k % n])
                if not quad > 0:
                    quad = TAU
                obj = -(grad_diff * grad_diff) / quad
                if obj < obj_min:
                    obj_min = obj
                    j = k
        if j < 0:
            converged = True
            break
        it += 1
        yj = ys[j]
        qij = yi * yj * Kv[i % n, j % n]
        ai_old = alpha[i]
        aj_old = alpha[j]
        ai, aj = _pair_update(ai_old, aj_old, yi, yj, G[i], G[j], QD[i], QD[j], qij, C)
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for k in range(m):
            G[k] += (yi * ys[k] * Kv[i % n, k % n]) * dai + (yj * ys[k] * Kv[j % n, k % n]) * daj

    rho = _rho(alpha, ys, G, C)
    obj = 0.0
    for k in range(m):
        obj += alpha[k] * (G[k] + p[k])
    beta = np.empty(n)
    for k in range(n):
        beta[k] = alpha[k] - alpha[k + n]
    return beta, rho, int(it), float(gap), obj / 2.0, bool(converged)


cdef tuple _pair_update(double ai, double aj, double yi, double yj, double gi, double gj,
                        double qdi, double qdj, double qij, double C):
    cdef double quad, delta, diff, s
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


cdef double _rho(double[::1] alpha, double[::1] ys, double[::1] G, double C):
    cdef Py_ssize_t k, m = alpha.shape[0], nfree = 0
    cdef double ub = INFINITY, lb = -INFINITY, sfree = 0.0, yG
    for k in range(m):
        yG = ys[k] * G[k]
        if alpha[k] >= C:
            if ys[k] < 0:
                if yG < ub:
                    ub = yG
            else:
                if yG > lb:
                    lb = yG
        elif alpha[k] <= 0:
            if ys[k] > 0:
                if yG < ub:
                    ub = yG
            else:
                if yG > lb:
                    lb = yG
        else:
            nfree += 1
            sfree += yG
    if nfree > 0:
        return sfree / nfree
    return (ub + lb) / 2.0


# ---------------------------------------------------------------- breakpoints

cdef inline double _seg_sse(double[:, ::1] st, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef double n = st[hi, 0] - st[lo, 0]
    cdef double sx = st[hi, 1] - st[lo, 1]
    cdef double sy = st[hi, 2] - st[lo, 2]
    cdef double sxx = st[hi, 3] - st[lo, 3]
    cdef double sxy = st[hi, 4] - st[lo, 4]
    cdef double syy = st[hi, 5] - st[lo, 5]
    cdef double vxx = sxx - sx * sx / n
    cdef double vyy = syy - sy * sy / n
    cdef double vxy = sxy - sx * sy / n
    cdef double sse
    if vxx > 0:
        sse = vyy - vxy * vxy / vxx
    else:
        sse = vyy
    if sse < 0.0:
        sse = 0.0
    return sse


def segmented_grid_search(stats, cuts, Py_ssize_t n_bp, Py_ssize_t min_points):
    cdef double[:, ::1] st = np.ascontiguousarray(stats, dtype=np.float64)
    cuts_arr = np.asarray(cuts, dtype=np.int64)
    cdef Py_ssize_t n = <Py_ssize_t>(st[st.shape[0] - 1, 0] + 0.5)
    c_arr = cuts_arr[(cuts_arr >= min_points) & (n - cuts_arr >= min_points)]
    cdef long long[::1] c = np.ascontiguousarray(c_arr, dtype=np.int64)
    cdef Py_ssize_t nc = c.shape[0], ia, ib
    cdef double best = INFINITY, sse, s_first, limit
    if nc == 0:
        return INFINITY, None
    if n_bp == 1:
        for ia in range(nc):
            sse = _seg_sse(st, 0, c[ia]) + _seg_sse(st, c[ia], n)
            if sse < best:
                best = sse
        limit = best + TIE_RTOL * best + 1e-12
        for ia in range(nc):
            sse = _seg_sse(st, 0, c[ia]) + _seg_sse(st, c[ia], n)
            if sse <= limit:
                return best, (int(c[ia]),)
        return INFINITY, None
    if n_bp != 2:
        raise ValueError("grid kernel handles one or two breakpoints")
    with nogil:
        for ia in range(nc):
            s_first = _seg_sse(st, 0, c[ia])
            for ib in range(ia + 1, nc):
                if c[ib] - c[ia] < min_points:
                    continue
                sse = s_first + _seg_sse(st, c[ia], c[ib]) + _seg_sse(st, c[ib], n)
                if sse < best:
                    best = sse
    if best == INFINITY:
        return INFINITY, None
    limit = best + TIE_RTOL * best + 1e-12
    for ia in range(nc):
        s_first = _seg_sse(st, 0, c[ia])
        for ib in range(ia + 1, nc):
            if c[ib] - c[ia] < min_points:
                continue
            sse = s_first + _seg_sse(st, c[ia], c[ib]) + _seg_sse(st, c[ib], n)
            if sse <= limit:
                return best, (int(c[ia]), int(c[ib]))
    return INFINITY, None
