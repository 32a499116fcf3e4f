"""Independent reference implementations used as test oracles.

Each one is written the slow, obvious way so it shares no code path with
the package: explicit SSE sums for CART, a generic QP solver for the SVR
dual, a dense matrix inverse for GP regression and central differences for
gradients.
"""

from __future__ import annotations

import numpy as np

TIE_RTOL = 1e-9


def _seq_mean(v) -> float:
    s = 0.0
    for x in v:
        s += x
    return s / len(v)


def _sse(v) -> float:
    m = sum(v) / len(v)
    return float(sum((x - m) ** 2 for x in v))


def brute_force_cart(X, y, min_leaf):
    """Exhaustive greedy CART.

    Returns ``(preorder, predict)`` where ``preorder`` lists
    ``(feature, threshold)`` per node in depth-first preorder and leaves
    appear as ``(-1, value)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    nodes = []  # each: [feature, threshold, left, right, value]

    def grow(idx):
        me = len(nodes)
        nodes.append([-1, 0.0, -1, -1, _seq_mean(list(y[idx]))])
        n = len(idx)
        if n < 2 * min_leaf:
            return me
        parent = _sse(list(y[idx]))
        if parent <= 0:
            return me
        cands = []
        for f in range(X.shape[1]):
            values = sorted(set(X[idx, f]))
            for a, b in zip(values, values[1:]):
                thr = (a + b) / 2.0
                li = [i for i in idx if X[i, f] <= thr]
                ri = [i for i in idx if X[i, f] > thr]
                if len(li) < min_leaf or len(ri) < min_leaf:
                    continue
                gain = parent - _sse(list(y[li])) - _sse(list(y[ri]))
                cands.append((f, thr, gain, li, ri))
        if not cands:
            return me
        best = max(c[2] for c in cands)
        tol = TIE_RTOL * parent
        if best <= tol:
            return me
        f, thr, _, li, ri = next(c for c in cands if c[2] >= best - tol)
        nodes[me][0] = f
        nodes[me][1] = thr
        nodes[me][2] = grow(sorted(li))
        nodes[me][3] = grow(sorted(ri))
        return me

    grow(list(range(len(y))))

    def predict(Q):
        out = []
        for q in np.atleast_2d(Q):
            k = 0
            while nodes[k][0] >= 0:
                k = nodes[k][2] if q[nodes[k][0]] <= nodes[k][1] else nodes[k][3]
            out.append(nodes[k][4])
        return np.array(out)

    preorder = [(nd[0], nd[1]) if nd[0] >= 0 else (-1, nd[4]) for nd in nodes]
    return preorder, predict


def svr_dual_qp(K, y, C, eps):
    """Solve the epsilon-SVR dual with cvxopt; returns (beta, objective).

    Variables are ``[a; a*]``; minimise
    ``0.5 (a-a*)' K (a-a*) + eps * sum(a + a*) - y' (a-a*)``
    subject to ``sum(a - a*) = 0`` and ``0 <= a, a* <= C``.
    """
    from cvxopt import matrix, solvers

    n = len(y)
    D = np.hstack([np.eye(n), -np.eye(n)])
    P = D.T @ K @ D
    P = 0.5 * (P + P.T) + 1e-12 * np.eye(2 * n)
    q = eps * np.ones(2 * n) - D.T @ y
    G = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.concatenate([np.zeros(2 * n), C * np.ones(2 * n)])
    A = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
    solvers.options.update(show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12, maxiters=200)
    sol = solvers.qp(matrix(P), matrix(q), matrix(G), matrix(h), matrix(A), matrix(0.0))
    z = np.array(sol["x"]).ravel()
    beta = D @ z
    obj = 0.5 * beta @ K @ beta + eps * z.sum() - y @ beta
    return beta, float(obj)


def svr_bias_from_dual(K, y, beta, C, eps, tol=1e-6):
    """Bias from the KKT conditions on free support vectors."""
    f = K @ beta
    free = (np.abs(beta) > tol) & (np.abs(beta) < C - tol)
    if not free.any():
        return None
    return float(np.mean(y[free] - f[free] - eps * np.sign(beta[free])))


def gp_dense(Xtr, y, Xte, kernel_fn, noise):
    """Posterior mean via an explicit inverse of the noisy Gram matrix."""
    K = np.array([[kernel_fn(a, b) for b in Xtr] for a in Xtr])
    Ks = np.array([[kernel_fn(a, b) for b in Xtr] for a in Xte])
    inv = np.linalg.inv(K + noise**2 * np.eye(len(Xtr)))
    return Ks @ (inv @ y)


def central_difference(f, params: dict, h=1e-6) -> dict:
    out = {}
    for k, v in params.items():
        g = np.zeros_like(v)
        for idx in np.ndindex(v.shape):
            old = v[idx]
            v[idx] = old + h
            fp = f(params)
            v[idx] = old - h
            fm = f(params)
            v[idx] = old
            g[idx] = (fp - fm) / (2 * h)
        out[k] = g
    return out
