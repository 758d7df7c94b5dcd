"""Numpy implementations of the inner loops in ``_ckernels.pyx``."""

import numpy as np


def assemble_csr_data(local, coef, slots, nnz):
    weights = (coef[:, None] * local).ravel()
    return np.bincount(slots.ravel(), weights=weights, minlength=nnz).astype(np.float64)


def euler_tridiag(lower, diag, upper, u0, f, dt, n_steps, blowup):
    n = u0.shape[0]
    out = np.empty((n_steps + 1, n))
    out[0] = u0
    for k in range(n_steps):
        u = out[k]
        v = diag * u + f
        v[1:] += lower * u[:-1]
        v[:-1] += upper * u[1:]
        out[k + 1] = u + dt * v
        if not np.all(np.abs(out[k + 1]) <= blowup):
            return out, k + 1
    return out, -1


def leapfrog_record(u0, courant2, n_steps, sensors, stride):
    n = u0.shape[0]
    n_rec = n_steps // stride
    rec = np.empty((len(sensors), n_rec))
    prev = np.array(u0, dtype=np.float64)
    prev[0] = prev[-1] = 0.0
    cur = np.zeros(n)
    cur[1:-1] = prev[1:-1] + 0.5 * courant2 * (prev[2:] - 2.0 * prev[1:-1] + prev[:-2])
    r = 0
    if stride == 1 and n_rec > 0:
        rec[:, 0] = cur[sensors]
        r = 1
    nxt = np.zeros(n)
    for k in range(2, n_steps + 1):
        nxt[1:-1] = 2.0 * cur[1:-1] - prev[1:-1] + courant2 * (cur[2:] - 2.0 * cur[1:-1] + cur[:-2])
        prev, cur, nxt = cur, nxt, prev
        if k % stride == 0 and r < n_rec:
            rec[:, r] = cur[sensors]
            r += 1
    return rec


def cholesky_symbolic(Cp, Ci, n):
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(Cp[k], Cp[k + 1]):
            i = int(Ci[p])
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = int(inext)
    counts = np.ones(n, dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    for k in range(n):
        flag[k] = k
        for p in range(Cp[k], Cp[k + 1]):
            i = int(Ci[p])
            if i > k:
                continue
            while flag[i] != k:
                counts[i] += 1
                flag[i] = k
                i = int(parent[i])
    Lp = np.zeros(n + 1, dtype=np.int64)
    Lp[1:] = np.cumsum(counts)
    return parent, Lp


def cholesky_numeric(Cp, Ci, Cx, parent, Lp):
    n = len(parent)
    Li = np.empty(Lp[n], dtype=np.int64)
    Lx = np.empty(Lp[n], dtype=np.float64)
    nxt = np.array(Lp[:n], dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    x = np.zeros(n)
    for k in range(n):
        flag[k] = k
        pattern = []
        for p in range(Cp[k], Cp[k + 1]):
            i = int(Ci[p])
            if i > k:
                continue
            x[i] += Cx[p]
            path = []
            while flag[i] != k:
                path.append(i)
                flag[i] = k
                i = int(parent[i])
            pattern = path + pattern
        d = x[k]
        x[k] = 0.0
        for i in pattern:
            lki = x[i] / Lx[Lp[i]]
            x[i] = 0.0
            rows = Li[Lp[i] + 1:nxt[i]]
            x[rows] -= Lx[Lp[i] + 1:nxt[i]] * lki
            d -= lki * lki
            Li[nxt[i]] = k
            Lx[nxt[i]] = lki
            nxt[i] += 1
        if not d > 0.0:
            return Li, Lx, k
        Li[nxt[k]] = k
        Lx[nxt[k]] = np.sqrt(d)
        nxt[k] += 1
    return Li, Lx, -1


def cholesky_solve(Lp, Li, Lx, b):
    n = len(b)
    x = np.array(b, dtype=np.float64)
    for j in range(n):
        x[j] /= Lx[Lp[j]]
        sl = slice(Lp[j] + 1, Lp[j + 1])
        x[Li[sl]] -= Lx[sl] * x[j]
    for j in range(n - 1, -1, -1):
        sl = slice(Lp[j] + 1, Lp[j + 1])
        x[j] -= Lx[sl] @ x[Li[sl]]
        x[j] /= Lx[Lp[j]]
    return x
