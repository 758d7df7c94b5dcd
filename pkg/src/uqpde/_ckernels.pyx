# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror :mod:`uqpde._pykernels` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def assemble_csr_data(const double[:, ::1] local, const double[::1] coef,
                      const cnp.int64_t[:, ::1] slots, Py_ssize_t nnz):
    """Scatter ``coef[t] * local[t, :]`` into CSR data positions ``slots[t, :]``."""
    cdef Py_ssize_t m = local.shape[0], k = local.shape[1]
    cdef Py_ssize_t t, a
    cdef double c
    out = np.zeros(nnz, dtype=np.float64)
    cdef double[::1] data = out
    for t in range(m):
        c = coef[t]
        for a in range(k):
            data[slots[t, a]] += c * local[t, a]
    return out


def euler_tridiag(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] u0,
                  const double[::1] f, double dt, Py_ssize_t n_steps,
                  double blowup):
    """Explicit Euler for u' = D u + f with tridiagonal D.

    Returns ``(states, failed_step)``; ``states`` has shape (n_steps + 1, n) and
    ``failed_step`` is -1 unless max|u| exceeded ``blowup``.
    """
    cdef Py_ssize_t n = u0.shape[0]
    cdef Py_ssize_t k, i
    cdef double v
    cdef bint bad
    out = np.empty((n_steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] u = out
    for i in range(n):
        u[0, i] = u0[i]
    for k in range(n_steps):
        bad = False
        for i in range(n):
            v = diag[i] * u[k, i] + f[i]
            if i > 0:
                v += lower[i - 1] * u[k, i - 1]
            if i < n - 1:
                v += upper[i] * u[k, i + 1]
            v = u[k, i] + dt * v
            u[k + 1, i] = v
            if not (fabs(v) <= blowup):
                bad = True
        if bad:
            return out, k + 1
    return out, -1


def leapfrog_record(const double[::1] u0, double courant2, Py_ssize_t n_steps,
                    const cnp.int64_t[::1] sensors, Py_ssize_t stride):
    """Leapfrog for u_tt = u_xx with zero initial velocity and zero Dirichlet ends.

    Records ``u[sensors]`` after every ``stride`` steps; result shape is
    (len(sensors), n_steps // stride).  Only the band reachable from the
    support of ``u0`` is updated; the rest of the grid is identically zero.
    """
    cdef Py_ssize_t n = u0.shape[0], ns = sensors.shape[0]
    cdef Py_ssize_t n_rec = n_steps // stride
    cdef Py_ssize_t k, i, s, r = 0, lo, hi
    rec = np.empty((ns, n_rec), dtype=np.float64)
    cdef double[:, ::1] out = rec
    buf_a = np.zeros((3, n), dtype=np.float64)
    cdef double[:, ::1] buf = buf_a
    cdef double *prev = &buf[0, 0]
    cdef double *cur = &buf[1, 0]
    cdef double *nxt = &buf[2, 0]
    cdef double *tmp
    for i in range(1, n - 1):
        prev[i] = u0[i]
    lo = 1
    while lo < n - 1 and prev[lo] == 0.0:
        lo += 1
    hi = n - 2
    while hi >= lo and prev[hi] == 0.0:
        hi -= 1
    if hi < lo:
        # zero data stays zero
        rec[...] = 0.0
        return rec
    # the first step already reaches one node further on each side
    lo = lo - 1 if lo > 1 else 1
    hi = hi + 1 if hi < n - 2 else n - 2
    for i in range(lo, hi + 1):
        cur[i] = prev[i] + 0.5 * courant2 * (prev[i + 1] - 2.0 * prev[i] + prev[i - 1])
    if stride == 1 and n_rec > 0:
        for s in range(ns):
            out[s, 0] = cur[sensors[s]]
        r = 1
    for k in range(2, n_steps + 1):
        if lo > 1:
            lo -= 1
        if hi < n - 2:
            hi += 1
        for i in range(lo, hi + 1):
            nxt[i] = (2.0 * cur[i] - prev[i]
                      + courant2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]))
        tmp = prev
        prev = cur
        cur = nxt
        nxt = tmp
        if k % stride == 0 and r < n_rec:
            for s in range(ns):
                out[s, r] = cur[sensors[s]]
            r += 1
    return rec


def cholesky_symbolic(const cnp.int32_t[::1] Cp, const cnp.int32_t[::1] Ci, Py_ssize_t n):
    """Elimination tree and column pointers of L for the upper-triangular CSC pattern C."""
    parent_a = np.empty(n, dtype=np.int64)
    ancestor_a = np.empty(n, dtype=np.int64)
    counts_a = np.ones(n, dtype=np.int64)
    flag_a = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] parent = parent_a, ancestor = ancestor_a, counts = counts_a, flag = flag_a
    cdef Py_ssize_t k, p, i, inext
    for k in range(n):
        parent[k] = -1
        ancestor[k] = -1
        for p in range(Cp[k], Cp[k + 1]):
            i = Ci[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    for k in range(n):
        flag[k] = k
        for p in range(Cp[k], Cp[k + 1]):
            i = Ci[p]
            if i > k:
                continue
            while flag[i] != k:
                counts[i] += 1
                flag[i] = k
                i = parent[i]
    Lp_a = np.zeros(n + 1, dtype=np.int64)
    Lp_a[1:] = np.cumsum(counts_a)
    return parent_a, Lp_a


def cholesky_numeric(const cnp.int32_t[::1] Cp, const cnp.int32_t[::1] Ci,
                     const double[::1] Cx, const cnp.int64_t[::1] parent,
                     const cnp.int64_t[::1] Lp):
    """Up-looking Cholesky. Returns ``(Li, Lx, failed_column)``; failed_column is -1 on success."""
    cdef Py_ssize_t n = parent.shape[0]
    cdef Py_ssize_t nnz = Lp[n]
    Li_a = np.empty(nnz, dtype=np.int64)
    Lx_a = np.empty(nnz, dtype=np.float64)
    cdef cnp.int64_t[::1] Li = Li_a
    cdef double[::1] Lx = Lx_a
    nxt_a = np.array(Lp[:n], dtype=np.int64)
    stack_a = np.empty(n, dtype=np.int64)
    flag_a = np.empty(n, dtype=np.int64)
    x_a = np.zeros(n, dtype=np.float64)
    cdef cnp.int64_t[::1] nxt = nxt_a, s = stack_a, flag = flag_a
    cdef double[::1] x = x_a
    cdef Py_ssize_t k, p, i, top, ln, q
    cdef double d, lki
    for k in range(n):
        top = n
        flag[k] = k
        for p in range(Cp[k], Cp[k + 1]):
            i = Ci[p]
            if i > k:
                continue
            x[i] += Cx[p]
            ln = 0
            while flag[i] != k:
                s[ln] = i
                ln += 1
                flag[i] = k
                i = parent[i]
            while ln > 0:
                ln -= 1
                top -= 1
                s[top] = s[ln]
        d = x[k]
        x[k] = 0.0
        while top < n:
            i = s[top]
            top += 1
            lki = x[i] / Lx[Lp[i]]
            x[i] = 0.0
            for q in range(Lp[i] + 1, nxt[i]):
                x[Li[q]] -= Lx[q] * lki
            d -= lki * lki
            q = nxt[i]
            nxt[i] += 1
            Li[q] = k
            Lx[q] = lki
        if not (d > 0.0):
            return Li_a, Lx_a, k
        q = nxt[k]
        nxt[k] += 1
        Li[q] = k
        Lx[q] = d ** 0.5
    return Li_a, Lx_a, -1


def cholesky_solve(const cnp.int64_t[::1] Lp, const cnp.int64_t[::1] Li,
                   const double[::1] Lx, const double[::1] b):
    """Solve L L^T x = b for the column-stored factor from ``cholesky_numeric``."""
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t j, p
    out = np.array(b, dtype=np.float64)
    cdef double[::1] x = out
    for j in range(n):
        x[j] /= Lx[Lp[j]]
        for p in range(Lp[j] + 1, Lp[j + 1]):
            x[Li[p]] -= Lx[p] * x[j]
    for j in range(n - 1, -1, -1):
        for p in range(Lp[j] + 1, Lp[j + 1]):
            x[j] -= Lx[p] * x[Li[p]]
        x[j] /= Lx[Lp[j]]
    return out
