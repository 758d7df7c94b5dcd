"""Independent reference computations shared by several test modules."""

import numpy as np


def edge_oracle(m, k):
    """Analytic flux weak integrals: on each boundary arc, int k sin(k theta) phi_i ds
    with phi_i the linear hat along the chord, by Gauss-Legendre quadrature."""
    b = m.boundary_nodes
    n = len(b)
    t = np.arctan2(m.vertices[b, 1], m.vertices[b, 0])
    xg, wg = np.polynomial.legendre.leggauss(20)
    out = np.zeros(n)
    for i in range(n):
        j = (i + 1) % n
        p, q = m.vertices[b[i]], m.vertices[b[j]]
        length = np.linalg.norm(q - p)
        s = 0.5 * (xg + 1)
        pts = p[None] + s[:, None] * (q - p)[None]
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        r = np.hypot(*pts.T)
        # normal derivative of r^k sin(k theta) along the chord's outward normal
        nrm = np.array([q[1] - p[1], p[0] - q[0]]) / length
        gx = k * r ** (k - 1) * (np.cos(theta) * np.sin(k * theta) - np.sin(theta) * np.cos(k * theta))
        gy = k * r ** (k - 1) * (np.sin(theta) * np.sin(k * theta) + np.cos(theta) * np.cos(k * theta))
        dn = gx * nrm[0] + gy * nrm[1]
        w = 0.5 * wg * length
        out[i] += np.sum(w * dn * (1 - s))
        out[j] += np.sum(w * dn * s)
    return out, t


def conjugate_posterior(A, y, s, prior_sdev=1.0):
    """Exact Gaussian posterior of x ~ N(0, prior_sdev^2 I), y = A x + N(0, s^2 I)."""
    d = A.shape[1]
    precision = np.eye(d) / prior_sdev**2 + A.T @ A / s**2
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    return cov @ (A.T @ y) / s**2, cov


def heat_modes(xi, tau, k=1):
    """Separable solution e^{-k^2 pi^2 tau} sin(k pi xi) of u_t = u_xx on (0, 1)."""
    return np.exp(-(k * np.pi) ** 2 * tau) * np.sin(k * np.pi * xi)
