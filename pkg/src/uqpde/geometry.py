"""Parameterizations: maps between coefficient vectors and discretized fields.

Every geometry exposes ``par_dim`` (length of a coefficient vector), ``fun_dim``
(number of nodal function values), ``par2fun`` and, where the map is
invertible on its range, ``fun2par``. ``fun_geometry`` is the plain nodal
geometry the function values live on.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import femlite
from .exceptions import DimensionError, NonInvertibleMapError, NumericalError

DENSE_EIG_LIMIT = 4000  # generalized eigenproblems up to this size use dense eigh


@dataclass(frozen=True, eq=False)
class Grid1D:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64).ravel()
        if nodes.size < 2:
            raise ValueError("a grid needs at least 2 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, start, stop, n):
        return cls(np.linspace(start, stop, n))

    @classmethod
    def interior(cls, n, start=0.0, stop=1.0):
        """``n`` interior nodes of [start, stop] with spacing (stop - start) / (n + 1)."""
        h = (stop - start) / (n + 1)
        return cls(np.linspace(start + h, stop - h, n))

    def __len__(self):
        return self.nodes.size

    @property
    def lo(self):
        return float(self.nodes[0])

    @property
    def hi(self):
        return float(self.nodes[-1])

    def to_dict(self):
        return {"n": len(self), "min": self.lo, "max": self.hi}


@dataclass(frozen=True, eq=False)
class Grid2D:
    axis1: Grid1D
    axis2: Grid1D

    def __post_init__(self):
        for name in ("axis1", "axis2"):
            ax = getattr(self, name)
            if not isinstance(ax, Grid1D):
                object.__setattr__(self, name, Grid1D(ax))

    @property
    def shape(self):
        return len(self.axis1), len(self.axis2)


class Geometry:
    """Base class; subclasses implement ``_par2fun`` and optionally ``_fun2par``."""

    kind = "geometry"
    par_dim: int
    fun_dim: int

    def par2fun(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.par_dim:
            raise DimensionError(f"{type(self).__name__}.par2fun", self.par_dim, x.shape[0])
        return self._par2fun(x)

    def fun2par(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.shape[0] != self.fun_dim:
            raise DimensionError(f"{type(self).__name__}.fun2par", self.fun_dim, f.shape[0])
        return self._fun2par(f)

    def _fun2par(self, f):
        raise NonInvertibleMapError(f"{type(self).__name__} has no inverse map")

    @property
    def fun_geometry(self) -> "Geometry":
        return self

    @property
    def is_linear(self) -> bool:
        return True

    def to_dict(self):
        return {"kind": self.kind, "par_dim": self.par_dim, "fun_dim": self.fun_dim}

    def __repr__(self):
        return f"{type(self).__name__}(par_dim={self.par_dim}, fun_dim={self.fun_dim})"


class Continuous1D(Geometry):
    """Identity geometry: parameters are nodal values on a 1D grid."""

    kind = "continuous1d"

    def __init__(self, grid):
        self.grid = grid if isinstance(grid, Grid1D) else Grid1D(grid)
        self.par_dim = self.fun_dim = len(self.grid)

    def _par2fun(self, x):
        return x.copy()

    def _fun2par(self, f):
        return f.copy()

    def to_dict(self):
        return {**super().to_dict(), "grid": self.grid.to_dict()}


class Continuous2D(Geometry):
    """Identity geometry on a tensor grid, values stored axis2-major.

    Entry ``j * len(axis1) + i`` belongs to ``(axis1[i], axis2[j])``; for the PAT
    observations axis1 is time and axis2 the sensor, so each sensor's time
    series is contiguous.
    """

    kind = "continuous2d"

    def __init__(self, grid):
        self.grid = grid if isinstance(grid, Grid2D) else Grid2D(*grid)
        n1, n2 = self.grid.shape
        self.par_dim = self.fun_dim = n1 * n2

    def _par2fun(self, x):
        return x.copy()

    def _fun2par(self, f):
        return f.copy()

    def to_dict(self):
        return {**super().to_dict(), "shape": list(self.grid.shape)}


class NodalGeometry(Geometry):
    """FEM coefficient vector on a triangle mesh or P1 values on a 1D grid."""

    kind = "nodal"

    def __init__(self, mesh):
        if isinstance(mesh, (np.ndarray, list, tuple)):
            mesh = Grid1D(mesh)
        self.mesh = mesh
        self.par_dim = self.fun_dim = mesh.n_nodes if isinstance(mesh, femlite.TriMesh) else len(mesh)

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.mesh, Grid1D) else 2

    def _par2fun(self, x):
        return x.copy()

    def _fun2par(self, f):
        return f.copy()

    @cached_property
    def matrices(self):
        """(stiffness, mass) with natural boundary treatment; 1D mass is diagonal."""
        if isinstance(self.mesh, Grid1D):
            K, w = femlite.interval_matrices(self.mesh.nodes)
            return K, sp.diags(w, format="csr")
        return self.mesh.stiffness_matrix(1.0), self.mesh.mass_matrix

    @cached_property
    def mesh_hash(self) -> str:
        if isinstance(self.mesh, Grid1D):
            return hashlib.sha1(self.mesh.nodes.tobytes()).hexdigest()
        return self.mesh.content_hash

    def to_dict(self):
        d = super().to_dict()
        d["mesh"] = "grid1d" if self.dim == 1 else "trimesh"
        return d


class StepExpansion(Geometry):
    """Piecewise-constant field on ``n_steps`` equal intervals of ``domain``.

    ``domain`` defaults to the grid hull [grid.min, grid.max].
    """

    kind = "step_expansion"

    def __init__(self, grid, n_steps: int, domain=None):
        self.grid = grid if isinstance(grid, Grid1D) else Grid1D(grid)
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        self.n_steps = int(n_steps)
        self.par_dim = self.n_steps
        self.fun_dim = len(self.grid)
        lo, hi = (self.grid.lo, self.grid.hi) if domain is None else map(float, domain)
        if lo > self.grid.lo or hi < self.grid.hi:
            raise ValueError("domain must contain the grid")
        self.domain = (lo, hi)
        t = (self.grid.nodes - lo) / (hi - lo) * self.n_steps
        # half-open intervals, last one closed; tiny slack keeps exact breakpoints on the right
        idx = np.floor(t + 1e-12).astype(np.int64)
        self.labels = np.clip(idx, 0, self.n_steps - 1)
        self.counts = np.bincount(self.labels, minlength=self.n_steps)
        if np.any(self.counts == 0):
            raise ValueError(f"grid too coarse for {n_steps} steps: some interval has no node")

    def _par2fun(self, x):
        return x[self.labels]

    def _fun2par(self, f):
        return np.bincount(self.labels, weights=f, minlength=self.n_steps) / self.counts

    @property
    def fun_geometry(self):
        return Continuous1D(self.grid)

    def to_dict(self):
        return {**super().to_dict(), "n_steps": self.n_steps, "domain": list(self.domain),
                "grid": self.grid.to_dict()}


class KLExpansion(Geometry):
    """Truncated sine-series KL expansion ``(1/a) sum x_i i^(-gamma/2) e_i``.

    ``e_i = sqrt(2) sin(i pi t)`` with ``t`` the position scaled to ``domain``
    (default: the grid hull). Inner products use the trapezoid rule over the
    grid extended by the domain endpoints, where every basis function vanishes.
    """

    kind = "kl_expansion"

    def __init__(self, grid, decay_rate=1.5, normalizer=10.0, num_modes=20, domain=None):
        self.grid = grid if isinstance(grid, Grid1D) else Grid1D(grid)
        if decay_rate <= 0 or normalizer <= 0 or num_modes < 1:
            raise ValueError("need decay_rate > 0, normalizer > 0, num_modes >= 1")
        self.decay_rate = float(decay_rate)
        self.normalizer = float(normalizer)
        self.num_modes = int(num_modes)
        lo, hi = (self.grid.lo, self.grid.hi) if domain is None else map(float, domain)
        if lo > self.grid.lo or hi < self.grid.hi:
            raise ValueError("domain must contain the grid")
        self.domain = (lo, hi)
        self.par_dim = self.num_modes
        self.fun_dim = len(self.grid)
        t = (self.grid.nodes - lo) / (hi - lo)
        i = np.arange(1, self.num_modes + 1)
        self.eigenvalues = i ** (-self.decay_rate)
        self.basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(t, i))
        ext = np.concatenate([[lo], self.grid.nodes, [hi]])
        w = np.zeros(ext.size)
        h = np.diff(ext)
        w[:-1] += h / 2
        w[1:] += h / 2
        self.weights = w[1:-1]
        self._coef = np.sqrt(self.eigenvalues) / self.normalizer

    def _par2fun(self, x):
        return self.basis @ (self._coef * x)

    def _fun2par(self, f):
        return (self.basis.T @ (self.weights * f)) / self._coef

    @property
    def fun_geometry(self):
        return Continuous1D(self.grid)

    def to_dict(self):
        return {**super().to_dict(), "decay_rate": self.decay_rate, "normalizer": self.normalizer,
                "num_modes": self.num_modes, "domain": list(self.domain)}


class MaternKLExpansion(Geometry):
    """KL expansion ``sum x_i sqrt(lambda_i) e_i`` of a Matern-type field on nodal space.

    Build with :func:`build_matern_kl`.
    """

    kind = "matern_kl"

    def __init__(self, base, length_scale, smoothness, sqrt_eigenvalues, eigenvectors, mu):
        self.base = base
        self.length_scale = float(length_scale)
        self.smoothness = float(smoothness)
        self.sqrt_eigenvalues = np.asarray(sqrt_eigenvalues)
        self.eigenvectors = np.ascontiguousarray(eigenvectors)
        self.mu = np.asarray(mu)
        self.num_terms = self.sqrt_eigenvalues.size
        self.par_dim = self.num_terms
        self.fun_dim = base.fun_dim
        self._scaled = np.ascontiguousarray(self.eigenvectors * self.sqrt_eigenvalues)
        self._proj = np.ascontiguousarray((base.matrices[1] @ self.eigenvectors).T / self.sqrt_eigenvalues[:, None])

    def _par2fun(self, x):
        return self._scaled @ x

    def _fun2par(self, f):
        return self._proj @ f

    @property
    def fun_geometry(self):
        return self.base

    def to_dict(self):
        return {**super().to_dict(), "length_scale": self.length_scale, "smoothness": self.smoothness,
                "num_terms": self.num_terms, "base": self.base.to_dict()}


def build_matern_kl(base: NodalGeometry, length_scale: float, smoothness: float, num_terms: int,
                    cache_dir=None) -> MaternKLExpansion:
    """Eigen-decompose the shifted Neumann Laplacian on ``base``.

    Solves ``(K + M / l^2) e = mu M e`` for the ``num_terms`` smallest ``mu``;
    amplitudes are ``sqrt(lambda_i) = (mu_i / mu_1) ** (-(nu + d/2) / 2)``.
    Eigenvectors are M-orthonormal with their first nonzero entry positive.
    ``cache_dir`` (or ``UQPDE_CACHE_DIR``) stores bases as ``.npz`` files.
    """
    if length_scale <= 0 or smoothness <= 0:
        raise ValueError("length_scale and smoothness must be positive")
    n = base.fun_dim
    if not 1 <= num_terms <= n:
        raise ValueError(f"num_terms must be in [1, {n}], got {num_terms}")
    cache_dir = cache_dir or os.environ.get("UQPDE_CACHE_DIR")
    path = None
    if cache_dir:
        key = hashlib.sha1(f"{base.mesh_hash}|{length_scale!r}|{smoothness!r}|{num_terms}".encode()).hexdigest()
        path = os.path.join(cache_dir, f"matern_{key}.npz")
        if os.path.exists(path):
            with np.load(path) as z:
                mu, vecs = z["mu"], z["vecs"]
            return _finish_matern(base, length_scale, smoothness, mu, vecs)
    K, M = base.matrices
    A = K + M / length_scale**2
    try:
        if n <= DENSE_EIG_LIMIT:
            Md = M.toarray()
            sla.cholesky(Md, lower=True)
            mu, vecs = sla.eigh(A.toarray(), Md, subset_by_index=[0, num_terms - 1])
        else:
            mu, vecs = spla.eigsh(sp.csc_matrix(A), k=num_terms, M=sp.csc_matrix(M), sigma=0.0, which="LM")
            order = np.argsort(mu)
            mu, vecs = mu[order], vecs[:, order]
    except (np.linalg.LinAlgError, spla.ArpackError) as exc:
        raise NumericalError(f"Matern eigensolve failed: {exc}") from None
    # M-normalize explicitly (eigh already does; eigsh may not)
    norms = np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    vecs = vecs / norms
    if path:
        os.makedirs(cache_dir, exist_ok=True)
        np.savez(path, mu=mu, vecs=vecs)
    return _finish_matern(base, length_scale, smoothness, mu, vecs)


def _finish_matern(base, length_scale, smoothness, mu, vecs):
    vecs = np.array(vecs, dtype=np.float64)
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-12 * np.abs(vecs[:, j]).max())
        if vecs[nz[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    exponent = -(smoothness + base.dim / 2.0) / 2.0
    sqrt_lam = (mu / mu[0]) ** exponent
    return MaternKLExpansion(base, length_scale, smoothness, sqrt_lam, vecs, mu)


def heaviside(r, sigma_minus, sigma_plus):
    """Level-set map: sigma_plus where r < 0, sigma_minus where r > 0, midpoint at 0."""
    s = np.sign(r)
    return 0.5 * (sigma_plus * (1.0 - s) + sigma_minus * (1.0 + s))


class MappedGeometry(Geometry):
    """Applies a pointwise map to the function values of ``base``."""

    kind = "mapped"

    def __init__(self, base: Geometry, map_kind: str, **params):
        if map_kind not in ("heaviside", "scale", "exp"):
            raise ValueError(f"unknown map {map_kind!r}")
        if map_kind == "heaviside" and not params["sigma_minus"] < params["sigma_plus"]:
            raise ValueError("heaviside map needs sigma_minus < sigma_plus")
        if map_kind == "scale" and params["factor"] == 0:
            raise ValueError("scale factor must be nonzero")
        self.base = base
        self.map_kind = map_kind
        self.params = params
        self.par_dim = base.par_dim
        self.fun_dim = base.fun_dim

    @classmethod
    def heaviside(cls, base, sigma_minus=1.0, sigma_plus=10.0):
        return cls(base, "heaviside", sigma_minus=float(sigma_minus), sigma_plus=float(sigma_plus))

    @classmethod
    def scale(cls, base, factor):
        return cls(base, "scale", factor=float(factor))

    @classmethod
    def exp(cls, base):
        return cls(base, "exp")

    def apply_map(self, f):
        if self.map_kind == "heaviside":
            return heaviside(f, self.params["sigma_minus"], self.params["sigma_plus"])
        if self.map_kind == "scale":
            return self.params["factor"] * f
        return np.exp(f)

    def _par2fun(self, x):
        return self.apply_map(self.base.par2fun(x))

    def _fun2par(self, f):
        if self.map_kind == "heaviside":
            raise NonInvertibleMapError("heaviside is a non-invertible map")
        if self.map_kind == "scale":
            return self.base.fun2par(f / self.params["factor"])
        if np.any(f <= 0):
            raise ValueError("exp map inverse needs positive function values")
        return self.base.fun2par(np.log(f))

    @property
    def fun_geometry(self):
        return self.base.fun_geometry

    @property
    def is_linear(self):
        return self.map_kind == "scale" and self.base.is_linear

    def to_dict(self):
        return {**super().to_dict(), "map": self.map_kind, **self.params, "base": self.base.to_dict()}
