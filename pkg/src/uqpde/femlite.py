"""Linear (P1) triangular finite elements.

Just enough FEM for the elliptic problems in this package: structured meshes of
the unit square and unit disk, sparse assembly of stiffness/mass/load, symmetric
Dirichlet elimination, direct and CG solves, and the boundary flux functional
used as the EIT measurement.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .exceptions import ConvergenceError, DimensionError, NotSPDError


class TriMesh:
    """Triangle mesh with an ordered boundary loop.

    ``boundary_nodes`` lists the boundary vertices in traversal order and
    ``boundary_edges`` the consecutive pairs of that loop. ``markers`` holds one
    tag per boundary node (same order).
    """

    def __init__(self, vertices, triangles, boundary_nodes, boundary_edges=None, markers=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_nodes = np.asarray(boundary_nodes, dtype=np.int64)
        if boundary_edges is None:
            b = self.boundary_nodes
            boundary_edges = np.column_stack([b, np.roll(b, -1)])
        self.boundary_edges = np.asarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
        if markers is None:
            markers = ["boundary"] * len(self.boundary_nodes)
        self.markers = list(markers)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must have shape (m, 3)")
        if len(self.markers) != len(self.boundary_nodes):
            raise ValueError("one marker per boundary node required")
        if np.any(self.signed_areas <= 0.0):
            bad = int(np.argmin(self.signed_areas))
            raise ValueError(f"degenerate or clockwise triangle {bad} (area {self.signed_areas[bad]:.3e})")

    @property
    def n_nodes(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def __repr__(self):
        return f"TriMesh(n_nodes={self.n_nodes}, n_triangles={self.n_triangles})"

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self):
        return self.signed_areas

    @cached_property
    def gradients(self):
        """Constant gradients of the three barycentric basis functions, shape (m, 3, 2)."""
        p = self.vertices[self.triangles]
        x, y = p[..., 0], p[..., 1]
        two_a = 2.0 * self.signed_areas
        g = np.empty((self.n_triangles, 3, 2))
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            g[:, a, 0] = (y[:, b] - y[:, c]) / two_a
            g[:, a, 1] = (x[:, c] - x[:, b]) / two_a
        return g

    @cached_property
    def local_stiffness(self):
        """Unit-conductivity element stiffness matrices flattened to (m, 9)."""
        g = self.gradients
        k = np.einsum("tad,tbd->tab", g, g) * self.signed_areas[:, None, None]
        return np.ascontiguousarray(k.reshape(-1, 9))

    @cached_property
    def local_mass(self):
        ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
        m = self.signed_areas[:, None, None] * ref[None]
        return np.ascontiguousarray(m.reshape(-1, 9))

    @cached_property
    def _pattern(self):
        n = self.n_nodes
        rows = np.repeat(self.triangles, 3, axis=1)
        cols = np.tile(self.triangles, (1, 3))
        keys = (rows * n + cols).ravel()
        uniq, inverse = np.unique(keys, return_inverse=True)
        indices = (uniq % n).astype(np.int32)
        counts = np.bincount(uniq // n, minlength=n)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        slots = np.ascontiguousarray(inverse.reshape(-1, 9), dtype=np.int64)
        return indptr, indices, slots

    def assemble_matrix(self, local, coef):
        """CSR matrix of sum_t coef[t] * local[t] over the mesh pattern."""
        indptr, indices, slots = self._pattern
        coef = np.ascontiguousarray(coef, dtype=np.float64)
        data = kernels.assemble_csr_data(local, coef, slots, len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def mass_matrix(self):
        return self.assemble_matrix(self.local_mass, np.ones(self.n_triangles))

    def stiffness_matrix(self, conductivity=1.0):
        return self.assemble_matrix(self.local_stiffness, element_conductivity(self, conductivity))

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha1()
        h.update(self.vertices.tobytes())
        h.update(self.triangles.tobytes())
        return h.hexdigest()

    @cached_property
    def _boundary_geometry(self):
        """Per boundary edge: owning triangle, outward unit normal, length."""
        owner = {}
        count = {}
        for t, tri in enumerate(self.triangles):
            for a in range(3):
                key = frozenset((int(tri[a]), int(tri[(a + 1) % 3])))
                owner[key] = t
                count[key] = count.get(key, 0) + 1
        tris, normals, lengths = [], [], []
        for p, q in self.boundary_edges:
            key = frozenset((int(p), int(q)))
            if count.get(key, 0) != 1:
                raise ValueError(f"boundary edge ({p}, {q}) must belong to exactly one triangle")
            t = owner[key]
            d = self.vertices[q] - self.vertices[p]
            length = float(np.hypot(*d))
            nrm = np.array([d[1], -d[0]]) / length
            opposite = [v for v in self.triangles[t] if v not in (p, q)][0]
            if np.dot(self.vertices[opposite] - self.vertices[p], nrm) > 0:
                nrm = -nrm
            tris.append(t)
            normals.append(nrm)
            lengths.append(length)
        pos = {int(v): i for i, v in enumerate(self.boundary_nodes)}
        ends = np.array([[pos[int(p)], pos[int(q)]] for p, q in self.boundary_edges], dtype=np.int64)
        return np.array(tris, dtype=np.int64), np.array(normals), np.array(lengths), ends

    @cached_property
    def _boundary_patch(self):
        """Vertices of the triangles touching the boundary, their local stiffness
        matrices, and the flattened (boundary position, entry) pairs to scatter."""
        pos = np.full(self.n_nodes, -1, dtype=np.int64)
        pos[self.boundary_nodes] = np.arange(len(self.boundary_nodes))
        tris = np.flatnonzero((pos[self.triangles] >= 0).any(axis=1))
        local = self.local_stiffness[tris].reshape(-1, 3, 3)
        verts = self.triangles[tris]
        flat = pos[verts].ravel()
        keep = np.flatnonzero(flat >= 0)
        return verts, local, keep, flat[keep]

    def nodes_where(self, predicate):
        """Indices of vertices whose (x, y) satisfy ``predicate``."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return np.flatnonzero(predicate(x, y))


def element_conductivity(mesh: TriMesh, conductivity):
    """Per-triangle conductivity: mean of the three nodal values."""
    sigma = np.asarray(conductivity, dtype=np.float64)
    if sigma.ndim == 0:
        return np.full(mesh.n_triangles, float(sigma))
    if sigma.shape != (mesh.n_nodes,):
        raise DimensionError("conductivity", mesh.n_nodes, sigma.shape[0])
    return sigma[mesh.triangles].mean(axis=1)


# --------------------------------------------------------------------------- meshes

def mesh_unit_square(nx: int, ny: int) -> TriMesh:
    """Structured mesh of [0, 1]^2; each cell is cut along its (+1, +1) diagonal."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))

    # counter-clockwise loop starting at the origin; corners take the left/right tag
    loop, tags = [], []
    for i in range(nx):
        loop.append(vid(i, 0))
        tags.append("left" if i == 0 else "bottom")
    for j in range(ny):
        loop.append(vid(nx, j))
        tags.append("right")
    for i in range(nx, 0, -1):
        loop.append(vid(i, ny))
        tags.append("right" if i == nx else "top")
    for j in range(ny, 0, -1):
        loop.append(vid(0, j))
        tags.append("left")
    return TriMesh(vertices, np.array(tris), loop, markers=tags)


def mesh_unit_disk(n_rings: int, n_sectors: int) -> TriMesh:
    """Polar mesh of the unit disk with ``n_sectors`` nodes on every ring.

    Ring ``i`` sits at radius ``i / n_rings``. Successive rings are rotated by
    half a sector so every triangle touching a ring edge has its third vertex
    centred on that edge. The outer ring is the boundary, ordered by increasing
    angle starting at angle 0.
    """
    if n_rings < 1 or n_sectors < 3:
        raise ValueError("need n_rings >= 1 and n_sectors >= 3")
    step = 2.0 * np.pi / n_sectors
    pts = [np.zeros((1, 2))]
    for r in range(1, n_rings + 1):
        rad = r / n_rings
        theta = step * (np.arange(n_sectors) + 0.5 * (n_rings - r))
        pts.append(np.column_stack([rad * np.cos(theta), rad * np.sin(theta)]))
    vertices = np.vstack(pts)

    def vid(r, s):
        return 1 + (r - 1) * n_sectors + (s % n_sectors)

    tris = []
    for s in range(n_sectors):
        tris.append((0, vid(1, s), vid(1, s + 1)))
    for r in range(1, n_rings):
        # inner node s sits half a sector ahead of outer node s
        for s in range(n_sectors):
            tris.append((vid(r + 1, s), vid(r + 1, s + 1), vid(r, s)))
            tris.append((vid(r, s), vid(r + 1, s + 1), vid(r, s + 1)))
    boundary = [vid(n_rings, s) for s in range(n_sectors)]
    return TriMesh(vertices, np.array(tris), boundary, markers=["outer"] * n_sectors)


def save_mesh(mesh: TriMesh, path) -> None:
    """Plain-text dump: ``v x y`` / ``t i j k`` / ``b i marker`` lines."""
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
        for node, tag in zip(mesh.boundary_nodes, mesh.markers):
            fh.write(f"b {node} {tag}\n")


def load_mesh(path) -> TriMesh:
    verts, tris, bnd, tags = [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            kind = parts[0]
            if kind == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif kind == "t":
                tris.append(tuple(int(p) for p in parts[1:4]))
            elif kind == "b":
                bnd.append(int(parts[1]))
                tags.append(parts[2] if len(parts) > 2 else "boundary")
            else:
                raise ValueError(f"{path}:{lineno}: unknown record type {kind!r}")
    return TriMesh(np.array(verts), np.array(tris), bnd, markers=tags)


# --------------------------------------------------------------------------- systems

@dataclass
class P1System:
    stiffness: sp.csr_matrix
    load: np.ndarray
    dirichlet: list = field(default_factory=list)


def assemble_p1(mesh: TriMesh, conductivity, source=None, lift=None) -> P1System:
    """Assemble stiffness and load.

    ``source`` (nodal f) contributes the consistent load M f. ``lift`` (nodal
    u_lift) contributes -K_sigma u_lift, i.e. the weak form of
    div(sigma grad u_lift) with the lifting function moved to the right side.
    """
    sigma = np.asarray(conductivity, dtype=np.float64)
    if np.any(sigma <= 0.0) or not np.all(np.isfinite(sigma)):
        raise ValueError("conductivity must be positive and finite at every node")
    K = mesh.stiffness_matrix(sigma)
    b = np.zeros(mesh.n_nodes)
    if source is not None:
        f = np.broadcast_to(np.asarray(source, dtype=np.float64), (mesh.n_nodes,))
        b += mesh.mass_matrix @ f
    if lift is not None:
        u_lift = np.asarray(lift, dtype=np.float64)
        if u_lift.shape != (mesh.n_nodes,):
            raise DimensionError("lift", mesh.n_nodes, u_lift.shape[0])
        b -= K @ u_lift
    return P1System(K, b)


def _normalize_constraints(nodes, values, n):
    nodes = np.asarray(nodes, dtype=np.int64).ravel()
    values = np.broadcast_to(np.asarray(values, dtype=np.float64), nodes.shape)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= n):
        raise IndexError("Dirichlet node index out of range")
    seen = {}
    for node, val in zip(nodes.tolist(), values.tolist()):
        if node in seen and seen[node] != val:
            raise ValueError(f"conflicting Dirichlet values for node {node}: {seen[node]} vs {val}")
        seen[node] = val
    keys = np.array(sorted(seen), dtype=np.int64)
    return keys, np.array([seen[k] for k in keys.tolist()], dtype=np.float64)


class DirichletPlan:
    """Precomputed row/column elimination for one CSR sparsity pattern.

    Applying the plan to a matrix with the same (sorted) pattern costs a copy
    of the data array; this is the per-proposal path of steady-state solves.
    """

    def __init__(self, K, nodes):
        K = sp.csr_matrix(K)
        if not K.has_sorted_indices:
            K = K.sorted_indices()
        n = K.shape[0]
        nodes = np.unique(np.asarray(nodes, dtype=np.int64))
        fixed = np.zeros(n, dtype=bool)
        fixed[nodes] = True
        rows = np.repeat(np.arange(n), np.diff(K.indptr))
        self.shape = K.shape
        self.indptr, self.indices = K.indptr.copy(), K.indices.copy()
        self.zero = np.flatnonzero(fixed[rows] | fixed[K.indices])
        self.diag = np.flatnonzero((rows == K.indices) & fixed[rows])
        # fixed nodes without a stored diagonal entry need a pattern change
        self.missing = np.setdiff1d(nodes, rows[self.diag])

    def matches(self, K) -> bool:
        return (sp.isspmatrix_csr(K) and K.shape == self.shape and K.has_sorted_indices
                and K.indices.shape == self.indices.shape
                and np.array_equal(K.indptr, self.indptr) and np.array_equal(K.indices, self.indices))

    def apply(self, K):
        data = np.array(K.data, dtype=np.float64)
        data[self.zero] = 0.0
        data[self.diag] = 1.0
        out = sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)
        if self.missing.size:
            m = self.missing
            out = out + sp.csr_matrix((np.ones(m.size), (m, m)), shape=self.shape)
        return out


def constrain_matrix(K, nodes, plan: DirichletPlan | None = None):
    """Zero rows and columns of ``nodes`` and put 1 on their diagonal."""
    K = sp.csr_matrix(K)
    if not K.has_sorted_indices:
        K = K.sorted_indices()
    if plan is None or not plan.matches(K):
        plan = DirichletPlan(K, nodes)
    return plan.apply(K)


def constrain_load(K, b, nodes, values):
    """Load vector matching :func:`constrain_matrix` so that u[nodes] = values."""
    values = np.broadcast_to(np.asarray(values, dtype=np.float64), np.shape(nodes))
    if np.any(values):
        u_c = np.zeros(K.shape[0])
        u_c[nodes] = values
        out = np.asarray(b, dtype=np.float64) - K @ u_c
    else:
        out = np.array(b, dtype=np.float64)
    out[nodes] = values
    return out


def apply_dirichlet(system: P1System, nodes, values) -> P1System:
    """Symmetric elimination of Dirichlet constraints."""
    nodes, values = _normalize_constraints(nodes, values, system.stiffness.shape[0])
    prior = dict(system.dirichlet)
    for node, val in zip(nodes.tolist(), values.tolist()):
        if node in prior and prior[node] != val:
            raise ValueError(f"conflicting Dirichlet values for node {node}")
        prior[node] = val
    K = constrain_matrix(system.stiffness, nodes)
    b = constrain_load(system.stiffness, system.load, nodes, values)
    return P1System(K, b, sorted(prior.items()))


_SYMBOLIC_CACHE: dict = {}


class SparseCholesky:
    """Sparse Cholesky factor with a fill-reducing ordering.

    The ordering and symbolic analysis depend only on the sparsity pattern and
    are cached per pattern, so refactoring a matrix whose values changed (new
    conductivity on the same mesh) costs one numeric factorization.
    """

    def __init__(self, K):
        K = sp.csr_matrix(K)
        K.sort_indices()
        key = hashlib.sha1(K.indptr.tobytes() + K.indices.tobytes()).hexdigest()
        sym = _SYMBOLIC_CACHE.get(key)
        if sym is None:
            sym = self._analyze(K)
            if len(_SYMBOLIC_CACHE) > 16:
                _SYMBOLIC_CACHE.clear()
            _SYMBOLIC_CACHE[key] = sym
        self.perm, self._take, cp, ci, self._parent, self.Lp = sym
        upper_x = np.ascontiguousarray(K.data[self._take])
        Li, Lx, failed = kernels.cholesky_numeric(cp, ci, upper_x, self._parent, self.Lp)
        if failed >= 0:
            raise NotSPDError(f"matrix is not positive definite (pivot {failed})")
        self.Li, self.Lx = Li, Lx

    @staticmethod
    def _analyze(K):
        n = K.shape[0]
        # unit values on the full stored pattern (explicit zeros included) so the
        # ordering sees exactly the structure the factorization will use
        ones = sp.csr_matrix((np.ones(K.nnz), K.indices, K.indptr), shape=K.shape)
        probe = sp.csc_matrix(ones + sp.identity(n) * (K.nnz + 1.0))
        inv = spla.splu(probe, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True}).perm_c
        inv = inv.astype(np.int64)
        perm = np.argsort(inv)
        # position of every stored entry of K, mapped into the permuted upper triangle
        rows = np.repeat(np.arange(n), np.diff(K.indptr))
        pr, pc = inv[rows], inv[K.indices]
        upper = pr <= pc
        src = np.flatnonzero(upper)
        order = np.lexsort((pr[upper], pc[upper]))
        take = src[order]
        cols = pc[upper][order]
        cp = np.concatenate([[0], np.cumsum(np.bincount(cols, minlength=n))]).astype(np.int32)
        ci = np.ascontiguousarray(pr[upper][order], dtype=np.int32)
        parent, Lp = kernels.cholesky_symbolic(cp, ci, n)
        return perm, take, cp, ci, parent, Lp

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        y = kernels.cholesky_solve(self.Lp, self.Li, self.Lx, np.ascontiguousarray(b[self.perm]))
        out = np.empty_like(y)
        out[self.perm] = y
        return out


DENSE_LIMIT = 2000


def factorize(K, method="splu"):
    """Return ``solve(b) -> (u, info)`` for the SPD matrix ``K``.

    ``method`` is one of ``sparse_cholesky`` (compiled kernels; sparse LU when
    only the numpy backend is available), ``splu``, ``dense_cholesky``, ``cg``
    or ``auto`` (dense Cholesky up to 2000 unknowns, CG beyond).
    """
    n = K.shape[0]
    if method == "auto":
        method = "dense_cholesky" if n <= DENSE_LIMIT else "cg"
    if method == "sparse_cholesky":
        if kernels.BACKEND != "cython":
            method = "splu"
        else:
            fac = SparseCholesky(K)
            return lambda b: (fac.solve(b), {"method": "sparse_cholesky", "iterations": 0})
    if method == "dense_cholesky":
        try:
            c = sla.cho_factor(K.toarray(), lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"Cholesky factorization failed: {exc}") from None

        def solve(b):
            return sla.cho_solve(c, b, check_finite=False), {"method": "dense_cholesky", "iterations": 0}

        return solve
    if method == "splu":
        diag = K.diagonal()
        if np.any(diag <= 0.0):
            raise NotSPDError("matrix has non-positive diagonal entries")
        lu = spla.splu(sp.csc_matrix(K), permc_spec="MMD_AT_PLUS_A",
                       options={"SymmetricMode": True})

        def solve(b):
            return lu.solve(np.asarray(b, dtype=np.float64)), {"method": "splu", "iterations": 0}

        return solve
    if method == "cg":
        return lambda b: conjugate_gradient(K, b)
    raise ValueError(f"unknown solver method {method!r}")


def conjugate_gradient(K, b, rtol=1e-10, maxiter=None):
    """Jacobi-preconditioned CG; raises ConvergenceError on stagnation."""
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    diag = K.diagonal()
    if np.any(diag <= 0.0):
        raise NotSPDError("matrix has non-positive diagonal entries")
    precond = spla.LinearOperator((n, n), matvec=lambda v: v / diag, dtype=np.float64)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), {"method": "cg", "iterations": 0, "residual": 0.0}
    u, status = spla.cg(K, b, rtol=rtol, atol=0.0, maxiter=maxiter or 10 * n, M=precond, callback=count)
    res = float(np.linalg.norm(K @ u - b) / bnorm)
    if status != 0 or res > 10 * rtol:
        raise ConvergenceError(f"CG did not converge: relative residual {res:.3e} after {iters} iterations")
    return u, {"method": "cg", "iterations": iters, "residual": res}


def solve_p1(system: P1System, method="auto"):
    """Solve a constrained system; returns ``(u, info)`` with the relative residual in ``info``."""
    u, info = factorize(system.stiffness, method)(system.load)
    bnorm = np.linalg.norm(system.load)
    info = dict(info)
    info["residual"] = float(np.linalg.norm(system.stiffness @ u - system.load) / bnorm) if bnorm else 0.0
    return u, info


# --------------------------------------------------------------------------- EIT helpers

def harmonic_lift(k: int, mesh: TriMesh):
    """Nodal values of r^k sin(k theta); equals sin(k theta) on the unit circle."""
    if k < 1:
        raise ValueError("frequency k must be >= 1")
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return np.hypot(x, y) ** k * np.sin(k * np.arctan2(y, x))


def boundary_flux(mesh: TriMesh, conductivity, u_total):
    """Assembled boundary functional int (du/dn) phi_i ds at the boundary nodes.

    The gradient of the P1 field is taken on the triangle owning each boundary
    edge and integrated against the hat functions along the edge (each endpoint
    receives half). With ``conductivity`` given, the flux is sigma-weighted.
    """
    u = np.asarray(u_total, dtype=np.float64)
    if u.shape != (mesh.n_nodes,):
        raise DimensionError("u_total", mesh.n_nodes, u.shape[0])
    tris, normals, lengths, ends = mesh._boundary_geometry
    grads = mesh.gradients[tris]
    grad_u = np.einsum("ea,ead->ed", u[mesh.triangles[tris]], grads)
    flux = np.einsum("ed,ed->e", grad_u, normals) * lengths
    if conductivity is not None:
        flux = flux * element_conductivity(mesh, conductivity)[tris]
    out = np.zeros(len(mesh.boundary_nodes))
    np.add.at(out, ends[:, 0], 0.5 * flux)
    np.add.at(out, ends[:, 1], 0.5 * flux)
    return out


def boundary_current(mesh: TriMesh, conductivity, u_total):
    """Variationally consistent boundary current ``(K_sigma u)_i`` at the boundary nodes.

    By Green's formula this equals int sigma (du/dn) phi_i ds when u solves
    div(sigma grad u) = 0, and converges at second order where the facet
    gradient of :func:`boundary_flux` is first order. ``conductivity=None``
    means sigma = 1.
    """
    u = np.asarray(u_total, dtype=np.float64)
    if u.shape != (mesh.n_nodes,):
        raise DimensionError("u_total", mesh.n_nodes, u.shape[0])
    verts, local, keep, target = mesh._boundary_patch
    contrib = np.einsum("tab,tb->ta", local, u[verts])
    if conductivity is not None:
        sigma = np.asarray(conductivity, dtype=np.float64)
        if sigma.ndim == 0:
            contrib *= float(sigma)
        else:
            if sigma.shape != (mesh.n_nodes,):
                raise DimensionError("conductivity", mesh.n_nodes, sigma.shape[0])
            contrib *= sigma[verts].mean(axis=1)[:, None]
    return np.bincount(target, weights=contrib.ravel()[keep], minlength=len(mesh.boundary_nodes))


# --------------------------------------------------------------------------- 1D

def interval_matrices(nodes):
    """P1 stiffness (natural boundary) and trapezoid quadrature weights on a 1D grid."""
    x = np.asarray(nodes, dtype=np.float64)
    h = np.diff(x)
    main = np.zeros(len(x))
    main[:-1] += 1.0 / h
    main[1:] += 1.0 / h
    K = sp.diags([-1.0 / h, main, -1.0 / h], [-1, 0, 1], format="csr")
    w = np.zeros(len(x))
    w[:-1] += h / 2
    w[1:] += h / 2
    return K, w
