"""Assemble/solve/observe PDE problems: time-dependent FD and steady-state FEM."""

from __future__ import annotations

import hashlib
from collections import OrderedDict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import femlite, kernels
from .exceptions import DimensionError, UnstableTimeStepError
from .geometry import Grid1D

BLOWUP = 1e12


def param_hash(x) -> str:
    x = np.ascontiguousarray(x, dtype=np.float64)
    return hashlib.sha1(x.tobytes() + str(x.shape).encode()).hexdigest()


def interpolation_matrix(src: Grid1D, dst: Grid1D):
    """Sparse matrix evaluating the piecewise-linear interpolant on ``src`` at ``dst``."""
    xs, xd = src.nodes, dst.nodes
    tol = 1e-12 * max(1.0, abs(xs[-1] - xs[0]))
    if xd[0] < xs[0] - tol or xd[-1] > xs[-1] + tol:
        raise ValueError(f"observation grid [{xd[0]}, {xd[-1]}] outside solution grid "
                         f"[{xs[0]}, {xs[-1]}]")
    j = np.clip(np.searchsorted(xs, xd, side="right") - 1, 0, xs.size - 2)
    w = np.clip((xd - xs[j]) / (xs[j + 1] - xs[j]), 0.0, 1.0)
    rows = np.repeat(np.arange(xd.size), 2)
    cols = np.stack([j, j + 1], axis=1).ravel()
    vals = np.stack([1.0 - w, w], axis=1).ravel()
    P = sp.csr_matrix((vals, (rows, cols)), shape=(xd.size, xs.size))
    P.eliminate_zeros()
    return P


def _tridiagonal_bands(D):
    """(lower, diag, upper) if D is tridiagonal, else None."""
    D = sp.coo_matrix(D)
    off = D.col - D.row
    if np.any(np.abs(off[D.data != 0]) > 1):
        return None
    D = sp.dia_matrix(D)
    n = D.shape[0]
    bands = {k: np.zeros(n) for k in (-1, 0, 1)}
    for k, row in zip(D.offsets, D.data):
        if k in bands:
            bands[k] += row
    # dia storage aligns by column: entry (i, i+k) sits at data[:, i+k]
    return (np.ascontiguousarray(bands[-1][:-1]), np.ascontiguousarray(bands[0]),
            np.ascontiguousarray(bands[1][1:]))


class TimeDependentLinearPDE:
    """``u' = D(g, t) u + f(g, t)``, ``u(0) = g0`` on a 1D grid.

    ``form(g, t)`` returns ``(D, f, g0)``. When ``form_depends_on_time`` is
    false the form is assembled once at ``t0``; otherwise ``assemble_step`` is
    called for each step. Observations are the final state interpolated to
    ``grid_obs``.
    """

    SCHEMES = ("explicit_euler", "implicit_euler")

    def __init__(self, form, time_steps, grid_sol: Grid1D, grid_obs: Grid1D | None = None,
                 scheme="explicit_euler", form_depends_on_time=False, param_dim=None):
        t = np.asarray(time_steps, dtype=np.float64)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time_steps must be strictly increasing and start at 0")
        if scheme not in self.SCHEMES:
            raise ValueError(f"scheme must be one of {self.SCHEMES}, got {scheme!r}")
        self.form = form
        self.time_steps = t
        self.grid_sol = grid_sol
        self.grid_obs = grid_obs if grid_obs is not None else grid_sol
        self.scheme = scheme
        self.form_depends_on_time = form_depends_on_time
        self.param_dim = param_dim
        self._obs_matrix = interpolation_matrix(self.grid_sol, self.grid_obs)
        dt = np.diff(t)
        self._uniform = bool(np.allclose(dt, dt[0], rtol=1e-10, atol=0.0))
        self._assembled = None
        self._op_cache = None
        self._bands = None

    @property
    def n_obs(self) -> int:
        return len(self.grid_obs)

    def assemble(self, g):
        g = np.asarray(g, dtype=np.float64)
        if self.param_dim is not None and g.shape[0] != self.param_dim:
            raise DimensionError("PDE parameter", self.param_dim, g.shape[0])
        D_raw, f, g0 = self.form(g, self.time_steps[0])
        n = len(self.grid_sol)
        if self._op_cache is not None and self._op_cache[0] is D_raw:
            D, bands = self._op_cache[1:]
        else:
            # forms usually return the same operator object every call
            D = sp.csr_matrix(D_raw)
            if D.shape != (n, n):
                raise DimensionError("PDE operator rows", n, D.shape[0])
            bands = _tridiagonal_bands(D)
            self._op_cache = (D_raw, D, bands)
        g0 = np.asarray(g0, dtype=np.float64)
        if g0.shape != (n,):
            raise DimensionError("PDE initial state", n, g0.size)
        self._assembled = (g, D, np.asarray(f, dtype=np.float64) * np.ones(n), g0)
        self._bands = bands

    def assemble_step(self, t):
        """Per-step operator and source; only used for time-dependent forms."""
        D, f, _ = self.form(self._assembled[0], t)
        return sp.csr_matrix(D), np.asarray(f, dtype=np.float64) * np.ones(len(self.grid_sol))

    def solve(self):
        if self._assembled is None:
            raise RuntimeError("assemble must be called before solve")
        _, D, f, g0 = self._assembled
        if self.scheme == "explicit_euler":
            u = self._explicit(D, f, g0)
        else:
            u = self._implicit(D, f, g0)
        return u, {"scheme": self.scheme, "n_steps": self.time_steps.size - 1}

    def _explicit(self, D, f, g0):
        t = self.time_steps
        n_steps = t.size - 1
        if not self.form_depends_on_time and self._uniform:
            bands = self._bands
            if bands is not None:
                dt = (t[-1] - t[0]) / n_steps
                states, failed = kernels.euler_tridiag(*bands, np.ascontiguousarray(g0), f,
                                                        dt, n_steps, BLOWUP)
                if failed >= 0:
                    raise UnstableTimeStepError(
                        f"unstable time step: |u| exceeded {BLOWUP:g} at step {failed} "
                        f"(dt={dt:.3g}); reduce dt or use the implicit scheme")
                return states
        states = np.empty((t.size, g0.size))
        states[0] = g0
        for k in range(n_steps):
            if self.form_depends_on_time:
                D, f = self.assemble_step(t[k])
            states[k + 1] = states[k] + (t[k + 1] - t[k]) * (D @ states[k] + f)
            if not np.all(np.abs(states[k + 1]) <= BLOWUP):
                raise UnstableTimeStepError(
                    f"unstable time step: |u| exceeded {BLOWUP:g} at step {k + 1}; "
                    "reduce dt or use the implicit scheme")
        return states

    def _implicit(self, D, f, g0):
        t = self.time_steps
        n = g0.size
        eye = sp.identity(n, format="csc")
        states = np.empty((t.size, n))
        states[0] = g0
        lu, lu_dt = None, None
        for k in range(t.size - 1):
            dt = t[k + 1] - t[k]
            if self.form_depends_on_time:
                D, f = self.assemble_step(t[k + 1])
                lu = None
            if lu is None or lu_dt != dt:
                lu = spla.splu(sp.csc_matrix(eye - dt * D))
                lu_dt = dt
            states[k + 1] = lu.solve(states[k] + dt * f)
        return states

    def observe(self, solution):
        return self._obs_matrix @ solution[-1]

    def __call__(self, g):
        self.assemble(g)
        u, _ = self.solve()
        return self.observe(u)

    def clone(self):
        return TimeDependentLinearPDE(self.form, self.time_steps, self.grid_sol, self.grid_obs,
                                      self.scheme, self.form_depends_on_time, self.param_dim)


class FactorizationCache:
    """Small LRU of factorized constrained stiffness matrices keyed by parameter hash."""

    def __init__(self, size=2):
        self.size = size
        self.entries: OrderedDict = OrderedDict()
        self.n_factorizations = 0
        self.hits = 0

    def get(self, key):
        item = self.entries.get(key)
        if item is not None:
            self.entries.move_to_end(key)
            self.hits += 1
        return item

    def put(self, key, item):
        self.n_factorizations += 1
        self.entries[key] = item
        self.entries.move_to_end(key)
        while len(self.entries) > self.size:
            self.entries.popitem(last=False)

    def clear(self):
        self.entries.clear()


class SteadyStateLinearPDE:
    """``K(g) u = b(g)`` with Dirichlet constraints.

    ``lhs_form(g)`` gives the unconstrained stiffness, ``rhs_form(g, K)`` the
    unconstrained load and ``observer(g, u)`` the observation vector.
    Constrained factorizations are cached by parameter hash and shared with
    siblings created by :meth:`with_updated_rhs`.
    """

    def __init__(self, lhs_form, rhs_form, observer, dirichlet_nodes=(), dirichlet_values=0.0,
                 solver="sparse_cholesky", reuse_assembled=True, param_dim=None, cache=None):
        self.lhs_form = lhs_form
        self.rhs_form = rhs_form
        self.observer = observer
        self.dirichlet_nodes = np.asarray(dirichlet_nodes, dtype=np.int64)
        self.dirichlet_values = np.broadcast_to(
            np.asarray(dirichlet_values, dtype=np.float64), self.dirichlet_nodes.shape).copy()
        self.solver = solver
        self.reuse_assembled = reuse_assembled
        self.param_dim = param_dim
        self.cache = cache if cache is not None else FactorizationCache()
        self._state = None
        self._plan = None

    @property
    def n_factorizations(self) -> int:
        return self.cache.n_factorizations

    def assemble(self, g):
        g = np.asarray(g, dtype=np.float64)
        if self.param_dim is not None and g.shape[0] != self.param_dim:
            raise DimensionError("PDE parameter", self.param_dim, g.shape[0])
        key = param_hash(g)
        item = self.cache.get(key) if self.reuse_assembled else None
        if item is None:
            K = sp.csr_matrix(self.lhs_form(g))
            Kc = self._constrain(K) if self.dirichlet_nodes.size else K
            item = (K, Kc, femlite.factorize(Kc, self.solver))
            if self.reuse_assembled:
                self.cache.put(key, item)
            else:
                self.cache.n_factorizations += 1
        K, Kc, solve = item
        b = np.asarray(self.rhs_form(g, K), dtype=np.float64)
        if self.dirichlet_nodes.size:
            b = femlite.constrain_load(K, b, self.dirichlet_nodes, self.dirichlet_values)
        self._state = (g, Kc, solve, b)

    def _constrain(self, K):
        if not K.has_sorted_indices:
            K = K.sorted_indices()
        plan = self._plan
        if plan is None or not plan.matches(K):
            plan = self._plan = femlite.DirichletPlan(K, self.dirichlet_nodes)
        return plan.apply(K)

    def solve(self):
        if self._state is None:
            raise RuntimeError("assemble must be called before solve")
        _, Kc, solve, b = self._state
        u, info = solve(b)
        info = dict(info)
        nb = np.linalg.norm(b)
        info["residual"] = float(np.linalg.norm(Kc @ u - b) / nb) if nb > 0 else 0.0
        return u, info

    def observe(self, solution):
        return self.observer(self._state[0], solution)

    def __call__(self, g):
        self.assemble(g)
        u, _ = self.solve()
        return self.observe(u)

    def with_updated_rhs(self, rhs_form=None, observer=None, dirichlet_values=None):
        """Sibling problem with new load/observer sharing this factorization cache."""
        return SteadyStateLinearPDE(
            self.lhs_form, rhs_form or self.rhs_form, observer or self.observer,
            self.dirichlet_nodes,
            self.dirichlet_values if dirichlet_values is None else dirichlet_values,
            self.solver, self.reuse_assembled, self.param_dim, cache=self.cache)

    def clone(self, cache=None):
        return SteadyStateLinearPDE(self.lhs_form, self.rhs_form, self.observer,
                                    self.dirichlet_nodes, self.dirichlet_values, self.solver,
                                    self.reuse_assembled, self.param_dim,
                                    cache=cache if cache is not None else FactorizationCache(self.cache.size))
