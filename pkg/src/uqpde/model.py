"""Forward models ``A = O o S o G`` binding a PDE (or black box) to geometries."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError
from .geometry import Geometry
from .pde import FactorizationCache, SteadyStateLinearPDE, TimeDependentLinearPDE


class ForwardModel:
    """Maps a coefficient vector ``x`` to predicted observations.

    ``kind="pde_model"``: ``pde`` is a PDE object; ``x`` goes through
    ``domain_geometry.par2fun`` and then assemble/solve/observe.
    ``kind="blackbox"``: ``pde`` is any callable on function values, or on the
    raw parameter when ``raw_parameter`` is set.

    Calling the model with an array evaluates it; calling it with a density
    or a variable name returns an expression usable as a Gaussian mean.
    """

    def __init__(self, pde, domain_geometry: Geometry, range_geometry: Geometry,
                 kind="pde_model", raw_parameter=False):
        if kind not in ("pde_model", "blackbox"):
            raise ValueError(f"kind must be 'pde_model' or 'blackbox', got {kind!r}")
        if kind == "pde_model" and not isinstance(pde, (SteadyStateLinearPDE, TimeDependentLinearPDE)):
            raise TypeError("pde_model needs a SteadyStateLinearPDE or TimeDependentLinearPDE")
        self.pde = pde
        self.domain_geometry = domain_geometry
        self.range_geometry = range_geometry
        self.kind = kind
        self.raw_parameter = raw_parameter
        self.n_evaluations = 0

    @property
    def domain_dim(self) -> int:
        return self.domain_geometry.par_dim

    @property
    def range_dim(self) -> int:
        return self.range_geometry.par_dim

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.domain_dim:
            raise DimensionError("forward model input", self.domain_dim, x.shape[0] if x.ndim else 0)
        g = x if self.raw_parameter else self.domain_geometry.par2fun(x)
        return self._run(g)

    def forward_function(self, g):
        """Evaluate on function values directly (e.g. a truth field outside the expansion range)."""
        if self.raw_parameter:
            raise TypeError("model takes raw parameters, not function values")
        g = np.asarray(g, dtype=np.float64)
        fdim = self.domain_geometry.fun_dim
        if g.shape[0] != fdim:
            raise DimensionError("forward model function input", fdim, g.shape[0])
        return self._run(g)

    def _run(self, g):
        y = np.asarray(self.pde(g), dtype=np.float64)
        self.n_evaluations += 1
        if y.shape != (self.range_dim,):
            raise DimensionError("forward model output", self.range_dim, y.size)
        return y

    def __call__(self, x):
        from .distributions import Gaussian, ModelExpression
        if isinstance(x, str):
            return ModelExpression(self, x)
        if isinstance(x, Gaussian):
            if x.name is None:
                raise ValueError("a density used as model input needs a name")
            return ModelExpression(self, x.name)
        return self.forward(x)

    @property
    def n_factorizations(self) -> int:
        if isinstance(self.pde, SteadyStateLinearPDE):
            return self.pde.n_factorizations
        return 0

    def with_updated_rhs(self, rhs_form=None, observer=None, dirichlet_values=None,
                         range_geometry=None):
        """Sibling model sharing this model's stiffness factorization cache."""
        if self.kind != "pde_model" or not isinstance(self.pde, SteadyStateLinearPDE):
            raise TypeError("with_updated_rhs needs a steady-state PDE model")
        pde = self.pde.with_updated_rhs(rhs_form, observer, dirichlet_values)
        return ForwardModel(pde, self.domain_geometry, range_geometry or self.range_geometry)

    def clone_for_thread(self, caches=None):
        """Copy with private mutable PDE state; geometries and meshes are shared.

        ``caches`` maps ``id(old_cache) -> new_cache`` so siblings cloned
        together keep sharing one factorization cache.
        """
        if isinstance(self.pde, SteadyStateLinearPDE):
            caches = {} if caches is None else caches
            old = self.pde.cache
            new = caches.setdefault(id(old), FactorizationCache(old.size))
            pde = self.pde.clone(cache=new)
        elif isinstance(self.pde, TimeDependentLinearPDE):
            pde = self.pde.clone()
        elif hasattr(self.pde, "clone"):
            pde = self.pde.clone()
        else:
            pde = self.pde
        return ForwardModel(pde, self.domain_geometry, self.range_geometry, self.kind,
                            self.raw_parameter)

    def matrix(self):
        """Columns ``A(e_j) - A(0)``; equals the forward map when it is affine."""
        y0 = self.forward(np.zeros(self.domain_dim))
        cols = np.empty((self.range_dim, self.domain_dim))
        e = np.zeros(self.domain_dim)
        for j in range(self.domain_dim):
            e[j] = 1.0
            cols[:, j] = self.forward(e) - y0
            e[j] = 0.0
        return cols, y0

    def __repr__(self):
        return (f"ForwardModel(kind={self.kind}, domain={self.domain_dim}, "
                f"range={self.range_dim})")
