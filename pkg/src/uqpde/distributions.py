"""Isotropic Gaussian densities, joint distributions and posteriors."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError
from .geometry import Continuous1D, Geometry
from .samples import Samples

LOG_2PI = float(np.log(2.0 * np.pi))


class ModelExpression:
    """Deferred ``model(name)``: the mean of a data density given variable ``name``."""

    def __init__(self, model, variable: str):
        self.model = model
        self.variable = variable

    @property
    def dim(self) -> int:
        return self.model.range_dim

    def evaluate(self, bindings):
        if self.variable not in bindings:
            raise KeyError(f"missing conditioning variable {self.variable!r}")
        return self.model.forward(bindings[self.variable])

    def __repr__(self):
        return f"A({self.variable})"


def noise_sdev(y_exact, noise_level: float) -> float:
    """RMS-relative noise: ``level * ||y|| / sqrt(m)``."""
    if noise_level < 0:
        raise ValueError("noise_level must be >= 0")
    y = np.asarray(y_exact, dtype=np.float64)
    return float(noise_level * np.linalg.norm(y) / np.sqrt(y.size))


class Gaussian:
    """``N(mean, sdev^2 I)`` where ``mean`` is a vector or a :class:`ModelExpression`."""

    def __init__(self, mean, sdev, geometry: Geometry | int | None = None, name: str | None = None):
        sdev = float(sdev)
        if not sdev > 0 or not np.isfinite(sdev):
            raise ValueError(f"sdev must be positive and finite, got {sdev}")
        self.sdev = sdev
        self.name = name
        if isinstance(mean, ModelExpression):
            dim = mean.dim
            self.mean = mean
        else:
            m = np.asarray(mean, dtype=np.float64)
            if isinstance(geometry, Geometry):
                dim = geometry.par_dim
            elif geometry is not None:
                dim = int(geometry)
            else:
                dim = m.size
            m = np.broadcast_to(m, (dim,)).copy() if m.ndim == 0 or m.size == 1 else m.ravel()
            if m.size != dim:
                raise DimensionError(f"mean of {name or 'Gaussian'}", dim, m.size)
            m.setflags(write=False)
            self.mean = m
        if isinstance(geometry, Geometry):
            if geometry.par_dim != dim:
                raise DimensionError(f"geometry of {name or 'Gaussian'}", dim, geometry.par_dim)
            self.geometry = geometry
        elif isinstance(mean, ModelExpression):
            self.geometry = mean.model.range_geometry
        else:
            self.geometry = Continuous1D(np.arange(dim, dtype=np.float64)) if dim >= 2 else None
        self.dim = dim

    @property
    def conditioning_variables(self) -> tuple:
        return (self.mean.variable,) if isinstance(self.mean, ModelExpression) else ()

    @property
    def is_standard(self) -> bool:
        return (not isinstance(self.mean, ModelExpression) and self.sdev == 1.0
                and not np.any(self.mean))

    def _mean(self, bindings):
        if isinstance(self.mean, ModelExpression):
            return self.mean.evaluate(bindings)
        return self.mean

    def __call__(self, **bindings):
        """Fix the conditioning variables: ``y(x=x_true)`` is a Gaussian with vector mean."""
        return Gaussian(self._mean(bindings), self.sdev, self.geometry, self.name)

    def logpdf(self, value, **bindings) -> float:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != (self.dim,):
            raise DimensionError(f"value of {self.name or 'Gaussian'}", self.dim, value.size)
        r = value - self._mean(bindings)
        return float(-0.5 * self.dim * (LOG_2PI + 2.0 * np.log(self.sdev))
                     - 0.5 * (r @ r) / self.sdev**2)

    def sample(self, rng: np.random.Generator, count: int = 1, **bindings) -> Samples:
        mean = self._mean(bindings)
        xi = rng.standard_normal((self.dim, count))
        return Samples(mean[:, None] + self.sdev * xi, self.geometry if self.dim >= 1 else None,
                       {"source": "direct"})

    def draw(self, rng: np.random.Generator, **bindings):
        """Single draw as a plain vector."""
        return self._mean(bindings) + self.sdev * rng.standard_normal(self.dim)

    def to_dict(self):
        mean = repr(self.mean) if isinstance(self.mean, ModelExpression) else (
            0.0 if not np.any(self.mean) else self.mean.tolist())
        return {"name": self.name, "dim": self.dim, "sdev": self.sdev, "mean": mean}

    def __repr__(self):
        return f"Gaussian(name={self.name!r}, dim={self.dim}, sdev={self.sdev:g}, mean={self.mean!r})"


class JointDensity:
    """Ordered product of named densities; data densities reference others via their mean."""

    def __init__(self, *densities: Gaussian):
        if not densities:
            raise ValueError("a joint density needs at least one factor")
        names = [d.name for d in densities]
        if any(n is None for n in names):
            raise ValueError("every factor of a joint density needs a name")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        self.factors = {d.name: d for d in densities}
        for d in densities:
            for v in d.conditioning_variables:
                if v not in self.factors:
                    raise ValueError(f"{d.name} depends on unknown variable {v!r}")
        self._check_acyclic()

    def _check_acyclic(self):
        state = {}

        def visit(n):
            if state.get(n) == 1:
                raise ValueError(f"cyclic dependency through {n!r}")
            if state.get(n) == 2:
                return
            state[n] = 1
            for v in self.factors[n].conditioning_variables:
                visit(v)
            state[n] = 2

        for n in self.factors:
            visit(n)

    @property
    def names(self):
        return list(self.factors)

    def logpdf(self, **values) -> float:
        missing = [n for n in self.factors if n not in values]
        if missing:
            raise KeyError(f"missing values for {missing}")
        return float(sum(d.logpdf(values[n], **values) for n, d in self.factors.items()))

    def condition(self, observed=None, **kw) -> "Posterior":
        observed = dict(observed or {}, **kw)
        for n in observed:
            if n not in self.factors:
                raise KeyError(f"unknown variable {n!r}; joint has {self.names}")
        free = [n for n in self.factors if n not in observed]
        if len(free) != 1:
            raise ValueError(f"conditioning must leave exactly one free variable, got {free}")
        x = free[0]
        prior = self.factors[x]
        if prior.conditioning_variables:
            raise ValueError(f"free variable {x!r} must have a fixed prior")
        terms = []
        for n, d in self.factors.items():
            if n == x:
                continue
            if d.conditioning_variables != (x,):
                raise ValueError(f"data density {n!r} must depend on {x!r} only")
            terms.append(LikelihoodTerm(d.mean.model, observed[n], d.sdev, n))
        return Posterior(prior, terms)


class LikelihoodTerm:
    def __init__(self, model, y_obs, sdev: float, name: str = "y"):
        y_obs = np.asarray(y_obs, dtype=np.float64)
        if y_obs.shape != (model.range_dim,):
            raise DimensionError(f"data {name}", model.range_dim, y_obs.size)
        self.model = model
        self.y_obs = y_obs
        self.sdev = float(sdev)
        self.name = name
        self._const = -0.5 * y_obs.size * (LOG_2PI + 2.0 * np.log(self.sdev))

    def loglike(self, x) -> float:
        r = self.y_obs - self.model.forward(x)
        return float(self._const - 0.5 * (r @ r) / self.sdev**2)


class Posterior:
    """``log p(x | y) = log p(x) + sum_k log p(y_k | x)`` (normalizing constant dropped)."""

    def __init__(self, prior: Gaussian, likelihoods):
        self.prior = prior
        self.likelihoods = list(likelihoods)
        for t in self.likelihoods:
            if t.model.domain_dim != prior.dim:
                raise DimensionError(f"model for {t.name}", prior.dim, t.model.domain_dim)

    @property
    def dim(self) -> int:
        return self.prior.dim

    @property
    def geometry(self):
        return self.prior.geometry

    def loglike(self, x) -> float:
        return float(sum(t.loglike(x) for t in self.likelihoods))

    def logprior(self, x) -> float:
        return self.prior.logpdf(x)

    def logpdf(self, x) -> float:
        return self.logprior(x) + self.loglike(x)

    def clone_for_thread(self) -> "Posterior":
        caches = {}
        terms = [LikelihoodTerm(t.model.clone_for_thread(caches), t.y_obs, t.sdev, t.name)
                 for t in self.likelihoods]
        return Posterior(self.prior, terms)

    def to_dict(self):
        return {"prior": self.prior.to_dict(),
                "likelihoods": [{"name": t.name, "m": t.y_obs.size, "sdev": t.sdev}
                                for t in self.likelihoods]}
