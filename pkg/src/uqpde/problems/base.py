from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..distributions import Gaussian, JointDensity, noise_sdev
from ..exceptions import ConfigError


@dataclass
class ProblemBundle:
    """Everything needed to run inference on one test problem.

    ``truth_param`` is None when the truth is not in the range of the domain
    geometry (then ``truth_projection`` holds its best coefficient fit, if any).
    Lists are per dataset (four for EIT, one otherwise).
    """

    name: str
    models: list
    prior: Gaussian
    truth_field: np.ndarray
    truth_param: np.ndarray | None
    y_exact: list
    y_obs: list
    s_noise: list
    sampler: str
    options: dict
    truth_projection: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def model(self):
        return self.models[0]

    @property
    def domain_geometry(self):
        return self.model.domain_geometry

    def data_densities(self):
        names = ["y"] if len(self.models) == 1 else [f"y{k + 1}" for k in range(len(self.models))]
        return [Gaussian(m(self.prior.name), s, m.range_geometry, n)
                for m, s, n in zip(self.models, self.s_noise, names)]

    @property
    def joint(self) -> JointDensity:
        if any(s <= 0 for s in self.s_noise):
            raise ConfigError("noise_level must be > 0 to form a posterior")
        return JointDensity(self.prior, *self.data_densities())

    @property
    def posterior(self):
        dens = self.data_densities() if all(s > 0 for s in self.s_noise) else None
        if dens is None:
            raise ConfigError("noise_level must be > 0 to form a posterior")
        return self.joint.condition({d.name: y for d, y in zip(dens, self.y_obs)})

    def to_dict(self):
        return {
            "problem": self.name,
            "options": self.options,
            "sampler": self.sampler,
            "s_noise": list(self.s_noise),
            "domain_geometry": self.domain_geometry.to_dict(),
            "range_dims": [m.range_dim for m in self.models],
        }


def synthesize(y_exact_list, noise_level, seed, absolute_sdev=None):
    """Noisy data ``y_exact + s * xi`` with one RNG stream for all datasets."""
    from ..samplers import make_rng

    rng = make_rng(seed)
    s_list, y_obs = [], []
    for y in y_exact_list:
        s = float(absolute_sdev) if absolute_sdev is not None else noise_sdev(y, noise_level)
        s_list.append(s)
        y_obs.append(y + s * rng.standard_normal(y.size) if s > 0 else y.copy())
    return s_list, y_obs


def check_range(name, value, lo=None, hi=None, lo_open=False, integer=False):
    if integer and (isinstance(value, bool) or int(value) != value):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    bad = (lo is not None and (value <= lo if lo_open else value < lo)) or (hi is not None and value > hi)
    if bad:
        lo_s = "" if lo is None else (f"> {lo}" if lo_open else f"≥ {lo}")
        hi_s = "" if hi is None else f"≤ {hi}"
        raise ConfigError(f"{name} must be {' and '.join(s for s in (lo_s, hi_s) if s)}, got {value!r}")
    return int(value) if integer else value
