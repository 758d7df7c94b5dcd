"""Electrical impedance tomography with a level-set (Heaviside) conductivity prior."""

from __future__ import annotations

import numpy as np

from .. import femlite
from ..distributions import Gaussian
from ..exceptions import ConfigError
from ..geometry import Continuous1D, MappedGeometry, NodalGeometry, build_matern_kl
from ..model import ForwardModel
from ..pde import SteadyStateLinearPDE
from .base import ProblemBundle, check_range, synthesize

SIGMA_MINUS = 1.0
SIGMA_PLUS = 10.0
FREQUENCIES = (1, 2, 3, 4)

# (center_x, center_y, radius)
TRUTHS = {
    "three_circles": [(0.5, 0.5, 0.2), (-0.5, 0.6, 0.1), (-0.3, -0.3, 0.3)],
    "one_circle": [(0.3, 0.2, 0.35)],
}


def circles_conductivity(vertices, circles, sigma_minus=SIGMA_MINUS, sigma_plus=SIGMA_PLUS):
    """Nodal conductivity: sigma_plus at nodes inside any circle."""
    inside = np.zeros(len(vertices), dtype=bool)
    for cx, cy, r in circles:
        inside |= np.hypot(vertices[:, 0] - cx, vertices[:, 1] - cy) < r
    return np.where(inside, sigma_plus, sigma_minus)


def eit_models(mesh, domain_geometry, frequencies=FREQUENCIES, solver="sparse_cholesky"):
    """One forward model per frequency; all share one stiffness factorization."""
    boundary = np.asarray(mesh.boundary_nodes)
    range_geometry = Continuous1D(np.arange(len(boundary), dtype=np.float64))
    lifts = {k: femlite.harmonic_lift(k, mesh) for k in frequencies}

    def lhs(sigma):
        return femlite.assemble_p1(mesh, sigma).stiffness

    def make_rhs(k):
        lift = lifts[k]

        def rhs(sigma, K):
            return -(K @ lift)

        return rhs

    def make_observer(k):
        lift = lifts[k]

        def observer(sigma, v):
            return femlite.boundary_current(mesh, sigma, v + lift)

        return observer

    k0 = frequencies[0]
    base = SteadyStateLinearPDE(lhs, make_rhs(k0), make_observer(k0), boundary, 0.0,
                                solver=solver, param_dim=mesh.n_nodes)
    first = ForwardModel(base, domain_geometry, range_geometry)
    models = [first]
    for k in frequencies[1:]:
        models.append(first.with_updated_rhs(make_rhs(k), make_observer(k)))
    return models


def build_eit(n_rings=8, n_sectors=94, n_kl=64, length_scale=0.2, smoothness=2.0,
              noise_level=0.05, truth="three_circles", seed=0, solver="sparse_cholesky",
              cache_dir=None) -> ProblemBundle:
    n_rings = check_range("n_rings", n_rings, lo=1, integer=True)
    n_sectors = check_range("n_sectors", n_sectors, lo=3, integer=True)
    check_range("noise_level", noise_level, lo=0)
    check_range("length_scale", length_scale, lo=0, lo_open=True)
    check_range("smoothness", smoothness, lo=0, lo_open=True)
    n_kl = check_range("n_kl", n_kl, lo=1, hi=1 + n_rings * n_sectors, integer=True)
    if truth not in TRUTHS:
        raise ConfigError(f"truth must be one of {sorted(TRUTHS)}, got {truth!r}")

    mesh = femlite.mesh_unit_disk(n_rings, n_sectors)
    nodal = NodalGeometry(mesh)
    G_kl = build_matern_kl(nodal, length_scale, smoothness, n_kl, cache_dir=cache_dir)
    G = MappedGeometry.heaviside(G_kl, SIGMA_MINUS, SIGMA_PLUS)
    models = eit_models(mesh, G, solver=solver)

    sigma_true = circles_conductivity(mesh.vertices, TRUTHS[truth])
    y_exact = [m.forward_function(sigma_true) for m in models]
    s_noise, y_obs = synthesize(y_exact, noise_level, seed)
    prior = Gaussian(np.zeros(n_kl), 1.0, G, name="x")
    options = dict(n_rings=n_rings, n_sectors=n_sectors, n_kl=n_kl, length_scale=length_scale,
                   smoothness=smoothness, noise_level=noise_level, truth=truth, seed=seed)
    return ProblemBundle("eit", models, prior, sigma_true, None, y_exact, y_obs, s_noise, "mh",
                         options, extra={"mesh": mesh, "circles": TRUTHS[truth]})
