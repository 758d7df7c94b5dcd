"""2D Poisson log-conductivity inversion on the unit square."""

from __future__ import annotations

import numpy as np

from .. import femlite
from ..distributions import Gaussian
from ..exceptions import ConfigError
from ..geometry import MappedGeometry, NodalGeometry, build_matern_kl
from ..model import ForwardModel
from ..pde import SteadyStateLinearPDE
from ..samplers import make_rng
from .base import ProblemBundle, check_range, synthesize


def build_poisson2d(mesh_dim=(32, 32), n_kl=32, length_scale=0.1, smoothness=2.0,
                    noise_level=0.01, seed=0, truth_seed=0, truth="prior", solver="sparse_cholesky",
                    cache_dir=None) -> ProblemBundle:
    nx, ny = (int(v) for v in mesh_dim)
    check_range("mesh_dim[0]", nx, lo=4, integer=True)
    check_range("mesh_dim[1]", ny, lo=4, integer=True)
    check_range("noise_level", noise_level, lo=0)
    check_range("length_scale", length_scale, lo=0, lo_open=True)
    check_range("smoothness", smoothness, lo=0, lo_open=True)
    n_kl = check_range("n_kl", n_kl, lo=1, hi=(nx + 1) * (ny + 1), integer=True)
    if truth not in ("prior", "zero"):
        raise ConfigError(f"truth must be 'prior' or 'zero', got {truth!r}")

    mesh = femlite.mesh_unit_square(nx, ny)
    nodal = NodalGeometry(mesh)
    G_kl = build_matern_kl(nodal, length_scale, smoothness, n_kl, cache_dir=cache_dir)
    G = MappedGeometry.exp(G_kl)
    walls = np.array([v for v, m in zip(mesh.boundary_nodes, mesh.markers) if m in ("left", "right")])
    load = mesh.mass_matrix @ np.ones(mesh.n_nodes)

    def lhs(sigma):
        return femlite.assemble_p1(mesh, sigma).stiffness

    def rhs(sigma, K):
        return load

    def observer(sigma, u):
        return u

    pde = SteadyStateLinearPDE(lhs, rhs, observer, walls, 0.0, solver=solver,
                               param_dim=mesh.n_nodes)
    model = ForwardModel(pde, G, nodal)
    truth_param = (make_rng(truth_seed).standard_normal(n_kl) if truth == "prior"
                   else np.zeros(n_kl))
    y_exact = model.forward(truth_param)
    s_noise, y_obs = synthesize([y_exact], noise_level, seed)
    prior = Gaussian(np.zeros(n_kl), 1.0, G, name="x")
    options = dict(mesh_dim=[nx, ny], n_kl=n_kl, length_scale=length_scale, smoothness=smoothness,
                   noise_level=noise_level, seed=seed, truth_seed=truth_seed, truth=truth)
    return ProblemBundle("poisson2d", [model], prior, G.par2fun(truth_param), truth_param,
                         [y_exact], y_obs, s_noise, "pcn", options,
                         extra={"mesh": mesh, "log_conductivity": G_kl.par2fun(truth_param)})
