"""1D photoacoustic tomography with a black-box leapfrog wave solver."""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..distributions import Gaussian
from ..exceptions import ConfigError
from ..geometry import Continuous1D, Continuous2D, Grid1D, Grid2D, MappedGeometry, NodalGeometry, build_matern_kl
from ..model import ForwardModel
from ..samplers import make_rng
from .base import ProblemBundle, check_range, synthesize

S_NOISE = 0.125


class WaveSolver:
    """Leapfrog solver for u_tt = u_xx on [-1, 2] with u(0) = g, u_t(0) = 0.

    ``g`` is given on ``g_nodes`` (inside [0, 1]) and extended by zero. Pressure
    is recorded at ``sensors`` at times i / frequency, i = 1..m.
    """

    def __init__(self, g_nodes, sensors=(0.0, 1.0), frequency=250, m=250, dx=1.0 / 500,
                 dt=None, domain=(-1.0, 2.0)):
        dt = dx if dt is None else dt
        if dt > dx * (1 + 1e-12):
            raise ConfigError(f"leapfrog CFL violated: dt={dt} > dx={dx}")
        self.g_nodes = np.asarray(g_nodes, dtype=np.float64)
        lo, hi = domain
        n_cells = (hi - lo) / dx
        if abs(n_cells - round(n_cells)) > 1e-9:
            raise ConfigError("domain length must be a multiple of dx")
        self.x = np.linspace(lo, hi, int(round(n_cells)) + 1)
        idx = (np.asarray(sensors, dtype=np.float64) - lo) / dx
        if np.any(np.abs(idx - np.round(idx)) > 1e-9):
            raise ConfigError("sensors must lie on solver grid nodes")
        self.sensor_idx = np.round(idx).astype(np.int64)
        stride = 1.0 / (frequency * dt)
        if abs(stride - round(stride)) > 1e-9:
            raise ConfigError("1 / (frequency * dt) must be an integer")
        self.stride = int(round(stride))
        self.m = int(m)
        self.n_steps = self.m * self.stride
        reach = self.n_steps * dt
        if self.g_nodes[0] - reach < lo - 1e-9 or self.g_nodes[-1] + reach > hi + 1e-9:
            # reflections from the artificial ends could reach the sensors
            raise ConfigError("domain too small for the recording time")
        self.courant2 = (dt / dx) ** 2
        self.sensors = tuple(sensors)
        self.frequency = frequency

    @property
    def times(self):
        return np.arange(1, self.m + 1) / self.frequency

    def initial_state(self, g):
        return np.interp(self.x, self.g_nodes, g, left=0.0, right=0.0)

    def __call__(self, g):
        u0 = self.initial_state(np.asarray(g, dtype=np.float64))
        rec = kernels.leapfrog_record(u0, self.courant2, self.n_steps, self.sensor_idx, self.stride)
        return rec.ravel()


def dalembert(g_nodes, g, sensors, times):
    """Closed-form sensor data: u(s, t) = (g(s - t) + g(s + t)) / 2 with zero extension."""
    out = []
    for s in sensors:
        out.append(0.5 * (np.interp(s - times, g_nodes, g, left=0.0, right=0.0)
                          + np.interp(s + times, g_nodes, g, left=0.0, right=0.0)))
    return np.concatenate(out)


def two_bumps(xi):
    xi = np.asarray(xi, dtype=np.float64)
    return 8.0 * np.exp(-((xi - 0.3) / 0.06) ** 2) + 5.0 * np.exp(-((xi - 0.7) / 0.1) ** 2)


def build_pat(data="full", n_g=121, n_kl=100, length_scale=0.1, smoothness=0.75, scale=15.0,
              s_noise=S_NOISE, truth="prior", seed=0, truth_seed=0, frequency=250, m=250,
              cache_dir=None) -> ProblemBundle:
    if data not in ("full", "partial"):
        raise ConfigError(f"data must be one of ['full', 'partial'], got {data!r}")
    if truth not in ("prior", "two_bumps"):
        raise ConfigError(f"truth must be one of ['prior', 'two_bumps'], got {truth!r}")
    n_g = check_range("n_g", n_g, lo=2, integer=True)
    n_kl = check_range("n_kl", n_kl, lo=1, hi=n_g, integer=True)
    check_range("s_noise", s_noise, lo=0)
    check_range("length_scale", length_scale, lo=0, lo_open=True)
    check_range("smoothness", smoothness, lo=0, lo_open=True)
    if scale == 0:
        raise ConfigError("scale must be nonzero")

    g_grid = Grid1D.uniform(0.0, 1.0, n_g)
    sensors = (0.0, 1.0) if data == "full" else (0.0,)
    solver = WaveSolver(g_grid.nodes, sensors, frequency, m)
    nodal = NodalGeometry(g_grid)
    G_kl = build_matern_kl(nodal, length_scale, smoothness, n_kl, cache_dir=cache_dir)
    G = MappedGeometry.scale(G_kl, scale)
    if len(sensors) > 1:
        range_geometry = Continuous2D(Grid2D(Grid1D(solver.times), Grid1D(np.array(sensors))))
    else:
        range_geometry = Continuous1D(Grid1D(solver.times))
    model = ForwardModel(solver, G, range_geometry, kind="blackbox")

    if truth == "prior":
        truth_param = make_rng(truth_seed).standard_normal(n_kl)
        truth_field = G.par2fun(truth_param)
        y_exact = model.forward(truth_param)
        projection = None
    else:
        truth_param = None
        truth_field = two_bumps(g_grid.nodes)
        projection = G.fun2par(truth_field)
        y_exact = model.forward_function(truth_field)
    s_list, y_obs = synthesize([y_exact], 0.0, seed, absolute_sdev=s_noise)
    prior = Gaussian(np.zeros(n_kl), 1.0, G, name="x")
    options = dict(data=data, n_g=n_g, n_kl=n_kl, length_scale=length_scale, smoothness=smoothness,
                   scale=scale, s_noise=s_noise, truth=truth, seed=seed, truth_seed=truth_seed)
    return ProblemBundle("pat", [model], prior, truth_field, truth_param, [y_exact], y_obs, s_list,
                         "pcn", options, truth_projection=projection,
                         extra={"solver": solver, "sensors": sensors})
