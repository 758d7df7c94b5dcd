"""1D heat equation: infer the initial temperature from the final-time profile."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..distributions import Gaussian
from ..exceptions import ConfigError
from ..geometry import Continuous1D, Grid1D, KLExpansion, StepExpansion
from ..model import ForwardModel
from ..pde import TimeDependentLinearPDE
from .base import ProblemBundle, check_range, synthesize

STEP_TRUTH = np.array([0.0, 1.0, 0.5])
STEPS_PER_CENTI = 224  # 225 time points on [0, 0.01]


def g_custom(xi):
    """Smooth reference initial condition with two Gaussian bumps."""
    xi = np.asarray(xi, dtype=np.float64)
    return (1.0 - np.cos(2.0 * np.pi * (1.0 - xi)) + np.exp(-200.0 * (xi - 0.5) ** 2)
            + np.exp(-200.0 * (xi - 0.8) ** 2)) / 30.0


def default_n_tau(tau_max):
    return int(round(STEPS_PER_CENTI * tau_max / 0.01)) + 1


def default_noise_level(variant):
    return 0.1 if variant == "step3" else 0.05


def diffusion_operator(n_grid, c=1.0):
    h = 1.0 / (n_grid + 1)
    e = np.ones(n_grid)
    return (c**2 / h**2) * sp.diags([e[:-1], -2.0 * e, e[:-1]], [-1, 0, 1], format="csr")


def build_heat1d(variant="step3", tau_max=0.01, noise_level=None, obs="full", n_grid=100,
                 n_tau=None, c=1.0, scheme="explicit_euler", seed=0, n_steps=3,
                 decay_rate=1.5, normalizer=10.0, num_modes=20) -> ProblemBundle:
    if variant not in ("step3", "kl20"):
        raise ConfigError(f"variant must be one of ['step3', 'kl20'], got {variant!r}")
    if obs not in ("full", "half"):
        raise ConfigError(f"obs must be one of ['full', 'half'], got {obs!r}")
    if noise_level is None:
        noise_level = default_noise_level(variant)
    check_range("noise_level", noise_level, lo=0)
    check_range("tau_max", tau_max, lo=0, lo_open=True)
    n_grid = check_range("n_grid", n_grid, lo=4, integer=True)
    check_range("c", c, lo=0, lo_open=True)
    if n_tau is None:
        n_tau = default_n_tau(tau_max)
    n_tau = check_range("n_tau", n_tau, lo=2, integer=True)

    h = 1.0 / (n_grid + 1)
    dt = tau_max / (n_tau - 1)
    if scheme == "explicit_euler" and dt > h**2 / (2.0 * c**2) * (1 + 1e-12):
        raise ConfigError(
            f"explicit Euler violates the CFL bound: dt={dt:.3g} > h^2/(2c^2)={h**2 / (2 * c**2):.3g}; "
            "increase n_tau or use scheme='implicit_euler'")

    grid = Grid1D.interior(n_grid)
    grid_obs = grid if obs == "full" else Grid1D(grid.nodes[: n_grid // 2])
    D = diffusion_operator(n_grid, c)
    f = np.zeros(n_grid)

    def form(g, tau):
        return D, f, g

    pde = TimeDependentLinearPDE(form, np.linspace(0.0, tau_max, n_tau), grid, grid_obs,
                                 scheme=scheme, param_dim=n_grid)
    if variant == "step3":
        G = StepExpansion(grid, n_steps, domain=(0.0, 1.0))
    else:
        G = KLExpansion(grid, decay_rate, normalizer, num_modes, domain=(0.0, 1.0))
    model = ForwardModel(pde, G, Continuous1D(grid_obs))

    projection = None
    if variant == "step3":
        if n_steps != 3:
            raise ConfigError("the step truth [0, 1, 0.5] needs n_steps = 3")
        truth_param = STEP_TRUTH.copy()
        truth_field = G.par2fun(truth_param)
        y_exact = model.forward(truth_param)
    else:
        truth_param = None
        truth_field = g_custom(grid.nodes)
        projection = G.fun2par(truth_field)
        y_exact = model.forward_function(truth_field)
    s_noise, y_obs = synthesize([y_exact], noise_level, seed)
    prior = Gaussian(np.zeros(G.par_dim), 1.0, G, name="x")
    options = dict(variant=variant, tau_max=tau_max, noise_level=noise_level, obs=obs,
                   n_grid=n_grid, n_tau=n_tau, c=c, scheme=scheme, seed=seed)
    if variant == "step3":
        options["n_steps"] = n_steps
    else:
        options.update(decay_rate=decay_rate, normalizer=normalizer, num_modes=num_modes)
    return ProblemBundle("heat1d", [model], prior, truth_field, truth_param, [y_exact], y_obs,
                         s_noise, "cwmh", options, truth_projection=projection)
