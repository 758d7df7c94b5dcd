import threading

import numpy as np
import pytest

from uqpde import ForwardModel, femlite
from uqpde.exceptions import DimensionError
from uqpde.geometry import Continuous1D, Grid1D, MappedGeometry, NodalGeometry, build_matern_kl
from uqpde.problems import build, dalembert
from uqpde.problems.eit import eit_models


@pytest.fixture(scope="module")
def heat():
    return build("heat1d", variant="step3", tau_max=0.02)


@pytest.fixture(scope="module")
def pat():
    return build("pat", data="full")


@pytest.fixture(scope="module")
def eit_small():
    mesh = femlite.mesh_unit_disk(5, 40)
    G = MappedGeometry.heaviside(build_matern_kl(NodalGeometry(mesh), 0.3, 2.0, 10))
    return mesh, G


def test_heat_step_observation_is_smoothed(heat):
    y = heat.model.forward(np.array([0.0, 1.0, 0.5]))
    assert y.max() < 1.0
    assert y[0] < 0.05 and y[-1] < 0.05


def test_zero_input_zero_output(heat, pat):
    assert not np.any(heat.model.forward(np.zeros(3)))
    assert not np.any(pat.model.forward(np.zeros(pat.model.domain_dim)))


def test_pat_forward_matches_dalembert(pat, rng):
    x = rng.standard_normal(pat.model.domain_dim)
    g = pat.domain_geometry.par2fun(x)
    nodes = pat.domain_geometry.fun_geometry.mesh.nodes
    solver = pat.extra["solver"]
    oracle = dalembert(nodes, g, solver.sensors, solver.times)
    assert np.abs(pat.model.forward(x) - oracle).max() <= 1e-2


@pytest.mark.parametrize("name", ["heat", "pat"])
def test_affine_matrix_reproduces_forward(name, heat, pat, rng):
    model = {"heat": heat, "pat": pat}[name].model
    A, y0 = model.matrix()
    for _ in range(5):
        x = rng.standard_normal(model.domain_dim)
        np.testing.assert_allclose(A @ x + y0, model.forward(x), atol=1e-8)


def test_shared_factorization_for_four_frequencies(eit_small, rng):
    mesh, G = eit_small
    models = eit_models(mesh, G)
    x = rng.standard_normal(G.par_dim)
    shared = [m.forward(x) for m in models]
    assert models[0].n_factorizations == 1
    x2 = x + 1.0
    models[0].forward(x2)
    assert models[0].n_factorizations == 2
    for k, m in enumerate(models):
        solo = eit_models(mesh, G)[k].forward(x)
        np.testing.assert_allclose(shared[k], solo, rtol=0, atol=1e-12)


def test_updated_rhs_identity(eit_small, rng):
    mesh, G = eit_small
    m = eit_models(mesh, G)[0]
    twin = m.with_updated_rhs()
    x = rng.standard_normal(G.par_dim)
    np.testing.assert_array_equal(m.forward(x), twin.forward(x))


def test_heaviside_forward_piecewise_constant(eit_small, rng):
    mesh, G = eit_small
    m = eit_models(mesh, G)[0]
    x = rng.standard_normal(G.par_dim)
    r = G.base.par2fun(x)
    # a perturbation far smaller than the smallest nodal level-set value flips no signs
    d = 1e-3 * np.abs(r).min() * rng.standard_normal(G.par_dim) / np.abs(G.base._scaled).sum(axis=1).max()
    assert np.array_equal(np.sign(G.base.par2fun(x + d)), np.sign(r))
    np.testing.assert_array_equal(m.forward(x), m.forward(x + d))


def test_model_expression_and_dims(heat):
    from uqpde.distributions import ModelExpression
    assert isinstance(heat.model("x"), ModelExpression)
    with pytest.raises(DimensionError):
        heat.model.forward(np.zeros(4))


def test_blackbox_raw_parameter():
    m = ForwardModel(lambda x: 2 * x, Continuous1D(Grid1D.uniform(0, 1, 3)),
                     Continuous1D(Grid1D.uniform(0, 1, 3)), kind="blackbox", raw_parameter=True)
    np.testing.assert_array_equal(m.forward(np.ones(3)), 2 * np.ones(3))
    with pytest.raises(TypeError):
        m.forward_function(np.ones(3))


def test_pde_model_requires_pde():
    with pytest.raises(TypeError):
        ForwardModel(lambda g: g, Continuous1D(Grid1D.uniform(0, 1, 3)),
                     Continuous1D(Grid1D.uniform(0, 1, 3)))


def test_thread_clones_are_independent(eit_small, rng):
    mesh, G = eit_small
    models = eit_models(mesh, G)
    caches = {}
    clones = [m.clone_for_thread(caches) for m in models]
    assert clones[0].pde.cache is clones[3].pde.cache
    assert clones[0].pde.cache is not models[0].pde.cache
    xs = rng.standard_normal((8, G.par_dim))
    expected = [[m.forward(x) for m in models] for x in xs]
    out = {}

    def work(i, ms):
        out[i] = [[m.forward(x) for m in ms] for x in xs]

    threads = [threading.Thread(target=work, args=(i, [m.clone_for_thread({}) for m in models]))
               for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for i in range(4):
        for a, b in zip(out[i], expected):
            for u, v in zip(a, b):
                np.testing.assert_array_equal(u, v)
