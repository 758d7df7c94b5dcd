import numpy as np
import pytest
from hypothesis import given, strategies as st

from uqpde.distributions import noise_sdev
from uqpde.exceptions import ConfigError
from uqpde.problems import build, g_custom


@pytest.fixture(scope="module")
def step3():
    return build("heat1d")


def test_step3_data(step3):
    assert step3.y_obs[0].shape == (100,)
    assert step3.options["n_tau"] == 225 and step3.options["noise_level"] == 0.1
    np.testing.assert_array_equal(step3.truth_param, [0.0, 1.0, 0.5])


def test_zero_noise_data_is_exact():
    b = build("heat1d", noise_level=0.0)
    np.testing.assert_array_equal(b.y_obs[0], b.y_exact[0])
    with pytest.raises(ConfigError, match="noise_level must be > 0"):
        b.posterior


def test_negative_noise_rejected():
    with pytest.raises(ConfigError, match="noise_level"):
        build("heat1d", noise_level=-0.1)


def test_cfl_violation_message():
    with pytest.raises(ConfigError, match="CFL"):
        build("heat1d", n_tau=20)


def test_g_custom_value():
    assert g_custom(0.5) == pytest.approx((3 + np.exp(-18)) / 30, rel=1e-14)


def test_y_exact_is_noise_free_forward(step3):
    np.testing.assert_array_equal(step3.y_exact[0], step3.model.forward(step3.truth_param))
    assert step3.s_noise[0] == pytest.approx(0.1 * np.linalg.norm(step3.y_exact[0]) / 10.0)


@given(st.floats(0.001, 0.5))
def test_noise_sdev_formula(level):
    y = np.arange(1.0, 17.0)
    assert noise_sdev(y, level) == pytest.approx(level * np.linalg.norm(y) / 4.0)


def test_determinism():
    a, b = build("heat1d", variant="kl20", seed=3), build("heat1d", variant="kl20", seed=3)
    np.testing.assert_array_equal(a.y_obs[0], b.y_obs[0])
    c = build("heat1d", variant="kl20", seed=4)
    assert not np.array_equal(a.y_obs[0], c.y_obs[0])


def test_half_observation():
    b = build("heat1d", obs="half")
    assert b.y_obs[0].shape == (50,)


def test_poisson_zero_truth_symmetric():
    b = build("poisson2d", truth="zero", noise_level=0.0)
    mesh = b.extra["mesh"]
    u = b.y_exact[0]
    assert u.size == 1089
    v = mesh.vertices
    walls = np.isclose(v[:, 0], 0) | np.isclose(v[:, 0], 1)
    assert np.all(u[walls] == 0)
    # the solution depends on x only and is mirror symmetric about x = 1/2
    order = np.lexsort((v[:, 1], v[:, 0]))
    grid = u[order].reshape(33, 33)
    np.testing.assert_allclose(grid, grid[::-1, :], atol=1e-12)
    np.testing.assert_allclose(grid, grid[:, ::-1], atol=1e-12)
    x = np.unique(np.round(v[:, 0], 12))
    np.testing.assert_allclose(grid[:, 0], x * (1 - x) / 2, atol=1e-3)


def test_eit_constant_conductivity_current():
    b = build("eit", noise_level=0.0)
    mesh = b.extra["mesh"]
    bnd = mesh.boundary_nodes
    theta = np.arctan2(mesh.vertices[bnd, 1], mesh.vertices[bnd, 0])
    assert len(bnd) == 94
    for k, m in enumerate(b.models, start=1):
        y = m.forward_function(np.ones(mesh.n_nodes))
        exact = k * np.sin(k * theta) * 2 * np.pi / 94
        assert np.linalg.norm(y - exact) / np.linalg.norm(exact) <= 0.05
    assert len(b.y_obs) == 4 and all(y.size == 94 for y in b.y_obs)


def test_eit_truth_in_two_levels():
    b = build("eit", truth="one_circle")
    assert set(np.unique(b.truth_field)) == {1.0, 10.0}
    with pytest.raises(ConfigError, match="truth"):
        build("eit", truth="square")


@pytest.mark.parametrize("data,size", [("full", 500), ("partial", 250)])
def test_pat_data_lengths(data, size):
    b = build("pat", data=data)
    assert b.y_obs[0].size == size
    assert b.s_noise[0] == 0.125
    assert not np.any(b.model.forward_function(np.zeros(121)))


def test_unknown_problem():
    with pytest.raises(ValueError, match="unknown problem"):
        build("wave3d")


def test_bundle_to_dict(step3):
    d = step3.to_dict()
    assert d["problem"] == "heat1d" and d["range_dims"] == [100] and d["sampler"] == "cwmh"
