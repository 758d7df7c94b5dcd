import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uqpde import femlite
from uqpde.geometry import Grid1D, MappedGeometry, NodalGeometry, StepExpansion, build_matern_kl
from uqpde.samplers import make_rng
from uqpde.samples import Samples, effective_sample_size, load_samples

GRID = Grid1D.interior(30)


def test_identical_samples_zero_variance():
    assert Samples(np.full((2, 10), 3.0)).variance().tolist() == [0.0, 0.0]


def test_two_samples_unbiased():
    s = Samples(np.array([[-1.0, 1.0]]))
    assert s.mean()[0] == 0.0
    assert s.variance()[0] == 2.0


def test_variance_needs_two():
    with pytest.raises(ValueError):
        Samples(np.ones((2, 1))).variance()


def test_normal_moments_and_ci():
    s = Samples(make_rng(0).standard_normal((1, 100_000)))
    assert abs(s.mean()[0]) <= 0.02
    assert 0.98 <= s.variance()[0] <= 1.02
    lo, hi, _ = s.ci(95)
    assert lo[0] == pytest.approx(-1.96, abs=0.05)
    assert hi[0] == pytest.approx(1.96, abs=0.05)


def test_ci_extremes_and_symmetry():
    lo, hi, _ = Samples(np.array([[1.0, 2.0, 3.0]])).ci(100)
    assert (lo[0], hi[0]) == (1.0, 3.0)
    lo, hi, mean = Samples(np.array([[-2.5, 2.5]])).ci(90)
    assert lo[0] == -hi[0]
    assert mean[0] == 0.0


@given(arrays(np.float64, (2, 25), elements=st.floats(-1e3, 1e3)), st.floats(1, 99), st.floats(1, 99))
def test_ci_nested_and_mean_inside(values, p1, p2):
    s = Samples(values)
    p1, p2 = sorted((p1, p2))
    lo1, hi1, _ = s.ci(p1)
    lo2, hi2, _ = s.ci(p2)
    assert np.all(lo2 <= lo1 + 1e-9) and np.all(hi1 <= hi2 + 1e-9)
    lo, hi, mean = s.ci(100)
    assert np.all(lo - 1e-9 <= mean) and np.all(mean <= hi + 1e-9)


def test_funvals_step_field():
    G = StepExpansion(GRID, 3, domain=(0, 1))
    f = Samples(np.array([[0.0], [1.0], [0.5]]), G).funvals()
    np.testing.assert_array_equal(f.values[:, 0], G.par2fun([0, 1, 0.5]))


def test_funvals_heaviside_image():
    base = build_matern_kl(NodalGeometry(femlite.mesh_unit_disk(3, 16)), 0.3, 2.0, 6)
    G = MappedGeometry.heaviside(base)
    s = Samples(make_rng(2).standard_normal((6, 50)), G)
    assert set(np.unique(s.funvals().values)) <= {1.0, 5.5, 10.0}


def test_funvals_mean_commutes_for_linear_geometry():
    G = StepExpansion(GRID, 3)
    s = Samples(make_rng(3).standard_normal((3, 200)), G)
    np.testing.assert_allclose(s.funvals().mean(), G.par2fun(s.mean()), atol=1e-10)


@given(st.lists(st.integers(0, 39), min_size=1, max_size=20))
def test_funvals_commutes_with_subselection(idx):
    G = StepExpansion(GRID, 3)
    s = Samples(make_rng(4).standard_normal((3, 40)), G)
    np.testing.assert_array_equal(s[idx].funvals().values, s.funvals()[idx].values)


def test_ess_iid_and_pairs():
    x = make_rng(5).standard_normal(20_000)
    assert effective_sample_size(x) == pytest.approx(20_000, rel=0.2)
    pairs = np.repeat(make_rng(6).standard_normal(10_000), 2)
    assert effective_sample_size(pairs) == pytest.approx(10_000, rel=0.25)
    assert effective_sample_size(np.ones(100)) == 1.0


def test_export_round_trip(tmp_path):
    G = StepExpansion(GRID, 3)
    s = Samples(make_rng(7).standard_normal((3, 50)) * 1e-7 + 1 / 3, G, {"seed": 11})
    s.export(tmp_path)
    back = load_samples(tmp_path, G)
    np.testing.assert_array_equal(back.values, s.values)
    assert (tmp_path / "samples.csv").read_text().splitlines()[0] == "x_1,x_2,x_3"
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["seed"] == 11
    rows = (tmp_path / "stats.csv").read_text().splitlines()
    assert rows[0].startswith("dim,mean,variance,ci95_lower,ci95_upper,ess")
    assert len(rows) == 1 + 3


def test_values_read_only():
    s = Samples(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0
