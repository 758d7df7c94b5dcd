import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from uqpde import femlite
from uqpde.exceptions import NotSPDError

from oracles import edge_oracle


@given(st.integers(1, 12), st.integers(1, 12))
def test_square_area_partition(nx, ny):
    m = femlite.mesh_unit_square(nx, ny)
    assert m.n_nodes == (nx + 1) * (ny + 1)
    assert m.areas.sum() == pytest.approx(1.0, abs=1e-12)


def test_mesh_counts():
    m = femlite.mesh_unit_square(1, 1)
    assert (m.n_nodes, m.n_triangles) == (4, 2)
    assert femlite.mesh_unit_square(32, 32).n_nodes == 1089
    d = femlite.mesh_unit_disk(1, 3)
    assert (d.n_nodes, d.n_triangles) == (4, 3)
    d = femlite.mesh_unit_disk(8, 94)
    assert d.n_nodes == 753 and len(d.boundary_nodes) == 94
    assert femlite.mesh_unit_disk(16, 94).areas.sum() == pytest.approx(np.pi, rel=0.02)


def test_disk_boundary_sorted_by_angle():
    d = femlite.mesh_unit_disk(5, 40)
    x, y = d.vertices[d.boundary_nodes].T
    assert np.all(np.diff(np.arctan2(y, x) % (2 * np.pi)) > 0)


def test_reference_element_stiffness():
    m = femlite.TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [0, 1, 2])
    K = femlite.assemble_p1(m, 1.0).stiffness.toarray()
    np.testing.assert_allclose(K, 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]]), atol=1e-15)


def test_stiffness_row_sums_and_scaling(rng):
    m = femlite.mesh_unit_disk(4, 20)
    s = np.exp(rng.standard_normal(m.n_nodes))
    K = femlite.assemble_p1(m, s).stiffness
    assert np.abs(K @ np.ones(m.n_nodes)).max() <= 1e-10
    K2 = femlite.assemble_p1(m, 2 * s).stiffness
    assert (K2 - 2 * K).count_nonzero() == 0 or np.abs((K2 - 2 * K).data).max() == 0.0


def test_assembly_deterministic(rng):
    m = femlite.mesh_unit_square(9, 7)
    s = np.exp(rng.standard_normal(m.n_nodes))
    a, b = femlite.assemble_p1(m, s).stiffness, femlite.assemble_p1(m, s).stiffness
    assert np.array_equal(a.data, b.data) and np.array_equal(a.indices, b.indices)


def test_dirichlet_contracts():
    m = femlite.mesh_unit_square(6, 6)
    sysm = femlite.assemble_p1(m, 1.0)
    bnd = m.boundary_nodes
    u, _ = femlite.solve_p1(femlite.apply_dirichlet(sysm, bnd, 0.0))
    assert np.abs(u).max() == 0.0
    vals = np.linspace(1, 2, len(bnd))
    c = femlite.apply_dirichlet(femlite.assemble_p1(m, 1.0, source=1.0), bnd, vals)
    assert abs(c.stiffness - c.stiffness.T).max() == 0
    u, _ = femlite.solve_p1(c)
    np.testing.assert_allclose(u[bnd], vals, rtol=0, atol=1e-13)
    with pytest.raises(ValueError, match="conflicting"):
        femlite.apply_dirichlet(sysm, [0, 0], [1.0, 2.0])


def _manufactured(n):
    m = femlite.mesh_unit_square(n, n)
    x, y = m.vertices.T
    f = 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)
    c = femlite.apply_dirichlet(femlite.assemble_p1(m, 1.0, source=f), m.boundary_nodes, 0.0)
    u, info = femlite.solve_p1(c, "sparse_cholesky")
    exact = np.sin(np.pi * x) * np.sin(np.pi * y)
    e = u - exact
    l2 = np.sqrt(e @ (m.mass_matrix @ e))
    energy = np.sqrt(e @ (m.stiffness_matrix(1.0) @ e))
    return l2, energy, info


def test_manufactured_convergence():
    errs = [_manufactured(n) for n in (8, 16, 32)]
    for (a, ea, _), (b, eb, _) in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5
        assert eb < ea
    assert all(info["residual"] <= 1e-10 for *_, info in errs)


def test_poisson_mixed_bc_symmetry():
    m = femlite.mesh_unit_square(16, 16)
    walls = [v for v, t in zip(m.boundary_nodes, m.markers) if t in ("left", "right")]
    u, _ = femlite.solve_p1(femlite.apply_dirichlet(femlite.assemble_p1(m, 1.0, source=1.0), walls, 0.0))
    x, y = m.vertices.T
    mirror = np.lexsort((y, 1 - x))
    order = np.lexsort((y, x))
    np.testing.assert_allclose(u[order], u[mirror], atol=1e-8)


def test_harmonic_lift():
    m = femlite.mesh_unit_disk(8, 94)
    for k in (1, 2, 3):
        lift = femlite.harmonic_lift(k, m)
        x, y = m.vertices[m.boundary_nodes].T
        np.testing.assert_allclose(lift[m.boundary_nodes], np.sin(k * np.arctan2(y, x)), atol=1e-14)
        assert lift[0] == 0.0
        interior = np.setdiff1d(np.arange(m.n_nodes), m.boundary_nodes)
        r = (m.stiffness_matrix(1.0) @ lift)[interior]
        h = 1 / 8
        assert np.linalg.norm(r) <= h * np.linalg.norm(lift)


def test_boundary_flux_contracts():
    m = femlite.mesh_unit_disk(4, 30)
    assert np.abs(femlite.boundary_flux(m, None, np.full(m.n_nodes, 3.0))).max() <= 1e-12
    u = femlite.harmonic_lift(2, m)
    np.testing.assert_array_equal(femlite.boundary_flux(m, None, 2 * u), 2 * femlite.boundary_flux(m, None, u))


def test_facet_flux_exact_for_linear_fields():
    m = femlite.mesh_unit_disk(3, 20)
    flux = femlite.boundary_flux(m, None, femlite.harmonic_lift(1, m))
    exact, _ = edge_oracle(m, 1)
    np.testing.assert_allclose(flux, exact, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_boundary_current_against_analytic(k):
    m = femlite.mesh_unit_disk(8, 94)
    lift = femlite.harmonic_lift(k, m)
    K = m.stiffness_matrix(1.0)
    Kc = femlite.constrain_matrix(K, m.boundary_nodes)
    b = femlite.constrain_load(K, -(K @ lift), m.boundary_nodes, 0.0)
    v, _ = femlite.factorize(Kc, "sparse_cholesky")(b)
    current = femlite.boundary_current(m, None, v + lift)
    exact, _ = edge_oracle(m, k)
    assert np.linalg.norm(current - exact) / np.linalg.norm(exact) <= 0.05


def test_boundary_current_is_boundary_rows_of_stiffness(rng):
    m = femlite.mesh_unit_disk(5, 31)
    s = np.exp(rng.standard_normal(m.n_nodes))
    u = rng.standard_normal(m.n_nodes)
    np.testing.assert_allclose(femlite.boundary_current(m, s, u),
                               (m.stiffness_matrix(s) @ u)[m.boundary_nodes], atol=1e-13)
    assert np.abs(femlite.boundary_current(m, s, np.ones(m.n_nodes))).max() <= 1e-12


def test_spd_after_constraints_and_cholesky_oracle(rng):
    m = femlite.mesh_unit_square(32, 32)
    walls = [v for v, t in zip(m.boundary_nodes, m.markers) if t in ("left", "right")]
    K = femlite.constrain_matrix(m.stiffness_matrix(np.exp(rng.standard_normal(m.n_nodes))), walls)
    b = rng.standard_normal(m.n_nodes)
    u, _ = femlite.factorize(K, "sparse_cholesky")(b)
    ref = sla.cho_solve(sla.cho_factor(K.toarray()), b)
    np.testing.assert_allclose(u, ref, rtol=1e-9, atol=1e-12)


def test_not_spd_detected():
    K = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    for method in ("sparse_cholesky", "dense_cholesky"):
        with pytest.raises(NotSPDError):
            femlite.factorize(K, method)


def test_mesh_file_round_trip(tmp_path):
    m = femlite.mesh_unit_square(5, 3)
    femlite.save_mesh(m, tmp_path / "m.txt")
    back = femlite.load_mesh(tmp_path / "m.txt")
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.triangles, m.triangles)
    assert back.markers == m.markers
    (tmp_path / "bad.txt").write_text("q 1 2\n")
    with pytest.raises(ValueError, match="unknown record"):
        femlite.load_mesh(tmp_path / "bad.txt")


def test_interval_matrices_quadrature():
    K, w = femlite.interval_matrices(np.linspace(0, 1, 11))
    assert w.sum() == pytest.approx(1.0)
    assert np.abs(K @ np.ones(11)).max() <= 1e-12


def test_dirichlet_plan_reuse_and_missing_diagonal(rng):
    m = femlite.mesh_unit_disk(3, 12)
    nodes = m.boundary_nodes
    plan = femlite.DirichletPlan(m.stiffness_matrix(1.0), nodes)
    for _ in range(3):
        K = m.stiffness_matrix(np.exp(rng.standard_normal(m.n_nodes)))
        assert plan.matches(K)
        dense = K.toarray()
        dense[nodes, :] = 0
        dense[:, nodes] = 0
        dense[nodes, nodes] = 1
        np.testing.assert_array_equal(plan.apply(K).toarray(), dense)
    # a pattern without stored diagonal entries on the constrained rows
    A = sp.csr_matrix(np.array([[2.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 3.0]]))
    A.eliminate_zeros()
    np.testing.assert_array_equal(femlite.constrain_matrix(A, [1]).toarray(),
                                  [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]])
    assert not plan.matches(A)
