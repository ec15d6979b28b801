import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasidual.grid import (GridFunction, Mesh, apply_laplacian, boundary_distance,
                            first_eigenfunction, from_csv, h1_norm_sq, inner, integrate,
                            l2_norm_sq, resample, to_csv)


@pytest.mark.parametrize("dim,n", [(1, 63), (2, 15), (3, 7)])
def test_discrete_first_eigenpair(dim, n):
    mesh = Mesh(dim, n)
    phi, lam = first_eigenfunction(mesh)
    h = mesh.spacing
    # phi_1 is an exact eigenvector of the 3-point stencil with this eigenvalue
    lam_h = dim * 4 / h**2 * np.sin(np.pi * h / 2) ** 2
    np.testing.assert_allclose(apply_laplacian(phi).values, lam_h * phi.values, rtol=1e-10)
    assert lam_h == pytest.approx(lam, rel=np.pi**2 * h**2)


def test_laplacian_exact_on_quadratic():
    mesh = Mesh(1, 31)
    x = mesh.axis
    v = mesh.field(x * (1 - x))
    np.testing.assert_allclose(apply_laplacian(v).values, 2.0, rtol=1e-10)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_laplacian_symmetric_positive(dim):
    a = Mesh(dim, 5).laplacian
    assert abs(a - a.T).max() == 0
    assert np.linalg.eigvalsh(a.toarray()).min() > 0


def test_poincare_inequality(rng):
    mesh = Mesh(2, 15)
    lam1 = 2 * 4 / mesh.spacing**2 * np.sin(np.pi * mesh.spacing / 2) ** 2
    for _ in range(10):
        v = mesh.field(rng.standard_normal(mesh.size))
        assert h1_norm_sq(v) >= lam1 * l2_norm_sq(v) * (1 - 1e-12)


def test_second_order_refinement():
    # error of -Delta_h applied to sin(pi x) sin(2 pi y) drops by 4 per halving
    def err(n):
        mesh = Mesh(2, n)
        f = lambda c: np.sin(np.pi * c[:, 0]) * np.sin(2 * np.pi * c[:, 1])
        v = mesh.sample(f)
        return np.max(np.abs(apply_laplacian(v).values - 5 * np.pi**2 * v.values))
    e = [err(n) for n in (15, 31, 63)]
    ratios = [e[i] / e[i + 1] for i in range(2)]
    np.testing.assert_allclose(ratios, 4.0, rtol=0.02)


def test_solve_laplacian_inverts():
    mesh = Mesh(2, 9)
    r = np.linspace(-1, 1, mesh.size)
    np.testing.assert_allclose(mesh.laplacian @ mesh.solve_laplacian(r), r, atol=1e-10)


def test_integrals():
    mesh = Mesh(1, 1023)
    phi, _ = first_eigenfunction(mesh)
    assert integrate(phi) == pytest.approx(2 / np.pi, rel=1e-6)
    assert l2_norm_sq(phi) == pytest.approx(0.5, rel=1e-12)
    assert inner(phi, phi) == pytest.approx(l2_norm_sq(phi))


def test_boundary_distance():
    mesh = Mesh(2, 3)
    d = boundary_distance(mesh).values.reshape(3, 3)
    assert d[1, 1] == pytest.approx(0.5)
    assert d[0, 0] == pytest.approx(0.25)
    assert d[0, 1] == pytest.approx(0.25)


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh(4, 8)
    with pytest.raises(ValueError):
        Mesh(1, 2)
    with pytest.raises(ValueError):
        GridFunction(Mesh(1, 5), np.ones(4))


def test_refined_nests_nodes():
    mesh = Mesh(1, 7)
    fine = mesh.refined()
    assert fine.n_per_axis == 15
    np.testing.assert_allclose(fine.axis[1::2], mesh.axis)


@pytest.mark.parametrize("dim", [1, 2])
def test_resample_is_exact_on_nested_nodes(dim):
    mesh = Mesh(dim, 7)
    v, _ = first_eigenfunction(mesh)
    coarse_again = resample(resample(v, mesh.refined()), mesh)
    np.testing.assert_allclose(coarse_again.values, v.values, atol=1e-15)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_csv_round_trip(dim, rng):
    mesh = Mesh(dim, 4)
    v = mesh.field(rng.standard_normal(mesh.size))
    back = from_csv(to_csv(v))
    assert back.mesh == mesh
    np.testing.assert_array_equal(back.values, v.values)


def test_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        from_csv("a,b\n1,2\n")


@given(st.integers(min_value=3, max_value=40), st.floats(min_value=0.01, max_value=100))
@settings(max_examples=40, deadline=None)
def test_h1_norm_homogeneous(n, c):
    mesh = Mesh(1, n)
    v = mesh.field(np.sin(np.arange(1, n + 1)))
    assert h1_norm_sq(v.scaled(c)) == pytest.approx(c * c * h1_norm_sq(v), rel=1e-12)
