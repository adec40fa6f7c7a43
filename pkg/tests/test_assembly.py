import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import dblquad

from axihdiv.assembly import (
    assemble_div,
    assemble_divdiv,
    assemble_lambda,
    assemble_load,
    assemble_mass_c,
    assemble_mass_d,
    grad_h,
    l2r_error,
    lambda_norm,
    write_coo,
)
from axihdiv.mesh import MeshHierarchy, _from_arrays
from axihdiv.spaces import (
    c_local_basis,
    curl_matrix,
    div_k,
    eval_c,
    interp_canonical_c,
)

MODES = [1, 2, -1, -2]


def _one_triangle(tri):
    return _from_arrays(np.asarray(tri, float), [[0, 1, 2]])[0]


def _triangle_integral(tri, f):
    """Adaptive quadrature over a triangle, independent of the library rules."""
    (x0, y0), (x1, y1), (x2, y2) = tri
    J = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))

    def g(t, s):
        return f(x0 + s * (x1 - x0) + t * (x2 - x0), y0 + s * (y1 - y0) + t * (y2 - y0))

    val, _ = dblquad(g, 0, 1, 0, lambda s: 1 - s, epsabs=1e-14, epsrel=1e-13)
    return J * val


@pytest.mark.parametrize("k", [1, -2])
def test_single_triangle_lambda_against_adaptive_oracle(k):
    L = _one_triangle([[0.2, 0.1], [1.0, 0.3], [0.5, 0.9]])
    A = assemble_lambda(L, k).toarray()
    assert A.shape == (4, 4)
    tri = L.coords[0]
    basis = c_local_basis(tri, k)
    # global basis = local basis times the orientation sign of each edge
    signs = np.append(L.tri_signs[0], 1.0)
    perm = np.append(L.tri_edges[0], 3)
    ref = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            gi, gj = basis[i], basis[j]

            def f(r, z):
                return r * (eval_c(gi, k, r, z) @ eval_c(gj, k, r, z))

            m = _triangle_integral(tri, f)
            d = div_k(gi, k) * div_k(gj, k) * _triangle_integral(tri, lambda r, z: r)
            ref[perm[i], perm[j]] = signs[i] * signs[j] * (m + d)
    assert np.abs(A - ref).max() <= 1e-12 * np.abs(ref).max()
    assert np.all(np.linalg.eigvalsh(A) > 0)


def test_mass_d_reference_triangle():
    L = _one_triangle([[0, 0], [1, 0], [0, 1]])
    assert assemble_mass_d(L).toarray()[0, 0] == pytest.approx(1 / 6)


@pytest.mark.parametrize("domain", ["square", "lshape"])
@pytest.mark.parametrize("k", MODES)
def test_lambda_symmetric_positive_definite(domain, k):
    for L in MeshHierarchy.build(domain, 3).levels:
        A = assemble_lambda(L, k)
        assert abs(A - A.T).max() <= 1e-13 * abs(A).max()
        assert np.linalg.eigvalsh(A.toarray()).min() > 0


@pytest.mark.parametrize("domain", ["square", "lshape"])
@pytest.mark.parametrize("k", MODES)
def test_lambda_positive_on_fine_level(domain, k):
    # inverse iteration for the smallest eigenvalue
    from scipy.sparse.linalg import splu
    A = assemble_lambda(MeshHierarchy.build(domain, 5).finest, k)
    lu = splu(A.tocsc())
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    for _ in range(30):
        x = lu.solve(x)
        x /= np.linalg.norm(x)
    assert x @ (A @ x) > 0


@pytest.mark.parametrize("k", MODES)
def test_lambda_equals_mass_plus_schur(k):
    L = MeshHierarchy.build("lshape", 3).finest
    M, B, MD = assemble_mass_c(L, k), assemble_div(L, k), assemble_mass_d(L)
    schur = B.T @ sp.diags(1.0 / MD.diagonal()) @ B
    A = assemble_lambda(L, k)
    assert abs(A - (M + schur)).max() <= 1e-12 * abs(A).max()
    assert abs(assemble_divdiv(L, k) - schur).max() <= 1e-12 * abs(A).max()


@pytest.mark.parametrize("k", [1, -2])
def test_divergence_free_fields(k):
    L = MeshHierarchy.build("square", 3).finest
    u = curl_matrix(L, k) @ np.random.default_rng(1).standard_normal(L.nv + L.ne)
    A, M, B = assemble_lambda(L, k), assemble_mass_c(L, k), assemble_div(L, k)
    assert np.abs(B @ u).max() <= 1e-12 * np.abs(u).max()
    assert u @ (A @ u) == pytest.approx(u @ (M @ u), rel=1e-12)


def test_lambda_is_deterministic():
    L = MeshHierarchy.build("lshape", 3).finest
    A1, A2 = assemble_lambda(L, 2), assemble_lambda(L, 2)
    assert np.array_equal(A1.indptr, A2.indptr)
    assert np.array_equal(A1.indices, A2.indices)
    assert np.array_equal(A1.data, A2.data)


def test_random_quadratic_forms_positive():
    L = MeshHierarchy.build("square", 2).finest
    A = assemble_lambda(L, 1)
    rng = np.random.default_rng(5)
    for _ in range(100):
        u = rng.standard_normal(A.shape[0])
        assert u @ (A @ u) > 0


@pytest.mark.parametrize("k", [1, -2])
def test_load_of_c_h_field_is_mass_times_coeffs(k):
    L = MeshHierarchy.build("lshape", 2).finest
    g = np.array([0.3, -0.4, 0.2, 1.0])

    def F(r, z):
        return eval_c(g, k, r, z)

    c = interp_canonical_c(F, L, k)
    load = assemble_load(L, k, F)
    assert np.abs(load - assemble_mass_c(L, k) @ c).max() <= 1e-12 * np.abs(load).max()
    zero = assemble_load(L, k, lambda r, z: np.zeros((3,) + np.shape(r)))
    assert np.all(zero == 0)
    G2 = lambda r, z: np.stack([np.sin(r), r * z, np.cos(z)])
    both = assemble_load(L, k, lambda r, z: 2 * F(r, z) - 3 * G2(r, z))
    assert np.allclose(both, 2 * load - 3 * assemble_load(L, k, G2), atol=1e-13)


def test_l2r_error_identities():
    k = 2
    L = MeshHierarchy.build("square", 3).finest
    g = np.array([0.3, -0.4, 0.2, 1.0])
    F = lambda r, z: eval_c(g, k, r, z)
    c = interp_canonical_c(F, L, k)
    assert l2r_error(L, "C", c, F, k=k) <= 1e-13
    u = np.random.default_rng(6).standard_normal(L.ne + L.nt)
    M = assemble_mass_c(L, k)
    assert l2r_error(L, "C", u, k=k) == pytest.approx(np.sqrt(u @ (M @ u)), rel=1e-12)
    per = l2r_error(L, "C", u, F, k=k, per_triangle=True)
    assert per.shape == (L.nt,)
    assert np.sqrt(per.sum()) == pytest.approx(l2r_error(L, "C", u, F, k=k), rel=1e-14)


@pytest.mark.parametrize("k", [1, -1])
def test_grad_h_is_adjoint_of_minus_div(k):
    L = MeshHierarchy.build("lshape", 2).finest
    rng = np.random.default_rng(7)
    d = rng.standard_normal(L.nt)
    w = rng.standard_normal(L.ne + L.nt)
    g = grad_h(L, k, d)
    M, B = assemble_mass_c(L, k), assemble_div(L, k)
    assert w @ (M @ g) == pytest.approx(-(d @ (B @ w)), rel=1e-10)


def test_lambda_norm_and_coo(tmp_path):
    A = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert lambda_norm(A, np.array([1.0, 1.0])) == pytest.approx(np.sqrt(2.0))
    path = tmp_path / "a.coo"
    write_coo(A, path)
    rows = [line.split() for line in path.read_text().splitlines()]
    assert rows[0] == ["0", "0", "2.0"]
    back = sp.coo_matrix(
        ([float(r[2]) for r in rows], ([int(r[0]) for r in rows], [int(r[1]) for r in rows]))
    )
    assert np.array_equal(back.toarray(), A.toarray())
