import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sine_mode
from navierlab.errors import InvalidArgument
from navierlab.grid import (
    DTYPE,
    Field,
    SparseOperator,
    biharmonic_matrix,
    build_grid,
    gradient_magnitude,
    integrate,
    laplacian_matrix,
    lp_norm,
    normalize_l2,
    read_field_csv,
    stencil_eigenvalues,
    write_field_csv,
)


def stencil_lambda1(n):
    h = mpmath.mpf(1) / (n + 1)
    return 8 / h**2 * mpmath.sin(mpmath.pi * h / 2) ** 2


def test_build_grid_spacings():
    g = build_grid(1, 1, 3, 3)
    assert g.size == 9
    assert g.hx == 0.25 and g.hy == 0.25
    g = build_grid(2, 1, 7, 3)
    assert (g.hx, g.hy) == (0.25, 0.25)


@pytest.mark.parametrize("args", [(1, 1, 0, 3), (0, 1, 3, 3), (1, -1, 3, 3), (1, 1, 3, 0)])
def test_build_grid_rejects(args):
    with pytest.raises(InvalidArgument):
        build_grid(*args)


def test_node_coordinates_row_major():
    g = build_grid(2, 1, 7, 3)
    X, Y = g.coordinates()
    # node (i, j) = (2, 1) sits at index 1, node (1, 2) at index nx
    assert (X[1], Y[1]) == (0.5, 0.25)
    assert (X[7], Y[7]) == (0.25, 0.5)


def test_laplacian_stencil_entries():
    L = laplacian_matrix(build_grid(1, 1, 3, 3))
    A = L.csr.toarray()
    assert np.all(np.diag(A) == 64)
    off = A[~np.eye(9, dtype=bool)]
    assert set(np.unique(off)) == {0, -16}
    # centre node has four neighbours, corner node two
    assert np.count_nonzero(A[4]) == 5
    assert np.count_nonzero(A[0]) == 3


def test_laplacian_anisotropic_entries():
    g = build_grid(2, 1, 7, 3)
    A = laplacian_matrix(g).csr.toarray()
    hx, hy = float(g.hx), float(g.hy)
    assert A[9, 9] == pytest.approx(2 / hx**2 + 2 / hy**2)
    assert A[9, 10] == pytest.approx(-1 / hx**2)
    assert A[9, 9 + 7] == pytest.approx(-1 / hy**2)


def test_operators_exactly_symmetric(g31):
    for op in (laplacian_matrix(g31), biharmonic_matrix(g31)):
        m = op.csr
        assert op.symmetric
        assert (m != m.T).nnz == 0


def test_laplacian_reproduces_stencil_eigenpair():
    g = build_grid(1, 1, 31, 31)
    v = sine_mode(g)
    lam = DTYPE(str(stencil_lambda1(31)))
    Lv = laplacian_matrix(g) @ v
    rel = np.abs(Lv.values - lam * v.values) / np.abs(lam * v.values)
    assert rel.max() < 1e-10


def test_biharmonic_squares_eigenpair():
    g = build_grid(1, 1, 31, 31)
    v = sine_mode(g)
    lam = DTYPE(str(stencil_lambda1(31)))
    Bv = biharmonic_matrix(g) @ v
    rel = np.abs(Bv.values - lam**2 * v.values) / np.abs(lam**2 * v.values)
    assert rel.max() < 1e-10


def test_biharmonic_structure(g31):
    B = biharmonic_matrix(g31)
    assert np.all(B.diagonal() > 0)
    assert B.row_nnz().max() <= 13
    # an interior node far from the boundary carries the full 13-point stencil
    k = 15 * 31 + 15
    assert B.row_nnz()[k] == 13


def test_biharmonic_is_laplacian_squared(g31):
    rng = np.random.default_rng(3)
    L, B = laplacian_matrix(g31), biharmonic_matrix(g31)
    Lnorm = L.inf_norm()
    for _ in range(100):
        v = rng.standard_normal(g31.size).astype(DTYPE)
        err = np.max(np.abs(B @ v - L @ (L @ v)))
        assert err < 1e-12 * np.max(np.abs(v)) * Lnorm**2


def test_stencil_eigenvalue_closed_form():
    g = build_grid(1, 1, 31, 31)
    lam = np.sort(stencil_eigenvalues(g).ravel())
    assert float(lam[0]) == pytest.approx(float(stencil_lambda1(31)), rel=1e-15)
    assert lam[1] == pytest.approx(lam[2], rel=1e-15)


def test_integrate_and_norms(g31):
    one = Field.constant(g31, 1)
    assert integrate(Field.zeros(g31), sine_mode(g31)) == 0
    assert integrate(one, one) == g31.hx * g31.hy * 31 * 31
    assert float(integrate(one, one)) == pytest.approx((31 / 32) ** 2, rel=1e-15)
    assert lp_norm(one, 3) == pytest.approx((g31.hx * g31.hy * 961) ** (1 / DTYPE(3)), rel=1e-15)
    assert lp_norm(Field.zeros(g31), 2.5) == 0
    assert lp_norm(one, math.inf) == 1


def test_normalize_l2(g31):
    phi = normalize_l2(-3 * sine_mode(g31))
    assert integrate(phi, phi) == pytest.approx(1, rel=1e-15)
    assert phi.values.max() > 0


def test_lp_norm_rejects_small_q(g31):
    with pytest.raises(InvalidArgument):
        lp_norm(Field.zeros(g31), 0.5)


def test_integrate_grid_mismatch(g31):
    with pytest.raises(InvalidArgument):
        integrate(Field.zeros(g31), Field.zeros(build_grid(1, 1, 7, 7)))


def test_field_validation(g31):
    with pytest.raises(InvalidArgument):
        Field(g31, np.zeros(5))
    bad = np.zeros(g31.size)
    bad[0] = np.nan
    with pytest.raises(InvalidArgument):
        Field(g31, bad)
    f = Field.zeros(g31)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_sparse_operator_invariants():
    with pytest.raises(InvalidArgument):
        SparseOperator(2, [0, 2, 3], [1, 0, 1], [1.0, 2.0, 3.0])  # unsorted columns in row 0
    with pytest.raises(InvalidArgument):
        SparseOperator(2, [0, 2, 1], [0, 1, 1], [1.0, 2.0, 3.0])
    with pytest.raises(InvalidArgument):
        SparseOperator(2, [0, 2, 3], [0, 1, 1], [1.0, 2.0, 3.0], symmetric=True)  # (0,1) != (1,0)
    ok = SparseOperator(2, [0, 2, 4], [0, 1, 0, 1], [2.0, 1.0, 1.0, 2.0], symmetric=True)
    assert list(ok.matvec(np.array([1.0, 1.0]))) == [3.0, 3.0]


def test_second_order_refinement():
    """Discrete λ₁ approaches 2π² with error ratio near 4 under mesh doubling."""
    errs = [2 * mpmath.pi**2 - stencil_lambda1(n) for n in (15, 31, 63)]
    for coarse, fine in zip(errs, errs[1:]):
        assert float(coarse / fine) == pytest.approx(4, rel=0.01)


def test_field_csv_roundtrip(tmp_path, g31):
    u = sine_mode(g31, 2, 3) * DTYPE("0.123456789012345678")
    path = tmp_path / "u.csv"
    write_field_csv(u, path, ("note",))
    text = path.read_text().splitlines()
    assert text[0] == "# note" and text[1] == "i,j,x,y,value"
    assert text[3].startswith("2,1,")
    v = read_field_csv(path, g31)
    assert np.array_equal(u.values, v.values)


def test_gradient_magnitude_linear_profile():
    g = build_grid(1, 1, 15, 15)
    u = Field.from_function(g, lambda x, y: x * (1 - x))
    grad = gradient_magnitude(u).as_array()
    X, _ = g.coordinates()
    expected = np.abs(1 - 2 * X).reshape(g.shape)
    # central differences are exact for quadratics in the interior
    assert np.allclose(grad[1:-1, :], expected[1:-1, :], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(c=st.floats(-1e3, 1e3, allow_nan=False), q=st.sampled_from([1.0, 1.5, 2.0, 3.0, 8.5]))
def test_lp_norm_homogeneous(c, q):
    g = build_grid(1, 2, 5, 4)
    u = Field(g, np.linspace(-1, 2, g.size))
    lhs = lp_norm(c * u, q)
    rhs = abs(DTYPE(c)) * lp_norm(u, q)
    assert abs(lhs - rhs) <= 1e-14 * max(rhs, 1e-300)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10))
def test_integrate_bilinear(a, b):
    g = build_grid(1, 1, 6, 5)
    rng = np.random.default_rng(0)
    u, v, w = (Field(g, rng.standard_normal(g.size)) for _ in range(3))
    lhs = integrate(a * u + b * v, w)
    rhs = DTYPE(a) * integrate(u, w) + DTYPE(b) * integrate(v, w)
    assert abs(lhs - rhs) <= 1e-15 * (abs(a) + abs(b) + 1) * 10
    assert lp_norm(u, 2) ** 2 == pytest.approx(integrate(u, u), rel=1e-14)
