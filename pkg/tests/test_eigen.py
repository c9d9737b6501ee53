import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sine_mode
from navierlab import krylov
from navierlab.eigen import (
    check_weight_monotonicity,
    smallest_eigenpairs,
    solve_linear,
    weighted_eigenvalues,
    write_spectrum_csv,
    zero_set_fraction,
)
from navierlab.errors import InvalidArgument, NoConvergence, PreconditionViolation
from navierlab.grid import (
    DTYPE,
    Field,
    SparseOperator,
    biharmonic_matrix,
    build_grid,
    integrate,
    laplacian_matrix,
    stencil_eigenvalues,
)


def tridiag(n):
    m = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    return SparseOperator.from_scipy(m, symmetric=True)


def test_cg_solves_tridiagonal():
    A = tridiag(50)
    b = np.arange(50, dtype=DTYPE)
    x, iters, rel = krylov.cg(A.matvec, b, 1e-14)
    assert rel <= 1e-14
    assert iters <= 60
    assert np.max(np.abs(A.matvec(x) - b)) < 1e-10


def test_cg_zero_rhs():
    x, iters, rel = krylov.cg(tridiag(5).matvec, np.zeros(5), 1e-10)
    assert not x.any() and rel == 0


def test_cg_iteration_cap():
    with pytest.raises(NoConvergence):
        krylov.cg(tridiag(200).matvec, np.ones(200), 1e-14, max_iter=3)


def test_minres_indefinite():
    n = 40
    d = np.linspace(-3, 5, n).astype(DTYPE)
    d[np.abs(d) < 0.1] = 0.5
    A = sp.diags(d) + sp.diags([np.full(n - 1, 0.3)] * 2, [-1, 1])
    A = SparseOperator.from_scipy(sp.csr_matrix(A), symmetric=True)
    b = np.ones(n, dtype=DTYPE)
    x, _, rel = krylov.minres(A.matvec, b, 1e-12)
    assert np.linalg.norm(A.matvec(x) - b) <= 1e-11 * np.linalg.norm(b)


def test_minres_singular_stagnates():
    # singular system with a right-hand side outside the range
    A = SparseOperator.from_scipy(sp.csr_matrix(sp.diags([1.0, 2.0, 0.0, 3.0])), symmetric=True)
    with pytest.raises(NoConvergence):
        krylov.minres(A.matvec, np.ones(4), 1e-12, max_iter=500)


def test_solve_linear_poisson(g31):
    L = laplacian_matrix(g31)
    rhs = Field.constant(g31, 1)
    u = solve_linear(L, rhs, 1e-14)
    assert np.linalg.norm((L @ u).values - 1) <= 1e-13 * np.sqrt(g31.size)
    assert u.values.min() > 0


def test_solve_linear_rejects_tol(g31):
    with pytest.raises(InvalidArgument):
        solve_linear(laplacian_matrix(g31), Field.zeros(g31), 0)


def test_laplacian_eigenpairs_match_closed_form(g31):
    pairs = smallest_eigenpairs(laplacian_matrix(g31), 3, 1e-13)
    exact = np.sort(stencil_eigenvalues(g31).ravel())[:3]
    for pair, lam in zip(pairs, exact):
        assert abs(pair.value - lam) <= 1e-12 * lam
    phi = pairs[0].vector
    assert phi.values.min() > 0
    assert integrate(phi, phi) == pytest.approx(1, rel=1e-13)
    assert abs(integrate(pairs[1].vector, pairs[2].vector)) < 1e-10


def test_eigenpairs_rectangle_distinct():
    g = build_grid(2, 1, 31, 15)
    pairs = smallest_eigenpairs(laplacian_matrix(g), 3, 1e-13)
    exact = np.sort(stencil_eigenvalues(g).ravel())[:3]
    assert np.allclose([float(p.value) for p in pairs], exact.astype(float), rtol=1e-12)


def test_eigenpairs_needs_grid():
    with pytest.raises(InvalidArgument):
        smallest_eigenpairs(tridiag(5), 1)


@pytest.mark.parametrize("k", [0, 10])
def test_eigenpairs_rejects_k(k):
    g = build_grid(1, 1, 3, 3)
    with pytest.raises(InvalidArgument):
        smallest_eigenpairs(laplacian_matrix(g), k)


def test_eigenpairs_deterministic(g31):
    a = smallest_eigenpairs(biharmonic_matrix(g31), 2)
    b = smallest_eigenpairs(biharmonic_matrix(g31), 2)
    assert all(np.array_equal(x.vector.values, y.vector.values) for x, y in zip(a, b))


def test_weighted_constant_weight(g31):
    lam1 = np.sort(stencil_eigenvalues(g31).ravel())[0]
    m = Field.constant(g31, lam1**2)
    spec = weighted_eigenvalues(biharmonic_matrix(g31), m, 2)
    assert abs(spec.values[0] - 1) < 1e-10
    v = spec.vectors[0]
    assert integrate(m * v, v) == pytest.approx(1, rel=1e-12)
    assert float(spec.residuals[0]) < 1e-6


def test_weighted_rejects_nonpositive(g31):
    m = Field.constant(g31, 1.0).values.copy()
    m[5] = 0
    with pytest.raises(InvalidArgument):
        weighted_eigenvalues(biharmonic_matrix(g31), Field(g31, m), 1)


def test_monotonicity_preconditions(g31):
    m = Field.constant(g31, 100.0)
    with pytest.raises(PreconditionViolation):
        check_weight_monotonicity(m, m, 2)
    bigger = m.values.copy()
    bigger[3] = 50
    with pytest.raises(PreconditionViolation):
        check_weight_monotonicity(m, Field(g31, bigger), 2)


def test_monotonicity_local_bump():
    g = build_grid(1, 1, 15, 15)
    m = Field.constant(g, 100.0)
    bump = Field.from_function(g, lambda x, y: 100 + 50 * np.exp(-40 * ((x - 0.3) ** 2 + (y - 0.6) ** 2)))
    rep = check_weight_monotonicity(m, bump, 3)
    assert rep.all_strict


def test_zero_set_fraction(g31):
    assert zero_set_fraction(Field.zeros(g31), 1e-3) == 1.0
    assert zero_set_fraction(sine_mode(g31), 1e-6) == 0.0
    # the (2,1) mode vanishes on the column x = 1/2
    frac = zero_set_fraction(sine_mode(g31, 2, 1), 1e-12)
    assert frac == pytest.approx(1 / 31)


def test_spectrum_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_spectrum_csv(path, [DTYPE(1.5), DTYPE(2)], [DTYPE("1e-12"), DTYPE(0)], ("c",))
    assert path.read_text().splitlines()[:3] == ["# c", "j,mu,residual", "1,1.5e+00,1.e-12"]


@settings(max_examples=8, deadline=None)
@given(scale=st.floats(0.5, 200.0), seed=st.integers(0, 2**16))
def test_weighted_scaling(scale, seed):
    g = build_grid(1, 1, 11, 11)
    rng = np.random.default_rng(seed)
    m = Field(g, 50 + 100 * rng.random(g.size))
    B = biharmonic_matrix(g)
    mu = weighted_eigenvalues(B, m, 2).values
    mu_s = weighted_eigenvalues(B, DTYPE(scale) * m, 2).values
    for a, b in zip(mu, mu_s):
        assert abs(a / DTYPE(scale) - b) <= 1e-10 * b
