"""Linear solves, smallest eigenpairs and weighted biharmonic spectra."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import krylov
from .errors import InvalidArgument, NoConvergence, PreconditionViolation
from .grid import DTYPE, Field, SparseOperator, biharmonic_matrix, format_real

_START_SEED = 20240611


@dataclass(frozen=True)
class EigenPair:
    value: np.longdouble
    vector: Field
    residual: np.longdouble


@dataclass(frozen=True)
class WeightedSpectrum:
    weight: Field
    values: tuple
    vectors: tuple
    residuals: tuple

    def to_csv(self, path, comments=()):
        write_spectrum_csv(path, self.values, self.residuals, comments)


@dataclass(frozen=True)
class MonotonicityReport:
    mu_m: tuple
    mu_m_tilde: tuple
    gaps: tuple
    strict: tuple

    @property
    def all_strict(self) -> bool:
        return all(self.strict)


def _require_grid(A: SparseOperator):
    if A.grid is None:
        raise InvalidArgument("operator carries no grid; cannot build fields")
    return A.grid


def solve_linear(A: SparseOperator, rhs: Field, tol: float = 1e-12, *, precond=None, max_iter=None) -> Field:
    """Conjugate gradients for SPD ``A``; ``||A u - rhs|| <= tol * ||rhs||``."""
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    x, _, _ = krylov.cg(A.matvec, rhs.values, tol, precond or A.preconditioner, max_iter)
    return Field(rhs.grid, x)


def _orthonormalize(cols: np.ndarray) -> np.ndarray:
    """Twice-repeated modified Gram-Schmidt on the columns (dtype preserved)."""
    Q = np.array(cols, copy=True)
    for _ in range(2):
        for j in range(Q.shape[1]):
            for i in range(j):
                Q[:, j] -= np.dot(Q[:, i], Q[:, j]) * Q[:, i]
            Q[:, j] /= np.linalg.norm(Q[:, j])
    return Q


def _block_size(k: int, n: int) -> int:
    return min(n, k + 3)


def smallest_eigenpairs(A: SparseOperator, k: int, tol: float = 1e-12, *, precond=None, max_iter: int = 400):
    """The ``k`` smallest eigenpairs of an SPD operator.

    Block inverse iteration on ``k + 3`` vectors with a Rayleigh-Ritz step
    each sweep, so clustered or repeated eigenvalues share one subspace and
    converge at the rate ``λ_j / λ_{k+4}``.  The small projected problem is
    diagonalized in double precision; the Ritz vectors themselves are formed
    in the working dtype.  Convergence: ``||A v - λ v|| <= tol * λ`` for unit
    ``v`` and every one of the ``k`` wanted pairs.
    """
    grid = _require_grid(A)
    if k < 1 or k > A.n:
        raise InvalidArgument(f"need 1 <= k <= {A.n}, got k={k}")
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    M = precond or A.preconditioner
    m = _block_size(k, A.n)
    rng = np.random.default_rng(_START_SEED)
    X = rng.standard_normal((A.n, m)).astype(DTYPE)
    X[:, 0] = 1 + DTYPE(0.01) * X[:, 0]
    X = _orthonormalize(X)
    inner_tol = max(tol * 0.1, 1e-13)
    best = np.inf

    for _ in range(max_iter):
        Y = np.empty_like(X)
        for j in range(m):
            Y[:, j], _, _ = krylov.cg(A.matvec, X[:, j], inner_tol, M)
        Y = _orthonormalize(Y)
        AY = np.column_stack([A.matvec(Y[:, j]) for j in range(m)])
        H = Y.T @ AY
        _, Q = np.linalg.eigh(((H + H.T) / 2).astype(np.float64))
        Q = Q.astype(DTYPE)
        X, AX = Y @ Q, AY @ Q
        norms = np.linalg.norm(X, axis=0)
        X, AX = X / norms, AX / norms
        lam = np.einsum("ij,ij->j", X, AX)
        res = np.linalg.norm(AX - X * lam, axis=0)
        rel = res[:k] / np.abs(lam[:k])
        best = min(best, float(rel.max()))
        if np.all(rel <= tol):
            break
    else:
        raise NoConvergence(f"{k} eigenpairs did not converge in {max_iter} sweeps", best)

    order = np.argsort(lam[:k].astype(np.float64), kind="stable")
    scale = 1 / np.sqrt(grid.hx * grid.hy)
    pairs = []
    for rank, idx in enumerate(order):
        v = X[:, idx] * scale
        if rank == 0 and v[np.argmax(np.abs(v))] < 0:
            v = -v
        # residual reported for the quadrature-normalized vector
        pairs.append(EigenPair(lam[idx], Field(grid, v), res[idx] * scale))
    return pairs


def weighted_operator(B: SparseOperator, m: Field) -> SparseOperator:
    """``D^{-1/2} B D^{-1/2}`` with ``D = diag(m)``, symmetric bit-exactly."""
    d = np.sqrt(m.values)
    coo = B.csr.tocoo()
    data = coo.data / (d[coo.row] * d[coo.col])
    C = sp.csr_matrix((data, (coo.row, coo.col)), shape=B.csr.shape)
    base = B.preconditioner
    pre = None if base is None else (lambda v: d * base(d * v))
    return SparseOperator.from_scipy(C, symmetric=B.symmetric, grid=B.grid, preconditioner=pre)


def _check_weight(m: Field):
    if np.any(m.values <= 0):
        raise InvalidArgument("weight must be strictly positive on every interior node")


def weighted_eigenvalues(B: SparseOperator, m: Field, k: int, tol: float = 1e-12) -> WeightedSpectrum:
    """Smallest eigenvalues of ``B v = μ m v`` for a positive weight ``m``.

    Vectors are returned in original coordinates and satisfy
    ``integrate(m * v_i, v_j) = δ_ij``.
    """
    _check_weight(m)
    if B.grid is not None and m.grid != B.grid:
        raise InvalidArgument("weight lives on a different grid than the operator")
    C = weighted_operator(B, m)
    pairs = smallest_eigenpairs(C, k, tol)
    d = np.sqrt(m.values)
    vectors, residuals = [], []
    for pair in pairs:
        v = Field(m.grid, pair.vector.values / d)
        vectors.append(v)
        r = B.matvec(v.values) - pair.value * m.values * v.values
        residuals.append(np.sqrt(m.grid.hx * m.grid.hy * np.dot(r, r)))
    return WeightedSpectrum(m, tuple(p.value for p in pairs), tuple(vectors), tuple(residuals))


def check_weight_monotonicity(m: Field, m_tilde: Field, k: int, B: SparseOperator | None = None,
                              tol: float = 1e-12) -> MonotonicityReport:
    """Compare μ_j(m) and μ_j(m̃) for ``m <= m̃`` with strict inequality somewhere."""
    _check_weight(m)
    _check_weight(m_tilde)
    if m.grid != m_tilde.grid:
        raise InvalidArgument("weights live on different grids")
    if np.any(m.values > m_tilde.values):
        raise PreconditionViolation("m <= m_tilde fails on some node")
    if not np.any(m.values < m_tilde.values):
        raise PreconditionViolation("weights coincide; strict inequality needed on at least one node")
    B = B if B is not None else biharmonic_matrix(m.grid)
    mu = weighted_eigenvalues(B, m, k, tol).values
    mu_t = weighted_eigenvalues(B, m_tilde, k, tol).values
    gaps = tuple(a - b for a, b in zip(mu, mu_t))
    return MonotonicityReport(mu, mu_t, gaps, tuple(bool(g > 0) for g in gaps))


def zero_set_fraction(v: Field, eps_rel: float) -> float:
    """Fraction of nodes where ``|v| <= eps_rel * max|v|``; the zero field gives 1."""
    if eps_rel < 0:
        raise InvalidArgument("eps_rel must be nonnegative")
    a = np.abs(v.values)
    vmax = a.max()
    if vmax == 0:
        return 1.0
    return float(np.count_nonzero(a <= eps_rel * vmax)) / a.size


def write_spectrum_csv(path, values, residuals, comments=()):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "mu", "residual"])
        for j, (mu, res) in enumerate(zip(values, residuals), start=1):
            w.writerow([j, format_real(mu), format_real(res)])
