"""Rectangle grids, grid functions and the discrete Dirichlet/Navier operators.

Everything numerical runs in ``np.longdouble``.  The Navier biharmonic matrix
is ``L @ L`` and has entries of order ``64 / h**4``; in double precision the
residual of an exactly sampled eigenfunction already sits near ``1e-7`` on a
63 x 63 grid, so the extra precision is needed to resolve ``1e-8`` residuals.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft
import scipy.sparse as sp

from .errors import InvalidArgument

DTYPE = np.longdouble
PI = DTYPE("3.14159265358979323846264338327950288")


@dataclass(frozen=True)
class Grid2D:
    """Interior nodes of the rectangle ``[0, a] x [0, b]``; boundary values are zero."""

    a: float
    b: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidArgument(f"rectangle sides must be positive, got a={self.a}, b={self.b}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise InvalidArgument(f"need nx, ny >= 1, got nx={self.nx}, ny={self.ny}")

    @property
    def hx(self):
        return DTYPE(self.a) / (self.nx + 1)

    @property
    def hy(self):
        return DTYPE(self.b) / (self.ny + 1)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of the row-major layout: one row per y-line."""
        return (self.ny, self.nx)

    def coordinates(self):
        """Return (X, Y) flattened in storage order."""
        x = np.arange(1, self.nx + 1, dtype=DTYPE) * self.hx
        y = np.arange(1, self.ny + 1, dtype=DTYPE) * self.hy
        Y, X = np.meshgrid(y, x, indexing="ij")
        return X.ravel(), Y.ravel()

    def refined(self) -> "Grid2D":
        """Grid with halved spacings on the same rectangle."""
        return Grid2D(self.a, self.b, 2 * self.nx + 1, 2 * self.ny + 1)


def build_grid(a: float, b: float, nx: int, ny: int) -> Grid2D:
    return Grid2D(a, b, nx, ny)


@dataclass(frozen=True, eq=False)
class Field:
    """Samples of a grid function on interior nodes, node (i, j) at index (j-1)*nx + (i-1)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=DTYPE).reshape(-1)
        if vals.shape[0] != self.grid.size:
            raise InvalidArgument(f"field has {vals.shape[0]} values, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field":
        return cls(grid, np.zeros(grid.size, dtype=DTYPE))

    @classmethod
    def constant(cls, grid: Grid2D, c) -> "Field":
        return cls(grid, np.full(grid.size, DTYPE(c), dtype=DTYPE))

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable) -> "Field":
        X, Y = grid.coordinates()
        return cls(grid, fn(X, Y))

    def _other(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return other.values
        return DTYPE(other)

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __pow__(self, q):
        return Field(self.grid, self.values ** DTYPE(q))

    def positive_part(self) -> "Field":
        return Field(self.grid, np.maximum(self.values, 0))

    def sup_norm(self):
        return np.max(np.abs(self.values))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def __repr__(self):
        return f"Field(grid={self.grid!r}, sup={float(self.sup_norm()):.6g})"


def _check_same_grid(u: Field, v: Field):
    if u.grid != v.grid:
        raise InvalidArgument(f"grid mismatch: {u.grid} vs {v.grid}")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Square sparse matrix in CSR layout.

    ``grid`` ties the operator to the grid its vectors live on, and
    ``preconditioner`` is an optional SPD approximate inverse used by the
    Krylov solvers when no explicit one is given.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    symmetric: bool = False
    grid: Optional[Grid2D] = None
    preconditioner: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        data = np.asarray(self.data, dtype=DTYPE)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise InvalidArgument("malformed row-pointer array")
        if np.any(np.diff(indptr) < 0):
            raise InvalidArgument("row pointers must be non-decreasing")
        if len(data) != len(indices):
            raise InvalidArgument("value and column arrays differ in length")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n):
            raise InvalidArgument("column index out of range")
        for row in range(self.n):
            cols = indices[indptr[row]:indptr[row + 1]]
            if np.any(np.diff(cols) <= 0):
                raise InvalidArgument(f"column indices not strictly increasing in row {row}")
        if self.grid is not None and self.grid.size != self.n:
            raise InvalidArgument("operator dimension does not match grid")
        for arr in (indptr, indices, data):
            arr.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        if self.symmetric:
            m = self.csr
            diff = m - m.T
            if diff.count_nonzero() != 0:
                raise InvalidArgument("symmetry flag set but matrix is not exactly symmetric")

    @classmethod
    def from_scipy(cls, m, symmetric=False, grid=None, preconditioner=None) -> "SparseOperator":
        m = sp.csr_matrix(m, dtype=DTYPE)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.indptr, m.indices, m.data, symmetric, grid, preconditioner)

    @functools.cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def matvec(self, x):
        if isinstance(x, Field):
            if self.grid is not None and x.grid != self.grid:
                raise InvalidArgument(f"grid mismatch: operator on {self.grid}, field on {x.grid}")
            return Field(x.grid, self.csr @ x.values)
        return self.csr @ np.asarray(x, dtype=DTYPE)

    __matmul__ = matvec

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.indptr)

    def inf_norm(self):
        return np.max(np.abs(self.csr).sum(axis=1))

    def with_diagonal_shift(self, d, preconditioner=None) -> "SparseOperator":
        """Return ``A - diag(d)``; keeps the symmetry flag."""
        d = np.broadcast_to(np.asarray(d, dtype=DTYPE), (self.n,))
        m = self.csr - sp.diags(d, 0, format="csr", dtype=DTYPE)
        return SparseOperator.from_scipy(m, self.symmetric, self.grid, preconditioner)


def _second_difference(n: int, h):
    main = np.full(n, 2 / h**2, dtype=DTYPE)
    off = np.full(n - 1, -1 / h**2, dtype=DTYPE)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr", dtype=DTYPE)


@functools.lru_cache(maxsize=16)
def laplacian_matrix(grid: Grid2D) -> SparseOperator:
    """5-point approximation of -Δ with homogeneous Dirichlet data."""
    Tx = _second_difference(grid.nx, grid.hx)
    Ty = _second_difference(grid.ny, grid.hy)
    Ix = sp.identity(grid.nx, dtype=DTYPE, format="csr")
    Iy = sp.identity(grid.ny, dtype=DTYPE, format="csr")
    m = sp.kron(Iy, Tx, format="csr") + sp.kron(Ty, Ix, format="csr")
    return SparseOperator.from_scipy(m, symmetric=True, grid=grid, preconditioner=fast_inverse(grid, 1))


@functools.lru_cache(maxsize=16)
def biharmonic_matrix(grid: Grid2D) -> SparseOperator:
    """Navier biharmonic operator, defined as the exact product ``L @ L``."""
    lap = laplacian_matrix(grid).csr
    m = lap @ lap
    return SparseOperator.from_scipy(m, symmetric=True, grid=grid, preconditioner=fast_inverse(grid, 2))


def stencil_eigenvalues(grid: Grid2D) -> np.ndarray:
    """Closed-form eigenvalues of the 5-point Laplacian, shaped like ``grid.shape``."""
    i = np.arange(1, grid.nx + 1, dtype=DTYPE)
    j = np.arange(1, grid.ny + 1, dtype=DTYPE)
    ex = 4 / grid.hx**2 * np.sin(i * PI / (2 * (grid.nx + 1))) ** 2
    ey = 4 / grid.hy**2 * np.sin(j * PI / (2 * (grid.ny + 1))) ** 2
    return ey[:, None] + ex[None, :]


def fast_inverse(grid: Grid2D, power: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """Apply ``L**-power`` by diagonalizing with the orthonormal DST-I.

    Exactly symmetric positive-definite in exact arithmetic, which makes it a
    safe preconditioner for CG and MINRES.
    """
    scale = stencil_eigenvalues(grid) ** power

    def apply(v):
        arr = np.asarray(v, dtype=DTYPE).reshape(grid.shape)
        coef = scipy.fft.dstn(arr, type=1, norm="ortho")
        return scipy.fft.idstn(coef / scale, type=1, norm="ortho").reshape(-1)

    return apply


def integrate(u: Field, v: Field):
    """Interior-node rectangle rule for the integral of ``u * v``."""
    _check_same_grid(u, v)
    g = u.grid
    return g.hx * g.hy * np.dot(u.values, v.values)


def lp_norm(u: Field, q):
    if q == math.inf or q == np.inf:
        return np.max(np.abs(u.values)) if u.values.size else DTYPE(0)
    if q < 1:
        raise InvalidArgument(f"lp_norm needs q >= 1, got {q}")
    g = u.grid
    q = DTYPE(q)
    if q == 2:
        return np.sqrt(g.hx * g.hy * np.dot(u.values, u.values))
    return (g.hx * g.hy * np.sum(np.abs(u.values) ** q)) ** (1 / q)


def normalize_l2(u: Field) -> Field:
    """Scale to unit quadrature L2-norm with a positive maximum entry."""
    nrm = lp_norm(u, 2)
    if nrm == 0:
        raise InvalidArgument("cannot normalize the zero field")
    v = u.values / nrm
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return Field(u.grid, v)


def gradient_magnitude(u: Field) -> Field:
    """Central-difference |∇u| at interior nodes, zero boundary values padded in."""
    g = u.grid
    arr = np.pad(u.as_array(), 1)
    dx = (arr[1:-1, 2:] - arr[1:-1, :-2]) / (2 * g.hx)
    dy = (arr[2:, 1:-1] - arr[:-2, 1:-1]) / (2 * g.hy)
    return Field(g, np.sqrt(dx**2 + dy**2).reshape(-1))


def format_real(x) -> str:
    return np.format_float_scientific(DTYPE(x), unique=True)


def write_field_csv(u: Field, path, comments: tuple[str, ...] = ()) -> None:
    g = u.grid
    X, Y = g.coordinates()
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "x", "y", "value"])
        for k, val in enumerate(u.values):
            j, i = divmod(k, g.nx)
            w.writerow([i + 1, j + 1, format_real(X[k]), format_real(Y[k]), format_real(val)])


def read_field_csv(path, grid: Grid2D) -> Field:
    """Read a field written by ``write_field_csv``; rows may come in any order."""
    path = Path(path)
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if len(rows) != grid.size:
        raise InvalidArgument(f"{path}: expected {grid.size} rows, found {len(rows)}")
    vals = np.zeros(grid.size, dtype=DTYPE)
    seen = np.zeros(grid.size, dtype=bool)
    for row in rows:
        i, j = int(row["i"]), int(row["j"])
        if not (1 <= i <= grid.nx and 1 <= j <= grid.ny):
            raise InvalidArgument(f"{path}: node ({i}, {j}) outside grid")
        k = (j - 1) * grid.nx + (i - 1)
        vals[k] = DTYPE(row["value"])
        seen[k] = True
    if not seen.all():
        raise InvalidArgument(f"{path}: missing nodes")
    return Field(grid, vals)
