"""A priori estimate bookkeeping for (−Δ)²u = λ₁²u + u₊ᵖ + f.

The analysis dimension ``N`` only enters the closed-form exponent formulas and
the hypothesis window; PDE experiments run on 2D grids regardless.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from .eigen import smallest_eigenpairs
from .errors import HypothesisViolation, InternalConsistencyError, InvalidArgument
from .grid import DTYPE, Field, Grid2D, biharmonic_matrix, integrate, laplacian_matrix, lp_norm

IDENTITY_TOL = 1e-12
BASE_EIGEN_TOL = 1e-14


@dataclass(frozen=True)
class HypothesisReport:
    N: int
    p: float
    r: float
    p_lower: float
    p_upper: float
    r_lower: float
    dimension_ok: bool
    p_ok: bool
    r_ok: bool

    @property
    def passed(self) -> bool:
        return self.dimension_ok and self.p_ok and self.r_ok

    def failures(self) -> list[str]:
        out = []
        if not self.dimension_ok:
            out.append(f"dimension N={self.N} must exceed 5")
        if not self.p_ok:
            out.append(f"p={self.p} outside ({self.p_lower:g}, {self.p_upper:g})")
        if not self.r_ok:
            out.append(f"r={self.r} must exceed N/3={self.r_lower:g}")
        return out


def p_window(N: int) -> tuple[float, float]:
    """Open interval max{1, 4/(N-4)} < p < (N+1)/(N-3); meaningful for N > 5."""
    lower = max(1.0, 4.0 / (N - 4)) if N != 4 else math.inf
    upper = (N + 1) / (N - 3) if N != 3 else math.inf
    return lower, upper


def check_hypotheses(N: int, p: float, r: float) -> HypothesisReport:
    lower, upper = p_window(N)
    return HypothesisReport(
        N=N, p=p, r=r, p_lower=lower, p_upper=upper, r_lower=N / 3,
        dimension_ok=N > 5,
        p_ok=N > 5 and lower < p < upper,
        r_ok=r > N / 3,
    )


@dataclass(frozen=True)
class ExponentBundle:
    N: int
    p: float
    s: float
    L: float
    alpha: float
    tau: float
    t: float
    theta: float
    theta_conj: float

    def identity_errors(self) -> dict[str, float]:
        return {
            "sobolev": abs(1 / self.t - (1 / self.s - (4 - self.tau) / self.N)),
            "t_alpha": abs(self.t - (self.p + 1 / (1 - self.alpha))),
            "tau_t": abs(self.tau * self.t - self.alpha / (1 - self.alpha)),
        }


def exponent_bundle(N: int, p: float) -> ExponentBundle:
    """Exponents of the Hölder/Hardy–Sobolev chain with ``s = (p+1)/p``."""
    rep = check_hypotheses(N, p, math.inf)
    if not rep.passed:
        raise InvalidArgument("; ".join(rep.failures()))
    s = (p + 1) / p
    L = p / (p + 1) - 4 / N
    num = N - N * L - N * L * p
    alpha = num / (1 + N - p * L * N)
    tau = num / (1 + N + p)
    t = (1 + N + p) / (1 + N * L)
    theta = 1 / ((p * (1 - alpha) + 1) * p / (p + 1))
    b = ExponentBundle(N, p, s, L, alpha, tau, t, theta, theta / (theta - 1) if theta > 1 else math.inf)

    problems = []
    if not L > 0:
        problems.append(f"L={L} not positive")
    if not 0 < alpha < 1:
        problems.append(f"alpha={alpha} outside (0,1)")
    if not 0 <= tau <= 1:
        problems.append(f"tau={tau} outside [0,1]")
    if not theta > 1:
        problems.append(f"theta={theta} not above 1")
    for name, err in b.identity_errors().items():
        if not err <= IDENTITY_TOL * max(1.0, b.t):
            problems.append(f"identity {name} off by {err:.3e}")
    if problems:
        raise InternalConsistencyError(f"exponent bundle (N={N}, p={p}): " + "; ".join(problems))
    return b


BUNDLE_COLUMNS = ["N", "p", "r", "s", "L", "alpha", "tau", "t", "theta", "pass"]


def bundle_row(N: int, p: float, r: float) -> dict:
    """One row of the hypothesis/bundle table; bundle fields empty on failure."""
    rep = check_hypotheses(N, p, r)
    row = {"N": N, "p": repr(float(p)), "r": repr(float(r)), "pass": int(rep.passed)}
    try:
        b = exponent_bundle(N, p)
    except InvalidArgument:
        row.update({k: "" for k in ("s", "L", "alpha", "tau", "t", "theta")})
    else:
        row.update({k: repr(getattr(b, k)) for k in ("s", "L", "alpha", "tau", "t", "theta")})
    return row


def write_bundle_csv(path, rows, comments=()):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=BUNDLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


@dataclass(frozen=True)
class BaseSpectrum:
    """First two Dirichlet eigenvalues and the normalized positive eigenfunction."""

    lam1: np.longdouble
    lam2: np.longdouble
    phi1: Field

    @property
    def lam1_sq(self):
        return self.lam1**2

    @property
    def lam2_sq(self):
        return self.lam2**2


@functools.lru_cache(maxsize=16)
def base_spectrum(grid: Grid2D, tol: float = BASE_EIGEN_TOL) -> BaseSpectrum:
    pairs = smallest_eigenpairs(laplacian_matrix(grid), 2, tol)
    return BaseSpectrum(pairs[0].value, pairs[1].value, pairs[0].vector)


@dataclass(frozen=True)
class ProblemSpec:
    """Validated data of (−Δ)²u = λ₁²u + u₊ᵖ + f with Navier conditions."""

    N: int
    p: float
    r: float
    f: Field
    lam1_sq: np.longdouble
    lam2_sq: np.longdouble
    phi1: Field

    def __post_init__(self):
        rep = check_hypotheses(self.N, self.p, self.r)
        if not rep.passed:
            raise HypothesisViolation("; ".join(rep.failures()))
        if self.f.grid != self.phi1.grid:
            raise InvalidArgument("forcing and eigenfunction live on different grids")
        if not self.lam2_sq > self.lam1_sq > 0:
            raise InvalidArgument("need 0 < λ₁² < λ₂²")
        if not sign_condition(self.f, self.phi1) < 0:
            raise HypothesisViolation("sign condition ∫ f φ₁ < 0 violated")

    @property
    def grid(self) -> Grid2D:
        return self.f.grid

    @property
    def B(self):
        return biharmonic_matrix(self.grid)

    def with_forcing(self, f: Field) -> "ProblemSpec":
        return replace(self, f=f)


def make_problem(grid: Grid2D, N: int, p: float, r: float, forcing) -> ProblemSpec:
    """Build a ProblemSpec; ``forcing`` is a Field or a callable ``phi1 -> Field``."""
    base = base_spectrum(grid)
    f = forcing(base.phi1) if callable(forcing) else forcing
    return ProblemSpec(N, p, r, f, base.lam1_sq, base.lam2_sq, base.phi1)


@dataclass(frozen=True)
class Decomposition:
    t: np.longdouble
    u1: Field


def decompose(u: Field, phi1: Field) -> Decomposition:
    """Split ``u = t φ₁ + u₁`` with ``∫ u₁ φ₁ = 0`` (``φ₁`` unit-normalized)."""
    t = integrate(u, phi1)
    return Decomposition(t, u - t * phi1)


def sign_condition(f: Field, phi1: Field):
    return integrate(f, phi1)


def resonance_identity_residual(u: Field, spec: ProblemSpec):
    """``|∫ u₊ᵖ φ₁ + ∫ f φ₁|``, which vanishes for exact solutions."""
    up = u.positive_part() ** spec.p
    return abs(integrate(up, spec.phi1) + integrate(spec.f, spec.phi1))


def w4s_norm(u: Field, s: float):
    """Discrete stand-in for the W^{4,s} norm: ‖u‖ + ‖Lu‖ + ‖Bu‖ in L^s."""
    g = u.grid
    return lp_norm(u, s) + lp_norm(laplacian_matrix(g) @ u, s) + lp_norm(biharmonic_matrix(g) @ u, s)


def hardy_sobolev_ratio(u: Field, phi1: Field, bundle: ExponentBundle, grid: Grid2D | None = None):
    """``‖u/φ₁^τ‖_{L^t} / ‖u‖_{W^{4,s}}`` with exponents from ``bundle``."""
    grid = grid or u.grid
    if u.grid != grid or phi1.grid != grid:
        raise InvalidArgument("fields must live on the given grid")
    if not np.any(u.values != 0):
        raise InvalidArgument("hardy_sobolev_ratio is undefined for the zero field")
    if np.any(phi1.values <= 0):
        raise InvalidArgument("φ₁ must be positive on interior nodes")
    weighted = Field(grid, u.values / phi1.values ** DTYPE(bundle.tau))
    return lp_norm(weighted, bundle.t) / w4s_norm(u, bundle.s)


def nondegeneracy_radius(lam1_sq, lam2_sq, p: float):
    """Sup-norm radius below which λ₁² ≤ λ₁² + p u₊^{p-1} < λ₂² holds pointwise."""
    if not lam1_sq > 0:
        raise InvalidArgument("λ₁² must be positive")
    if not lam2_sq > lam1_sq:
        raise InvalidArgument("need λ₂² > λ₁²")
    if not p > 1:
        raise InvalidArgument("need p > 1")
    return ((lam2_sq - lam1_sq) / p) ** (1 / (p - 1))
