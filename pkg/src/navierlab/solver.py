"""Newton iteration and homotopy continuation for the resonant semilinear problem."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import krylov
from .eigen import solve_linear, weighted_eigenvalues
from .errors import (
    ContinuationFailure,
    DegenerateLinearization,
    InvalidArgument,
    NoConvergence,
)
from .estimates import Decomposition, ProblemSpec, decompose
from .grid import DTYPE, Field, SparseOperator, format_real, gradient_magnitude, lp_norm

log = logging.getLogger(__name__)

LINEAR_TOL = 1e-10
FIXED_POINT_TOL = 1e-12
DEGENERACY_TOL = 1e-8
MIN_STEP = 1e-6


class IndexCertificate(NamedTuple):
    mu1: np.longdouble
    mu2: np.longdouble
    nondegenerate: bool
    index: int


@dataclass(frozen=True)
class Solution:
    u: Field
    residual_norm: np.longdouble
    decomposition: Decomposition
    newton_iterations: int
    index_certificate: Optional[IndexCertificate] = None

    def meta_lines(self) -> list[str]:
        lines = [
            f"residual={format_real(self.residual_norm)}",
            f"newton_iterations={self.newton_iterations}",
            f"t_component={format_real(self.decomposition.t)}",
            f"sup_norm={format_real(self.u.sup_norm())}",
        ]
        cert = self.index_certificate
        if cert is not None:
            lines += [
                f"mu1={format_real(cert.mu1)}",
                f"mu2={format_real(cert.mu2)}",
                f"nondegenerate={int(cert.nondegenerate)}",
                f"index={cert.index}",
            ]
        return lines


class TraceRecord(NamedTuple):
    tau: float
    step: float
    newton_iters: int
    residual: np.longdouble
    sup_norm: np.longdouble
    t_component: np.longdouble


@dataclass
class ContinuationTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    message: str = ""

    TRACE_COLUMNS = ["tau", "step", "newton_iters", "residual", "sup_norm", "t_component"]

    def to_csv(self, path, comments=()):
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            fh.write(f"# status={self.status}\n")
            if self.message:
                fh.write(f"# message={self.message}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.TRACE_COLUMNS)
            for rec in self.records:
                w.writerow([repr(float(rec.tau)), repr(float(rec.step)), rec.newton_iters,
                            format_real(rec.residual), format_real(rec.sup_norm),
                            format_real(rec.t_component)])


def residual(u: Field, spec: ProblemSpec) -> Field:
    """``B u - λ₁² u - u₊ᵖ - f`` nodewise."""
    if u.grid != spec.grid:
        raise InvalidArgument("field and problem live on different grids")
    up = np.maximum(u.values, 0) ** DTYPE(spec.p)
    return Field(u.grid, spec.B.matvec(u.values) - spec.lam1_sq * u.values - up - spec.f.values)


def fixed_point_map(u: Field, spec: ProblemSpec, tol: float = FIXED_POINT_TOL) -> Field:
    """``(Δ²)⁻¹(λ₁² u + u₊ᵖ + f)``; its fixed points are the solutions."""
    rhs = spec.lam1_sq * u + u.positive_part() ** spec.p + spec.f
    return solve_linear(spec.B, rhs, tol)


def linearization_weight(u: Field, spec: ProblemSpec) -> Field:
    """``g = λ₁² + p u₊^{p-1}``, with the generalized derivative 0 on ``{u <= 0}``."""
    up = np.maximum(u.values, 0)
    d = np.zeros_like(up)
    pos = up > 0
    d[pos] = DTYPE(spec.p) * up[pos] ** DTYPE(spec.p - 1)
    return Field(u.grid, spec.lam1_sq + d)


def linearization(u: Field, spec: ProblemSpec) -> SparseOperator:
    B = spec.B
    return B.with_diagonal_shift(linearization_weight(u, spec).values, preconditioner=B.preconditioner)


def newton_solve(u_start: Field, spec: ProblemSpec, tol: float = 1e-8, max_iter: int = 30,
                 linear_tol: float = LINEAR_TOL) -> Solution:
    """Damped semismooth Newton on the residual, backtracking on its L² norm."""
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    u = u_start
    res = residual(u, spec)
    rnorm = lp_norm(res, 2)
    for k in range(max_iter + 1):
        if rnorm <= tol:
            return Solution(u, rnorm, decompose(u, spec.phi1), k)
        if k == max_iter:
            break
        J = linearization(u, spec)
        try:
            delta, _, _ = krylov.minres(J.matvec, -res.values, linear_tol, J.preconditioner)
        except NoConvergence as exc:
            raise DegenerateLinearization(
                f"linearized solve stagnated at Newton step {k + 1}: {exc}", exc.best_residual) from exc
        step = DTYPE(1)
        while True:
            trial = Field(u.grid, u.values + step * delta)
            trial_res = residual(trial, spec)
            trial_norm = lp_norm(trial_res, 2)
            if trial_norm <= (1 - 1e-4 * step) * rnorm:
                break
            step /= 2
            if step < 1e-4:
                raise NoConvergence(f"line search failed at Newton step {k + 1}", float(rnorm))
        u, res, rnorm = trial, trial_res, trial_norm
        log.debug("newton %d: step=%g residual=%.3e", k + 1, float(step), float(rnorm))
    raise NoConvergence(f"Newton did not reach {tol:g} in {max_iter} iterations", float(rnorm))


def linearization_index(u: Field, spec: ProblemSpec, tol: float = 1e-12) -> IndexCertificate:
    """Weighted spectrum of the linearization weight; μ₁ < 1 < μ₂ means index 1."""
    g = linearization_weight(u, spec)
    mu = weighted_eigenvalues(spec.B, g, 2, tol).values
    nondeg = all(abs(m - 1) > DEGENERACY_TOL for m in mu)
    return IndexCertificate(mu[0], mu[1], nondeg, sum(1 for m in mu if m < 1))


class ReferenceForcing(NamedTuple):
    f: Field
    norm: np.longdouble


def reference_forcing(t: float, phi1: Field, p: float, r: float) -> ReferenceForcing:
    """``f₁ = -(t φ₁)ᵖ``, for which ``t φ₁`` is an exact solution."""
    if t < 0:
        raise InvalidArgument("t must be nonnegative")
    f = -(Field(phi1.grid, DTYPE(t) * phi1.values) ** p)
    return ReferenceForcing(f, lp_norm(f, r))


def reference_t_bound(eps: float, phi1: Field, p: float, r: float):
    """Largest t with ‖f₁‖_r < eps, namely ``(eps / ‖φ₁ᵖ‖_r)^{1/p}``."""
    return (DTYPE(eps) / lp_norm(phi1**p, r)) ** (1 / DTYPE(p))


def c1_norm_proxy(u: Field):
    return max(u.sup_norm(), gradient_magnitude(u).sup_norm())


def homotopy_path(spec: ProblemSpec, t_ref: float, steps: int = 10, tol: float = 1e-8,
                  max_newton: int = 12, linear_tol: float = LINEAR_TOL) -> tuple[Solution, ContinuationTrace]:
    """Track solutions of the forcing ``(1-τ) f + τ f₁`` from τ = 1 down to τ = 0.

    Start: ``u = t_ref φ₁`` solves the τ = 1 problem exactly.  Steps are
    halved on Newton failure and doubled back (up to ``1/steps``) after two
    consecutive easy corrections.
    """
    if steps < 1:
        raise InvalidArgument("steps must be at least 1")
    if not t_ref > 0:
        raise InvalidArgument("t_ref must be positive")
    f1 = reference_forcing(t_ref, spec.phi1, spec.p, spec.r).f
    f = spec.f
    trace = ContinuationTrace()

    def problem_at(tau):
        return spec.with_forcing(Field(f.grid, (1 - DTYPE(tau)) * f.values + DTYPE(tau) * f1.values))

    u = Field(f.grid, DTYPE(t_ref) * spec.phi1.values)
    tau = 1.0
    try:
        sol = newton_solve(u, problem_at(tau), tol, max_newton, linear_tol)
    except DegenerateLinearization as exc:
        exc.tau, exc.trace = tau, trace
        trace.status, trace.message = "degenerate", str(exc)
        raise
    u = sol.u
    trace.records.append(TraceRecord(tau, 0.0, sol.newton_iterations, sol.residual_norm,
                                     u.sup_norm(), sol.decomposition.t))
    max_step = 1.0 / steps
    step = max_step
    easy = 0
    while tau > 0:
        new_tau = tau - step
        if new_tau < 1e-12:
            new_tau = 0.0
        try:
            sol = newton_solve(u, problem_at(new_tau), tol, max_newton, linear_tol)
        except DegenerateLinearization as exc:
            exc.tau, exc.trace = new_tau, trace
            trace.status, trace.message = "degenerate", f"tau={new_tau}: {exc}"
            raise
        except NoConvergence:
            step /= 2
            easy = 0
            if step < MIN_STEP:
                trace.status = "failed"
                trace.message = f"step underflow below {MIN_STEP:g} at tau={tau}; fold suspected"
                raise ContinuationFailure(trace.message, trace)
            continue
        taken = tau - new_tau
        tau = new_tau
        u = sol.u
        trace.records.append(TraceRecord(tau, taken, sol.newton_iterations, sol.residual_norm,
                                         u.sup_norm(), sol.decomposition.t))
        easy = easy + 1 if sol.newton_iterations <= 3 else 0
        if easy >= 2:
            step = min(2 * step, max_step)
            easy = 0
    final = problem_at(0.0)
    cert = linearization_index(sol.u, final)
    trace.status = "success"
    return Solution(sol.u, sol.residual_norm, sol.decomposition, sol.newton_iterations, cert), trace
