"""Batch front end.

Usage::

    navierlab {eig,hypotheses,continue,sweep,hardy-sobolev} [--config FILE] [--out DIR] [--seed N]

The config file holds ``key = value`` lines (``#`` starts a comment).  Keys
not listed in ``DEFAULTS`` are rejected.  Exit codes: 0 success,
2 configuration error, 3 solver or continuation failure, 4 hypothesis
violation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .eigen import smallest_eigenpairs, weighted_eigenvalues, write_spectrum_csv
from .errors import ContinuationFailure, HypothesisViolation, InvalidArgument, NoConvergence
from .estimates import (
    base_spectrum,
    bundle_row,
    exponent_bundle,
    hardy_sobolev_ratio,
    make_problem,
    write_bundle_csv,
)
from .grid import (
    DTYPE,
    PI,
    Field,
    Grid2D,
    biharmonic_matrix,
    format_real,
    laplacian_matrix,
    lp_norm,
    read_field_csv,
    write_field_csv,
)
from .solver import c1_norm_proxy, homotopy_path

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_HYPOTHESIS = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    a: float = 1.0
    b: float = 1.0
    nx: int = 31
    ny: int = 31
    N: int = 6
    p: float = 2.1
    r: float = 2.5
    forcing: str = "power"
    c: float = 0.05
    forcing_file: str = ""
    linear_tol: float = 1e-10
    newton_tol: float = 1e-8
    max_iter: int = 12
    steps: int = 10
    t_ref: float = 0.3
    p_grid: str = "1.9,2.0,2.1,2.3,2.4"
    c_grid: str = "0.001,0.01,0.05,0.1"
    samples: int = 50
    out: str = "out"
    seed: int = 0

    def grid(self) -> Grid2D:
        return Grid2D(self.a, self.b, self.nx, self.ny)

    def header(self) -> str:
        return "config: " + " ".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))


DEFAULTS = {f.name: f.default for f in fields(RunConfig)}


def _float_list(text: str, key: str) -> list[float]:
    items = [x.strip() for x in text.split(",") if x.strip()]
    try:
        return [float(x) for x in items]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    values = {}
    for key, value in raw.items():
        kind = type(DEFAULTS[key])
        try:
            values[key] = value if isinstance(value, kind) else kind(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    for key in ("linear_tol", "newton_tol", "t_ref"):
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{key} must be positive")
    if cfg.max_iter < 1 or cfg.steps < 1:
        raise ConfigError("max_iter and steps must be at least 1")
    if cfg.forcing not in ("power", "file"):
        raise ConfigError("forcing must be 'power' or 'file'")
    if cfg.forcing == "file" and not Path(cfg.forcing_file).is_file():
        raise ConfigError(f"forcing_file {cfg.forcing_file!r} does not exist")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    try:
        cfg.grid()
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    return out


def power_forcing(c: float, p: float):
    def build(phi1: Field) -> Field:
        return Field(phi1.grid, -DTYPE(c) * phi1.values ** DTYPE(p))

    return build


def run_eig(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    grid = cfg.grid()
    hdr = (cfg.header(),)
    lap = smallest_eigenpairs(laplacian_matrix(grid), 3)
    bih = smallest_eigenpairs(biharmonic_matrix(grid), 3)
    base = base_spectrum(grid)
    weighted = weighted_eigenvalues(biharmonic_matrix(grid), Field.constant(grid, base.lam1_sq), 2)
    write_spectrum_csv(out / "laplacian_spectrum.csv", [e.value for e in lap], [e.residual for e in lap], hdr)
    write_spectrum_csv(out / "biharmonic_spectrum.csv", [e.value for e in bih], [e.residual for e in bih], hdr)
    weighted.to_csv(out / "weighted_spectrum_lambda1sq.csv", hdr + ("weight m = lambda1^2 (constant)",))
    write_field_csv(lap[0].vector, out / "phi1.csv", hdr)
    print(f"lambda1_h = {float(lap[0].value):.10f}")
    print(f"lambda2_h = {float(lap[1].value):.10f}")
    print(f"lambda1_h^2 = {float(lap[0].value ** 2):.10f}")
    print(f"biharmonic mu1 = {float(bih[0].value):.10f}")
    return EXIT_OK


def run_hypotheses(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    ps = _float_list(cfg.p_grid, "p_grid")
    if not ps:
        raise ConfigError("p_grid is empty")
    rows = [bundle_row(cfg.N, p, cfg.r) for p in ps]
    write_bundle_csv(out / "hypotheses.csv", rows, (cfg.header(),))
    for row in rows:
        print(f"N={row['N']} p={row['p']} r={row['r']} pass={row['pass']}")
    return EXIT_OK


def _forcing(cfg: RunConfig, grid: Grid2D):
    if cfg.forcing == "file":
        try:
            return read_field_csv(cfg.forcing_file, grid)
        except (InvalidArgument, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read forcing file: {exc}") from None
    return power_forcing(cfg.c, cfg.p)


def run_continuation(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    grid = cfg.grid()
    spec = make_problem(grid, cfg.N, cfg.p, cfg.r, _forcing(cfg, grid))
    hdr = (cfg.header(),)
    try:
        sol, trace = homotopy_path(spec, cfg.t_ref, cfg.steps, cfg.newton_tol, cfg.max_iter, cfg.linear_tol)
    except (ContinuationFailure, NoConvergence) as exc:
        trace = getattr(exc, "trace", None)
        if trace is not None:
            trace.to_csv(out / "trace.csv", hdr)
        print(f"continuation failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    write_field_csv(sol.u, out / "solution.csv", hdr)
    (out / "solution.meta").write_text("\n".join(sol.meta_lines()) + "\n")
    trace.to_csv(out / "trace.csv", hdr)
    cert = sol.index_certificate
    print(f"residual = {float(sol.residual_norm):.3e}")
    print(f"sup_norm = {float(sol.u.sup_norm()):.10f}")
    print(f"t = {float(sol.decomposition.t):.10f}")
    print(f"mu1 = {float(cert.mu1):.10f} mu2 = {float(cert.mu2):.10f} index = {cert.index}")
    return EXIT_OK


SWEEP_COLUMNS = ["c", "f_norm_r", "sup_norm", "c1_proxy", "t", "index", "status"]


def _sweep_row(cfg: RunConfig, grid: Grid2D, c: float) -> dict:
    row = {k: "" for k in SWEEP_COLUMNS}
    row["c"] = repr(c)
    if c == 0:
        row["status"] = "rejected: zero forcing"
        return row
    try:
        spec = make_problem(grid, cfg.N, cfg.p, cfg.r, power_forcing(c, cfg.p))
    except HypothesisViolation as exc:
        row["status"] = f"rejected: {exc}"
        return row
    row["f_norm_r"] = format_real(lp_norm(spec.f, cfg.r))
    try:
        sol, _ = homotopy_path(spec, cfg.t_ref, cfg.steps, cfg.newton_tol, cfg.max_iter, cfg.linear_tol)
    except (ContinuationFailure, NoConvergence) as exc:
        row["status"] = f"failed: {exc}"
        return row
    row.update(
        sup_norm=format_real(sol.u.sup_norm()),
        c1_proxy=format_real(c1_norm_proxy(sol.u)),
        t=format_real(sol.decomposition.t),
        index=sol.index_certificate.index,
        status="ok",
    )
    return row


def run_sweep(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    cs = sorted(set(_float_list(cfg.c_grid, "c_grid")))
    if not cs:
        raise ConfigError("c_grid is empty")
    grid = cfg.grid()
    rows = [_sweep_row(cfg, grid, c) for c in cs]
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write(f"# {cfg.header()}\n")
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for row in rows:
        print(", ".join(f"{k}={row[k]}" for k in ("c", "f_norm_r", "sup_norm", "status")))
    return EXIT_OK if any(r["status"] == "ok" for r in rows) else EXIT_SOLVER


SINE_MODES = 10


def random_smooth_coefficients(rng: np.random.Generator, modes: int = SINE_MODES) -> np.ndarray:
    """Normal coefficients damped by 1/(j² + k²) for the sine modes j, k = 1..modes."""
    j = np.arange(1, modes + 1)
    return rng.standard_normal((modes, modes)) / (j[:, None] ** 2 + j[None, :] ** 2)


def sine_series(grid: Grid2D, coef: np.ndarray) -> Field:
    X, Y = grid.coordinates()
    vals = np.zeros(grid.size, dtype=DTYPE)
    for jx in range(coef.shape[0]):
        sx = np.sin((jx + 1) * PI * X / DTYPE(grid.a))
        for ky in range(coef.shape[1]):
            vals += DTYPE(coef[jx, ky]) * sx * np.sin((ky + 1) * PI * Y / DTYPE(grid.b))
    return Field(grid, vals)


def hardy_sobolev_study(cfg: RunConfig):
    """Per-sample (coarse, fine) ratios for seeded random sine series."""
    bundle = exponent_bundle(cfg.N, cfg.p)
    coarse = cfg.grid()
    fine = coarse.refined()
    phi_c = base_spectrum(coarse).phi1
    phi_f = base_spectrum(fine).phi1
    rng = np.random.default_rng(cfg.seed)
    out = []
    for _ in range(cfg.samples):
        coef = random_smooth_coefficients(rng)
        rc = hardy_sobolev_ratio(sine_series(coarse, coef), phi_c, bundle, coarse)
        rf = hardy_sobolev_ratio(sine_series(fine, coef), phi_f, bundle, fine)
        out.append((rc, rf))
    return out


def run_hardy_sobolev(cfg: RunConfig) -> int:
    if cfg.samples < 1:
        raise ConfigError("samples must be at least 1")
    out = _outdir(cfg)
    try:
        pairs = hardy_sobolev_study(cfg)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from None
    max_c = max(p[0] for p in pairs)
    max_f = max(p[1] for p in pairs)
    factor = max(max_c, max_f) / min(max_c, max_f)
    with open(out / "hardy_sobolev.csv", "w", newline="") as fh:
        fh.write(f"# {cfg.header()}\n")
        fh.write(f"# max_coarse={format_real(max_c)} max_fine={format_real(max_f)} factor={format_real(factor)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "ratio_coarse", "ratio_fine"])
        for k, (rc, rf) in enumerate(pairs):
            w.writerow([k, format_real(rc), format_real(rf)])
    print(f"max ratio coarse = {float(max_c):.6e}, fine = {float(max_f):.6e}, factor = {float(factor):.4f}")
    return EXIT_OK


COMMANDS = {
    "eig": run_eig,
    "hypotheses": run_hypotheses,
    "continue": run_continuation,
    "sweep": run_sweep,
    "hardy-sobolev": run_hardy_sobolev,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="navierlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, help="random seed (overrides config)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text, {"out": args.out, "seed": args.seed})
        return COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (NoConvergence, ContinuationFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
