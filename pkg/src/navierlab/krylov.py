"""Preconditioned CG and MINRES on plain arrays.

Both take a ``matvec`` callable and an optional SPD ``precond`` callable and
work in whatever float dtype the right-hand side carries.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence


def _identity(v):
    return v


def cg(matvec, b, tol, precond=None, max_iter=None, x0=None):
    """Solve ``A x = b`` for SPD ``A`` until ``||b - A x|| <= tol * ||b||``.

    Returns ``(x, iterations, relative_residual)``.  The recursive residual is
    re-checked against the true one and the iteration restarted if they drift.
    """
    M = precond or _identity
    b = np.asarray(b)
    n = b.shape[0]
    max_iter = max_iter or 10 * n
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=b.dtype)
    if bnorm == 0:
        return np.zeros_like(b), 1, 0.0
    target = tol * bnorm
    it = 0
    best = np.inf
    for _restart in range(5):
        r = b - matvec(x)
        rnorm = np.linalg.norm(r)
        best = min(best, rnorm / bnorm)
        if rnorm <= target:
            return x, it, rnorm / bnorm
        z = M(r)
        d = z.copy()
        rz = np.dot(r, z)
        while it < max_iter:
            it += 1
            Ad = matvec(d)
            dAd = np.dot(d, Ad)
            if dAd <= 0:
                raise NoConvergence("CG met a non-positive curvature direction", best)
            alpha = rz / dAd
            x = x + alpha * d
            r = r - alpha * Ad
            rnorm = np.linalg.norm(r)
            if rnorm <= target:
                break
            z = M(r)
            rz_new = np.dot(r, z)
            d = z + (rz_new / rz) * d
            rz = rz_new
        else:
            rtrue = np.linalg.norm(b - matvec(x)) / bnorm
            raise NoConvergence(f"CG hit the cap of {max_iter} iterations", min(best, rtrue))
    rtrue = np.linalg.norm(b - matvec(x)) / bnorm
    if rtrue <= tol:
        return x, it, rtrue
    raise NoConvergence("CG residual drifted away from the true residual", min(best, rtrue))


def minres(matvec, b, tol, precond=None, max_iter=None):
    """MINRES for symmetric, possibly indefinite ``A`` with SPD preconditioner.

    Stops when the true residual satisfies ``||b - A x|| <= tol * ||b||``.
    Raises ``NoConvergence`` with the best relative residual otherwise, which
    is what a singular or nearly singular operator produces.
    """
    M = precond or _identity
    b = np.asarray(b)
    n = b.shape[0]
    max_iter = max_iter or 5 * n
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    if bnorm == 0:
        return x, 0, 0.0
    dtype = b.dtype
    eps = np.finfo(dtype).eps

    r1 = b.copy()
    y = M(r1)
    beta1 = np.dot(r1, y)
    if beta1 <= 0:
        raise NoConvergence("preconditioner is not positive definite")
    beta1 = np.sqrt(beta1)

    oldb = dtype.type(0)
    beta = beta1
    dbar = dtype.type(0)
    epsln = dtype.type(0)
    phibar = beta1
    cs = dtype.type(-1)
    sn = dtype.type(0)
    w = np.zeros_like(b)
    w2 = np.zeros_like(b)
    r2 = r1.copy()
    best = np.inf
    check_every = 10
    stalled_checks = 0

    for itn in range(1, max_iter + 1):
        v = y / beta
        y = matvec(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = np.dot(v, y)
        y = y - (alfa / beta) * r2
        r1 = r2
        r2 = y
        y = M(r2)
        oldb = beta
        beta = np.dot(r2, y)
        if beta < 0:
            raise NoConvergence("preconditioner is not positive definite", best)
        beta = np.sqrt(beta)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), eps)
        cs = gbar / gamma
        sn = beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1 = w2
        w2 = w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w

        estimate_done = phibar <= tol * beta1 * 1e-2 or beta <= eps * beta1
        if estimate_done or itn % check_every == 0:
            rel = np.linalg.norm(b - matvec(x)) / bnorm
            if rel <= tol:
                return x, itn, rel
            if itn % check_every == 0:
                stalled_checks = 0 if rel < 0.9 * best else stalled_checks + 1
            best = min(best, rel)
            if beta <= eps * beta1 or stalled_checks >= 20:
                break
    raise NoConvergence(f"MINRES stalled after {itn} iterations", best)
