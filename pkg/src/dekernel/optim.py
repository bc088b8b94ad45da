"""Small one-dimensional optimisation and regression helpers."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-12, max_iter=500):
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    Stops when the bracket is narrower than ``tol * (1 + |x|)``.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * (1.0 + abs(c)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def ols_line(x, y):
    """Ordinary least-squares ``(intercept, slope)`` of ``y`` on ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("OLS needs at least two distinct x values")
    slope = float(dx @ (y - ym)) / sxx
    return ym - slope * xm, slope


def levenberg_marquardt(resid_jac, p0, max_iter=500, rtol=1e-12):
    """Minimise ``||r(p)||^2`` by Levenberg-damped Gauss-Newton.

    ``resid_jac(p)`` returns ``(r, J)`` with ``r = y - model(p)`` and ``J`` the
    Jacobian of the model.  Stops when an accepted step lowers the SSE by less
    than ``rtol`` relative, when the SSE reaches zero, or when no damped step
    can lower it.  Returns ``(p, sse, iterations)``; ``iterations`` equals
    ``max_iter`` only if none of these happened.
    """
    p = np.asarray(p0, dtype=float)

    def sse_of(p):
        r, _ = resid_jac(p)
        s = float(r @ r)
        return s if np.isfinite(s) else np.inf

    r, jac = resid_jac(p)
    sse = float(r @ r)
    if not np.isfinite(sse):
        raise ValueError("starting point gives a non-finite residual")
    mu = 1e-3
    npar = p.size
    for it in range(1, max_iter + 1):
        if sse == 0.0:
            return p, sse, it
        scale = np.sqrt(np.maximum((jac * jac).sum(axis=0), 1e-300))
        while True:
            aug = np.vstack([jac, np.diag(np.sqrt(mu) * scale)])
            step = np.linalg.lstsq(aug, np.concatenate([r, np.zeros(npar)]), rcond=None)[0]
            cand = sse_of(p + step)
            if cand <= sse:
                break
            mu *= 10.0
            if mu > 1e20:
                return p, sse, it
        p = p + step
        prev, sse = sse, cand
        mu = max(mu / 10.0, 1e-12)
        if prev - sse <= rtol * prev:
            return p, sse, it
        r, jac = resid_jac(p)
    return p, sse, max_iter
