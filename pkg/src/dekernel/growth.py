"""Growth laws, log-scale local growth estimators and global growth fits.

Two laws are supported: exponential ``g' = lam g`` and sub-exponential
``g' = lam g^alpha`` with ``0 < alpha < 1``.  On the log scale
``G = log g`` the sub-exponential law reads ``G' = lam exp((alpha - 1) G)``,
which gives the first and second order local predictors::

    G(x_i) ~ G0 + a u + b u^2,   u = x_i - x0
    a = lam exp((alpha - 1) G0),   b = 0.5 lam^2 (alpha - 1) exp(2 (alpha - 1) G0)

(``b = 0`` at first order).  The local fit minimises the kernel-weighted
squared residuals over the single parameter ``G0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError, NonConvergence, UndefinedAtPoint
from .kernels import Kernel
from .localfit import Dataset, kernel_weight_matrix
from .optim import golden_section, levenberg_marquardt, ols_line

LOG_CLIP = 1e-8
ALPHA_CLAMP = 1e-6

NEWTON_MAX_ITER = 200
NEWTON_STEP_TOL = 1e-10
MAX_HALVINGS = 30
FALLBACK_HALF_WIDTH = 5.0

LM_MAX_ITER = 500
LM_REL_TOL = 1e-12


@dataclass(frozen=True)
class GrowthLaw:
    kind: str
    lam: float
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "EXP":
            if self.alpha is not None:
                raise ValueError("EXP law takes no alpha")
        elif self.kind == "SUBEXP":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise DomainError(f"SUBEXP needs 0 < alpha < 1, got {self.alpha}")
        else:
            raise ValueError(f"unknown growth law kind {self.kind!r}")

    def rate(self, g):
        """``g'`` implied by the law at level ``g``."""
        if self.kind == "EXP":
            return self.lam * g
        return self.lam * np.power(g, self.alpha)

    def curvature(self, g):
        """``g''`` implied by the law at level ``g``."""
        if self.kind == "EXP":
            return self.lam**2 * g
        return self.alpha * self.lam**2 * np.power(g, 2.0 * self.alpha - 1.0)


def subexp_solution(law: GrowthLaw, x, g0: float):
    """Closed form ``{(1 - alpha)(lam x + g0)}^{1 / (1 - alpha)}``."""
    if law.kind != "SUBEXP":
        raise ValueError("subexp_solution needs a SUBEXP law")
    base = (1.0 - law.alpha) * (law.lam * np.asarray(x, dtype=float) + g0)
    if np.any(base < 0):
        raise DomainError("negative base raised to a non-integer power")
    out = np.power(base, 1.0 / (1.0 - law.alpha))
    return float(out) if np.ndim(out) == 0 else out


def subexp_log_solution(law: GrowthLaw, x, g0: float = 0.0):
    """Log of the closed form, ``log((1 - alpha)(lam x + g0)) / (1 - alpha)``.

    ``g0`` defaults to zero.  Returns NaN where the base is not positive.
    """
    base = (1.0 - law.alpha) * (law.lam * np.asarray(x, dtype=float) + g0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(base > 0, np.log(np.where(base > 0, base, 1.0)) / (1.0 - law.alpha), np.nan)
    return out


def _log_predictor(G, u, order, lam, alpha):
    """Predictor value and its first two derivatives in ``G``."""
    am1 = alpha - 1.0
    with np.errstate(over="ignore"):
        a = lam * np.exp(am1 * G)
        b = 0.5 * lam * lam * am1 * np.exp(2.0 * am1 * G) if order == 2 else 0.0
    p = G + a * u + b * u * u
    dp = 1.0 + am1 * a * u + 2.0 * am1 * b * u * u
    d2p = am1 * am1 * a * u + 4.0 * am1 * am1 * b * u * u
    return p, dp, d2p


def _subexp_solve(z, u, w, order, lam, alpha, start, x0):
    w = w / w.sum()

    def objective(G):
        p, _, _ = _log_predictor(G, u, order, lam, alpha)
        r = z - p
        val = float(w @ (r * r))
        return val if np.isfinite(val) else np.inf

    G = start
    q = objective(G)
    used_fallback = False
    for it in range(NEWTON_MAX_ITER):
        p, dp, d2p = _log_predictor(G, u, order, lam, alpha)
        r = z - p
        grad = -2.0 * float(w @ (r * dp))
        hess = 2.0 * float(w @ (dp * dp - r * d2p))
        moved = False
        if np.isfinite(grad) and np.isfinite(hess) and hess > 0:
            step = -grad / hess
            for _ in range(MAX_HALVINGS + 1):
                cand = G + step
                qc = objective(cand)
                if qc <= q:
                    moved = True
                    break
                step *= 0.5
        if moved:
            G, q = cand, qc
            if abs(step) < NEWTON_STEP_TOL:
                return G
            continue
        if used_fallback:
            break
        G, q = golden_section(objective, start - FALLBACK_HALF_WIDTH, start + FALLBACK_HALF_WIDTH)
        used_fallback = True
    raise NonConvergence(
        f"local growth fit did not converge at x0={x0!r}",
        x0=x0,
        last_G=G,
        objective=q,
        iterations=it + 1,
        used_fallback=used_fallback,
    )


def local_subexp_predict(logdata: Dataset, order, lam, alpha, h, kernel: Kernel, x0s, leave_one_out=False):
    """Vectorised :func:`local_subexp_fit`; returns ``(values, defined)``.

    Points with an empty neighbourhood or a failed solve come back undefined.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    x0s = np.atleast_1d(np.asarray(x0s, dtype=float))
    u, w = kernel_weight_matrix(logdata.x, x0s, h, kernel, leave_one_out)
    z = logdata.y
    vals = np.full(x0s.size, np.nan)
    for i, x0 in enumerate(x0s):
        wi = w[i]
        sw = wi.sum()
        if not sw > 0:
            continue
        start = float(wi @ z) / sw
        try:
            vals[i] = _subexp_solve(z, u[i], wi, order, lam, alpha, start, float(x0))
        except NonConvergence:
            continue
    return vals, np.isfinite(vals)


def local_subexp_fit(logdata: Dataset, order: int, law: GrowthLaw, h: float, kernel: Kernel, x0: float) -> float:
    """First or second order local growth estimate of ``log g(x0)``.

    ``logdata`` holds ``(x, log y)``.  The single local parameter is found by
    Newton's method started at the local constant estimate, with step halving
    and a golden-section fallback on ``start +/- 5``.

    Raises
    ------
    UndefinedAtPoint
        If no observation carries kernel weight at ``x0``.
    NonConvergence
        If neither Newton nor the fallback settles within 200 iterations.
    """
    if law.kind != "SUBEXP":
        raise ValueError("local_subexp_fit needs a SUBEXP law")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    u, w = kernel_weight_matrix(logdata.x, [x0], h, kernel)
    u, w = u[0], w[0]
    sw = w.sum()
    if not sw > 0:
        raise UndefinedAtPoint(x0, "no kernel weight")
    start = float(w @ logdata.y) / sw
    return _subexp_solve(logdata.y, u, w, order, law.lam, law.alpha, start, x0)


def loglinear_fit(data: Dataset):
    """``(c, lam)`` from OLS of ``log(max(y, 1e-8))`` on ``x``."""
    if np.all(data.y < LOG_CLIP):
        raise EstimationError("all responses are below the log clip; loglinear fit impossible")
    try:
        b0, b1 = ols_line(data.x, np.log(np.maximum(data.y, LOG_CLIP)))
    except ValueError as exc:
        raise EstimationError(str(exc)) from exc
    return float(np.exp(b0)), b1


def fit_nls_exponential(data: Dataset):
    """Least-squares fit of ``y = c exp(lam x)``; returns ``(c, lam)``.

    Levenberg-damped Gauss-Newton started from :func:`loglinear_fit`,
    converged when the SSE changes by less than 1e-12 relative.
    """
    if data.n < 2 or np.unique(data.x).size < 2:
        raise EstimationError("exponential NLS needs at least two distinct x values")
    x, y = data.x, data.y

    def resid_jac(p):
        c, lam = p
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(lam * x)
        return y - c * e, np.column_stack([e, c * x * e])

    p, sse, it = levenberg_marquardt(resid_jac, loglinear_fit(data), LM_MAX_ITER, LM_REL_TOL)
    if it >= LM_MAX_ITER:
        raise NonConvergence("exponential NLS did not converge", iterations=it, c=p[0], lam=p[1], sse=sse)
    return float(p[0]), float(p[1])


def fit_subexp_solution(data: Dataset, alpha: float, lam0: float, g0_start: float = 0.0):
    """Least-squares ``(lam, g0)`` for ``y = {(1 - alpha)(lam x + g0)}^{1/(1 - alpha)}`` with alpha fixed.

    Where the base turns negative the model is taken as zero.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    x, y = data.x, data.y
    c, q = 1.0 - alpha, 1.0 / (1.0 - alpha)

    def resid_jac(p):
        lam, g0 = p
        base = np.maximum(c * (lam * x + g0), 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            m = base**q
            dm = np.where(base > 0, q * c * base ** (q - 1.0), 0.0)
        return y - m, np.column_stack([dm * x, dm])

    try:
        p, sse, it = levenberg_marquardt(resid_jac, [lam0, g0_start], LM_MAX_ITER, LM_REL_TOL)
    except ValueError as exc:
        raise EstimationError(str(exc)) from exc
    if it >= LM_MAX_ITER:
        raise NonConvergence("sub-exponential NLS did not converge", iterations=it, lam=p[0], g0=p[1], sse=sse)
    return float(p[0]), float(p[1])


def fit_nls_scale(data: Dataset, lam: float) -> float:
    """Least-squares ``c`` for ``y = c exp(lam x)`` with the growth rate held fixed."""
    e = np.exp(lam * data.x)
    den = float(e @ e)
    if not (np.isfinite(den) and den > 0):
        raise EstimationError("scale fit has a degenerate design")
    return float(data.y @ e) / den


def estimate_alpha(data: Dataset) -> float:
    """``alpha = 1 - 1/slope`` from the OLS slope of ``log y`` on ``log x``, clamped to (1e-6, 1 - 1e-6)."""
    if data.n < 2:
        raise DomainError("estimate_alpha needs at least two points")
    if np.any(data.x <= 0) or np.any(data.y <= 0):
        raise DomainError("estimate_alpha needs positive x and y")
    try:
        _, slope = ols_line(np.log(data.x), np.log(data.y))
    except ValueError as exc:
        raise EstimationError(str(exc)) from exc
    if slope <= 0:
        raise EstimationError(f"log-log slope {slope:.4g} is not positive; sub-exponential model inapplicable")
    return float(np.clip(1.0 - 1.0 / slope, ALPHA_CLAMP, 1.0 - ALPHA_CLAMP))


def _subexp_model(lam, x, alpha):
    with np.errstate(over="ignore", invalid="ignore"):
        return np.power((1.0 - alpha) * lam * x, 1.0 / (1.0 - alpha))


def estimate_lambda_subexp(data: Dataset, alpha_hat: float, rtol=1e-10) -> float:
    """Least-squares ``lam`` for ``y = {(1 - alpha) lam x}^{1/(1 - alpha)}`` with alpha fixed.

    A log-spaced scan locates a bracket, golden section narrows it in
    ``log lam`` and Newton polishes in ``lam``.
    """
    if np.any(data.x <= 0):
        raise DomainError("estimate_lambda_subexp needs positive x")
    if not 0.0 < alpha_hat < 1.0:
        raise DomainError(f"alpha_hat must lie in (0, 1), got {alpha_hat}")
    x, y = data.x, data.y
    q = 1.0 / (1.0 - alpha_hat)

    def sse(lam):
        r = y - _subexp_model(lam, x, alpha_hat)
        s = float(r @ r)
        return s if np.isfinite(s) else np.inf

    t_grid = np.linspace(-30.0, 30.0, 2401)
    scan = np.array([sse(np.exp(t)) for t in t_grid])
    if not np.isfinite(scan).any():
        raise EstimationError("no finite least-squares objective on the lambda scan")
    j = int(np.argmin(scan))
    lo, hi = t_grid[max(j - 1, 0)], t_grid[min(j + 1, t_grid.size - 1)]
    t_best, _ = golden_section(lambda t: sse(np.exp(t)), lo, hi, tol=1e-13)
    lam = float(np.exp(t_best))
    best = sse(lam)
    for _ in range(50):
        m = _subexp_model(lam, x, alpha_hat)
        r = y - m
        dm = q * m / lam
        d2m = q * (q - 1.0) * m / lam**2
        grad = -2.0 * float(r @ dm)
        hess = 2.0 * float(dm @ dm - r @ d2m)
        if not (np.isfinite(hess) and hess > 0):
            break
        step = -grad / hess
        cand = lam + step
        if cand <= 0 or sse(cand) > best:
            break
        lam, best = cand, sse(cand)
        if abs(step) <= rtol * lam:
            break
    return lam
