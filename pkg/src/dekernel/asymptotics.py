"""Leading-order bias and variance of the DE1-k estimators and their competitors.

All formulas hold in the interior of the design interval.  ``moments`` is a
:class:`~dekernel.kernels.KernelMoments` with entries up to order 6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bandwidth import rot_bandwidth
from .errors import DomainError
from .growth import GrowthLaw
from .kernels import GAUSSIAN, Kernel, KernelMoments, ds_variance_constant
from .localfit import Dataset, kernel_weight_matrix, taylor_weights

TABLE4_METHODS = ("NW", "LL", "DE1-1", "DE1-2", "LQ", "LC", "DS", "DE1-3")
TABLE5_METHODS = ("NW", "LL", "DE1-1")


@dataclass(frozen=True)
class DesignDensity:
    pdf: Callable[[float], float]
    dpdf: Callable[[float], float]
    d2pdf: Callable[[float], float]
    support: tuple[float, float]
    name: str = "custom"

    def ratios(self, x):
        """``(f(x), f'(x)/f(x), f''(x)/f(x))``; raises if ``f(x) <= 0``."""
        f = float(self.pdf(x))
        if not f > 0:
            raise DomainError(f"design density vanishes at x={x!r}")
        return f, float(self.dpdf(x)) / f, float(self.d2pdf(x)) / f


def uniform_density(a: float = 0.0, b: float = 1.0) -> DesignDensity:
    height = 1.0 / (b - a)

    def pdf(x):
        return height if a <= x <= b else 0.0

    return DesignDensity(pdf, lambda x: 0.0, lambda x: 0.0, (a, b), "uniform")


def beta_density(a: float, b: float) -> DesignDensity:
    """Beta(a, b) density on [0, 1] with analytic first and second derivatives."""
    log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)

    def pdf(x):
        if not 0.0 < x < 1.0:
            return 0.0
        return math.exp(log_norm + (a - 1) * math.log(x) + (b - 1) * math.log1p(-x))

    def score(x):
        return (a - 1) / x - (b - 1) / (1 - x)

    def dpdf(x):
        return pdf(x) * score(x) if 0.0 < x < 1.0 else 0.0

    def d2pdf(x):
        if not 0.0 < x < 1.0:
            return 0.0
        return pdf(x) * (score(x) ** 2 - (a - 1) / x**2 - (b - 1) / (1 - x) ** 2)

    return DesignDensity(pdf, dpdf, d2pdf, (0.0, 1.0), f"beta({a:g},{b:g})")


@dataclass(frozen=True)
class MisspecifiedTruth:
    """Damped growth ``g(x) = exp(lambda1 x - lambda2 x^2)``."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 < 0:
            raise DomainError("need lambda1 > 0 and lambda2 >= 0")

    def g(self, x):
        return math.exp(self.lambda1 * x - self.lambda2 * x * x)

    def dg(self, x):
        return (self.lambda1 - 2 * x * self.lambda2) * self.g(x)

    def d2g(self, x, corrected=False):
        """Second derivative.

        By default the curvature term is ``-2 x lambda2`` as in the reference
        table; ``corrected=True`` uses the calculus value ``-2 lambda2``.
        """
        slope = self.lambda1 - 2 * x * self.lambda2
        damp = 2 * self.lambda2 if corrected else 2 * x * self.lambda2
        return (slope * slope - damp) * self.g(x)


@dataclass(frozen=True)
class AsymptoticSpec:
    method: str
    truth: GrowthLaw | MisspecifiedTruth
    sigma: float
    n: int
    h: float

    def __post_init__(self):
        if not self.h > 0 or self.n < 1 or self.sigma < 0:
            raise DomainError("need h > 0, n >= 1 and sigma >= 0")


def _de_degree(method: str) -> int | None:
    if method.startswith("DE1-"):
        k = int(method[4:])
        if not 1 <= k <= 5:
            raise ValueError(f"DE1 degree must be in 1..5, got {k}")
        return k
    return None


def de1k_bias(k, lam, g_at_x, h, moments: KernelMoments, density: DesignDensity, x) -> float:
    """Leading bias of the DE1-k estimator.

    Odd k: ``lam^{k+1} g h^{k+1} mu_{k+1} / (k+1)!``.
    Even k: ``lam^{k+1} g h^{k+2} mu_{k+2} (lam + f'/f) / (k+1)!``.
    """
    if not 1 <= k <= 5:
        raise ValueError(f"k must be in 1..5, got {k}")
    _, fp_over_f, _ = density.ratios(x)
    lead = lam ** (k + 1) * g_at_x / math.factorial(k + 1)
    if k % 2 == 1:
        return lead * h ** (k + 1) * moments.mu[k + 1]
    return lead * h ** (k + 2) * moments.mu[k + 2] * (lam + fp_over_f)


def de1k_variance(sigma, n, h, moments: KernelMoments, density: DesignDensity, x) -> float:
    """Leading variance ``sigma^2 R(K) / (n h f(x))``, the same for every k."""
    if not n * h > 0:
        raise DomainError("need n * h > 0")
    f, _, _ = density.ratios(x)
    return sigma**2 * moments.rk / (n * h * f)


def _lq_variance_factor(m: KernelMoments) -> float:
    mu2, mu4 = m.mu[2], m.mu[4]
    v0, v2, v4 = m.v[0], m.v[2], m.v[4]
    return (mu4**2 * v0 - 2 * mu2 * mu4 * v2 + mu2**2 * v4) / (mu2**2 - mu4) ** 2


def _check_nondegenerate(m: KernelMoments):
    if m.mu[2] ** 2 == m.mu[4]:
        raise DomainError("mu_2^2 == mu_4: degenerate kernel for the LQ/LC/DS rows")


def table4_bias_variance(
    spec: AsymptoticSpec,
    g_at_x: float,
    density: DesignDensity,
    moments: KernelMoments,
    x: float,
    kernel: Kernel = GAUSSIAN,
):
    """Bias and variance for one row of the correct-model summary.

    The truth must be an exponential law, so ``g^{(j)} = lam^j g``.  ``kernel``
    is only consulted for the DS variance constant.
    """
    if not isinstance(spec.truth, GrowthLaw) or spec.truth.kind != "EXP":
        raise ValueError("table4_bias_variance needs an exponential GrowthLaw truth")
    lam, g, h, m = spec.truth.lam, g_at_x, spec.h, moments
    f, fp, fpp = density.ratios(x)
    base_var = spec.sigma**2 / (spec.n * h * f)
    method = spec.method
    # v_0 = R(K), so the NW, LL and DE1-k variances share one expression
    first_order_var = de1k_variance(spec.sigma, spec.n, h, m, density, x)
    k = _de_degree(method)
    if k is not None:
        return de1k_bias(k, lam, g, h, m, density, x), first_order_var
    if method == "NW":
        return 0.5 * (lam**2 * g + 2 * lam * g * fp) * h**2 * m.mu[2], first_order_var
    if method == "LL":
        return 0.5 * lam**2 * g * h**2 * m.mu[2], first_order_var
    if method in ("LQ", "LC"):
        _check_nondegenerate(m)
        c = (m.mu[2] * m.mu[6] - m.mu[4] ** 2) / (m.mu[2] ** 2 - m.mu[4]) / 24.0
        shape = lam**4 * g + (4 * lam**3 * g * fp if method == "LQ" else 0.0)
        return c * shape * h**4, base_var * _lq_variance_factor(m)
    if method == "DS":
        _check_nondegenerate(m)
        b = (m.mu[2] ** 2 - m.mu[4]) / 4.0 * (lam**2 * g * fpp + 2 * lam**3 * g * fp + lam**4 * g)
        return h**4 * b, base_var * ds_variance_constant(kernel)
    raise ValueError(f"no asymptotic row for method {method!r}")


def misspecified_bias(
    method: str,
    truth: MisspecifiedTruth,
    density: DesignDensity,
    moments: KernelMoments,
    h: float,
    x: float,
    corrected: bool = False,
) -> float:
    """Leading bias under damped-growth truth when the DE1 model assumes ``g' = lambda1 g``."""
    _, fp, _ = density.ratios(x)
    g = truth.g(x)
    hm = h**2 * moments.mu[2]
    curv = 0.5 * truth.d2g(x, corrected) * hm
    if method == "NW":
        return curv + truth.dg(x) * fp * hm
    if method == "LL":
        return curv
    if method == "DE1-1":
        return curv - 2 * x * truth.lambda2 * g * (truth.lambda1 + fp) * hm
    raise ValueError(f"no misspecified-model row for method {method!r}")


@dataclass(frozen=True)
class VarianceRatioResult:
    ratios: np.ndarray
    mean: float
    min: float
    max: float
    h: float
    n_excluded: int

    def __iter__(self):
        return iter((self.ratios, self.mean, self.min, self.max))


def conditional_variance_ratio(x, x0s, k, lam, h, kernel: Kernel = GAUSSIAN):
    """Exact finite-sample ``Var(DE1-k) / Var(NW)`` at each ``x0`` given the design ``x``.

    Noise variance cancels.  Entries with a vanishing denominator are NaN.
    """
    u, w = kernel_weight_matrix(x, x0s, h, kernel)
    s2 = taylor_weights(u, k, lam) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        var_de = (s2 * w * w).sum(axis=1) / (s2 * w).sum(axis=1) ** 2
        var_nw = (w * w).sum(axis=1) / w.sum(axis=1) ** 2
        return var_de / var_nw


def variance_ratio_study(n, lam, k=1, h=None, kernel: Kernel = GAUSSIAN, seed=0) -> VarianceRatioResult:
    """Draw ``n`` uniform design points and compute the variance ratio at each one.

    ``h=None`` uses the rule-of-thumb bandwidth of the drawn design.
    """
    if n < 2:
        raise ValueError("variance ratio study needs n >= 2")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, n)
    if h is None:
        h = rot_bandwidth(Dataset(x, np.zeros(n)))
    r = conditional_variance_ratio(x, x, k, lam, h, kernel)
    good = np.isfinite(r)
    r = r[good]
    if r.size == 0:
        raise DomainError("variance ratio undefined at every design point")
    return VarianceRatioResult(r, float(r.mean()), float(r.min()), float(r.max()), float(h), int((~good).sum()))
