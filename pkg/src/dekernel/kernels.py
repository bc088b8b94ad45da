"""Kernel functions, their moment functionals and the quadrature behind them.

Every kernel here is a symmetric probability density on the real line.  The
gaussian has unbounded support, so integrals against it are truncated to
``[-8, 8]`` where the neglected mass is below 1e-14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError, QuadratureError

SQRT_2PI = math.sqrt(2.0 * math.pi)
GAUSSIAN_RADIUS = 8.0

QUAD_TOL = 1e-10
CONV_TOL = 1e-6
CONV_START_POINTS = 4096
CONV_MAX_POINTS = 2**21


@dataclass(frozen=True)
class Kernel:
    """A symmetric density ``K`` with the interval quadrature should cover.

    ``pdf`` must accept numpy arrays.  ``support`` is the exact support for
    compact kernels and the effective support for unbounded ones.
    """

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]

    def __call__(self, w):
        return self.pdf(np.asarray(w, dtype=float))

    def scaled(self, s: float) -> "Kernel":
        """Return the kernel ``K(w / s) / s``; its second moment is ``s**2`` times larger."""
        if s <= 0:
            raise DomainError(f"scale must be positive, got {s}")
        base = self.pdf
        lo, hi = self.support
        return Kernel(
            name=f"{self.name}*{s:g}",
            pdf=_ScaledPdf(base, float(s)),
            support=(lo * s, hi * s),
        )


@dataclass(frozen=True)
class _ScaledPdf:
    base: Callable[[np.ndarray], np.ndarray]
    s: float

    def __call__(self, w):
        return self.base(np.asarray(w, dtype=float) / self.s) / self.s


@dataclass(frozen=True)
class KernelMoments:
    mu: tuple[float, ...]
    v: tuple[float, ...]
    rk: float


def _gaussian_pdf(w):
    w = np.asarray(w, dtype=float)
    return np.exp(-0.5 * w * w) / SQRT_2PI


def _epanechnikov_pdf(w):
    w = np.asarray(w, dtype=float)
    return np.where(np.abs(w) <= 1.0, 0.75 * (1.0 - w * w), 0.0)


GAUSSIAN = Kernel("gaussian", _gaussian_pdf, (-GAUSSIAN_RADIUS, GAUSSIAN_RADIUS))
EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov_pdf, (-1.0, 1.0))

KERNELS = {k.name: k for k in (GAUSSIAN, EPANECHNIKOV)}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def adaptive_simpson(f, a, b, tol=QUAD_TOL, max_depth=50, panels=16):
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson's rule.

    The interval is first cut into ``panels`` equal pieces so that symmetric
    or oscillating integrands cannot fool the first error estimate.  Each
    panel receives an equal share of the absolute tolerance.

    Raises
    ------
    QuadratureError
        If some subinterval still fails the error test at ``max_depth``.
    """
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _simpson_panel(f, float(lo), float(hi), tol / panels, max_depth)
    return total


def _simpson_panel(f, a, b, tol, max_depth):
    m = 0.5 * (a + b)
    fa, fm, fb = (float(v) for v in f(np.array([a, m, b])))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, tol, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = (float(v) for v in f(np.array([lm, rm])))
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            total += left + right + err / 15.0
        elif depth >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{a:.6g}, {b:.6g}] (error estimate {err:.3g})"
            )
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * tol, depth + 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))
    return total


@lru_cache(maxsize=64)
def kernel_moments(kernel: Kernel, max_order: int = 6) -> KernelMoments:
    """Compute ``mu_k = int w^k K`` and ``v_k = int w^k K^2`` for ``k <= max_order``."""
    if not 0 <= max_order <= 6:
        raise DomainError(f"max_order must be in 0..6, got {max_order}")
    lo, hi = kernel.support
    mu, v = [], []
    for k in range(max_order + 1):
        for label, out, power in (("mu", mu, 1), ("v", v, 2)):
            try:
                out.append(adaptive_simpson(lambda w: w**k * kernel(w) ** power, lo, hi))
            except QuadratureError as exc:
                raise QuadratureError(f"moment {label}_{k} of {kernel.name}: {exc}") from exc
    return KernelMoments(mu=tuple(mu), v=tuple(v), rk=v[0])


def kh_weight(kernel: Kernel, h: float, u):
    """Scaled kernel ``K_h(u) = K(u / h) / h``; accepts scalars or arrays."""
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    out = kernel(np.asarray(u, dtype=float) / h) / h
    return float(out) if np.ndim(out) == 0 else out


def _ds_variance_on_grid(kernel: Kernel, mu2: float, npts: int) -> float:
    lo, hi = kernel.support
    w = np.linspace(lo, hi, npts)
    dw = w[1] - w[0]
    k = kernel(w)
    k1 = w * k
    kk = fftconvolve(k, k) * dw
    k1k1 = fftconvolve(k1, k1) * dw
    diff = kk - k1k1 / mu2
    return float(np.trapezoid(diff * diff, dx=dw))


def ds_variance_constant(kernel: Kernel) -> float:
    """Variance constant ``V = int {(K*K)(v) - (K1*K1)(v)/mu_2}^2 dv`` with ``K1(u) = u K(u)``.

    Convolutions are done on a uniform grid over the kernel support; the grid
    is doubled until two successive values agree to 1e-6.
    """
    mu2 = kernel_moments(kernel, 2).mu[2]
    npts = CONV_START_POINTS
    prev = _ds_variance_on_grid(kernel, mu2, npts)
    while npts < CONV_MAX_POINTS:
        npts *= 2
        cur = _ds_variance_on_grid(kernel, mu2, npts)
        if abs(cur - prev) < CONV_TOL:
            return cur
        prev = cur
    raise QuadratureError(
        f"DS variance constant for {kernel.name} not stable at {npts} grid points"
    )
