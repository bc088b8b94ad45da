"""Local polynomial and DE1-k kernel estimators.

The DE1-k estimator fits a single local level ``g(x0)`` using the Taylor
weights implied by exponential growth ``g' = lam * g``::

    S_k(u) = sum_{p=0}^{k} (lam * u)^p / p!
    g_k(x0) = sum y_i S_k(u_i) K_h(u_i) / sum S_k(u_i)^2 K_h(u_i),   u_i = x_i - x0

With ``lam = 0`` every ``S_k`` is identically one and the estimator is
Nadaraya-Watson; both go through :func:`_ratio_fit` so the reduction is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UndefinedAtPoint
from .kernels import GAUSSIAN, Kernel

WEIGHT_FLOOR = 1e-12
DENOM_FLOOR = 1e-300
MAX_K = 5

POLY_DEGREES = {"NW": 0, "LL": 1, "LQ": 2, "LC": 3}
METHOD_TAGS = ("NW", "LL", "LQ", "LC", "DE1", "SUBEXP", "NLS", "NLS-SUBEXP")


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ: {x.size} vs {y.size}")
        if x.size < 1:
            raise ValueError("dataset must contain at least one point")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None


@dataclass(frozen=True)
class Method:
    """Estimator tag plus its parameters.

    ``k`` is the Taylor degree for DE1 and the expansion order (1 or 2) for
    SUBEXP.  ``lam`` and ``alpha`` are the global growth parameters.
    """

    tag: str
    k: int = 1
    lam: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.tag!r}")
        if self.tag == "DE1":
            if not 1 <= self.k <= MAX_K:
                raise ValueError(f"DE1 degree must be in 1..{MAX_K}, got {self.k}")
            if self.lam is None:
                raise ValueError("DE1 needs lam")
        if self.tag == "SUBEXP":
            if self.k not in (1, 2):
                raise ValueError(f"SUBEXP order must be 1 or 2, got {self.k}")
            if self.lam is None or self.alpha is None:
                raise ValueError("SUBEXP needs lam and alpha")

    @property
    def label(self) -> str:
        if self.tag in ("DE1", "SUBEXP"):
            return f"{self.tag}-{self.k}"
        return self.tag

    @property
    def needs_bandwidth(self) -> bool:
        return not self.tag.startswith("NLS")

    def with_params(self, **kw) -> "Method":
        return Method(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class FitCurve:
    grid: np.ndarray
    values: np.ndarray
    defined: np.ndarray
    h: float | None
    method: str
    params: dict = field(default_factory=dict)

    def __len__(self):
        return self.grid.size


def kernel_weight_matrix(x, x0s, h, kernel: Kernel, leave_one_out=False):
    """Rows of ``K_h(x_j - x0_i)`` with sub-floor entries zeroed.

    An entry counts as weighted when it exceeds ``WEIGHT_FLOOR`` times the
    largest entry in its row.
    """
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    x0s = np.atleast_1d(np.asarray(x0s, dtype=float))
    u = x[None, :] - x0s[:, None]
    w = kernel(u / h) / h
    if leave_one_out:
        np.fill_diagonal(w, 0.0)
    wmax = w.max(axis=1, keepdims=True)
    w = np.where(w > WEIGHT_FLOOR * wmax, w, 0.0)
    return u, w


def taylor_weights(u, k: int, lam: float):
    """``S_k(u) = sum_{p<=k} (lam u)^p / p!`` with factorials by running product."""
    if not 0 <= k <= MAX_K:
        raise ValueError(f"Taylor degree must be in 0..{MAX_K}, got {k}")
    lu = lam * np.asarray(u, dtype=float)
    term = np.ones_like(lu)
    s = term.copy()
    for p in range(1, k + 1):
        term = term * lu / p
        s = s + term
    return s


def _ratio_fit(w, s, y):
    num = (w * s * y).sum(axis=-1)
    den = (w * s * s).sum(axis=-1)
    ok = den > DENOM_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(ok, num / np.where(ok, den, 1.0), np.nan)
    return vals, ok


def _poly_fit(u, w, y, degree, h):
    m, n = w.shape
    p = degree + 1
    vals = np.full(m, np.nan)
    ok = (w > 0).sum(axis=1) >= p
    if not ok.any():
        return vals, ok
    rows = np.flatnonzero(ok)
    sw = np.sqrt(w[rows])
    z = u[rows] / h
    design = np.stack([z**j for j in range(p)], axis=-1) * sw[..., None]
    rhs = sw * y[None, :]
    q, r = np.linalg.qr(design)
    diag = np.abs(np.diagonal(r, axis1=-2, axis2=-1))
    tol = max(n, p) * np.finfo(float).eps * diag.max(axis=1)
    full_rank = np.all(diag > tol[:, None], axis=1)
    qtb = np.einsum("mnp,mn->mp", q, rhs)
    good = rows[full_rank]
    if good.size:
        coef = np.linalg.solve(r[full_rank], qtb[full_rank][..., None])[..., 0]
        vals[good] = coef[:, 0]
    ok[rows[~full_rank]] = False
    ok &= np.isfinite(vals)
    return vals, ok


def local_poly_predict(data: Dataset, degree: int, h: float, kernel: Kernel, x0s, leave_one_out=False):
    """Vectorised local polynomial intercepts at ``x0s``.

    Returns ``(values, defined)``; undefined entries of ``values`` are NaN.
    With ``leave_one_out`` the i-th row omits observation i (``x0s`` must then
    be ``data.x``).
    """
    if degree not in (0, 1, 2, 3):
        raise ValueError(f"degree must be 0..3, got {degree}")
    u, w = kernel_weight_matrix(data.x, x0s, h, kernel, leave_one_out)
    if degree == 0:
        return _ratio_fit(w, np.ones_like(u), data.y)
    return _poly_fit(u, w, data.y, degree, h)


def de1k_predict(data: Dataset, k: int, lam: float, h: float, kernel: Kernel, x0s, leave_one_out=False):
    u, w = kernel_weight_matrix(data.x, x0s, h, kernel, leave_one_out)
    return _ratio_fit(w, taylor_weights(u, k, lam), data.y)


def local_poly_fit(data: Dataset, degree: int, h: float, kernel: Kernel, x0: float) -> float:
    """Intercept of the kernel-weighted degree-``degree`` polynomial fit centred at ``x0``.

    Degree 0 is Nadaraya-Watson, 1 local linear, 2 local quadratic, 3 local cubic.
    """
    vals, ok = local_poly_predict(data, degree, h, kernel, [x0])
    if not ok[0]:
        raise UndefinedAtPoint(x0, f"degree-{degree} weighted fit is singular or underdetermined")
    return float(vals[0])


def de1k_fit(data: Dataset, k: int, lam: float, h: float, kernel: Kernel, x0: float) -> float:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in 1..{MAX_K}, got {k}")
    vals, ok = de1k_predict(data, k, lam, h, kernel, [x0])
    if not ok[0]:
        raise UndefinedAtPoint(x0, "DE1-k denominator below floor")
    return float(vals[0])


def predict(method: Method, data: Dataset, h: float | None, kernel: Kernel, x0s, leave_one_out=False):
    """Evaluate any supported estimator at ``x0s``; returns ``(values, defined)``.

    SUBEXP methods take log-scale data (x, log y) and return log-scale fits.
    NLS methods ignore ``h`` and do not support leave-one-out.
    """
    x0s = np.atleast_1d(np.asarray(x0s, dtype=float))
    tag = method.tag
    if tag in POLY_DEGREES:
        return local_poly_predict(data, POLY_DEGREES[tag], h, kernel, x0s, leave_one_out)
    if tag == "DE1":
        return de1k_predict(data, method.k, method.lam, h, kernel, x0s, leave_one_out)

    from . import growth

    if tag == "SUBEXP":
        return growth.local_subexp_predict(data, method.k, method.lam, method.alpha, h, kernel, x0s, leave_one_out)
    if leave_one_out:
        raise ValueError(f"{tag} is a global fit; leave-one-out is not supported")
    if tag == "NLS":
        c, lam = growth.fit_nls_exponential(data)
        vals = c * np.exp(lam * x0s)
    else:
        law = growth.GrowthLaw("SUBEXP", method.lam, method.alpha)
        vals = growth.subexp_log_solution(law, x0s)
    ok = np.isfinite(vals)
    return np.where(ok, vals, np.nan), ok


def fit_curve(data: Dataset, method: Method, h: float | None, kernel: Kernel = GAUSSIAN, grid=None) -> FitCurve:
    """Apply a pointwise estimator over ``grid`` and flag undefined points.

    Raises
    ------
    UndefinedAtPoint
        If the estimate is undefined at every grid point.
    """
    grid = np.atleast_1d(np.asarray(data.x if grid is None else grid, dtype=float))
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    vals, ok = predict(method, data, h, kernel, grid)
    if not ok.any():
        raise UndefinedAtPoint(float(grid[0]), f"{method.label} undefined at all {grid.size} grid points")
    params = {k: v for k, v in (("k", method.k), ("lam", method.lam), ("alpha", method.alpha)) if v is not None}
    if method.tag in POLY_DEGREES or method.tag.startswith("NLS"):
        params.pop("k", None)
    return FitCurve(grid=grid, values=vals, defined=ok, h=h, method=method.label, params=params)

