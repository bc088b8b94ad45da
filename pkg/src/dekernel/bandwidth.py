"""Bandwidth selection: leave-one-out cross-validation and a spacing rule of thumb."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SelectionError
from .kernels import GAUSSIAN, Kernel
from .localfit import Dataset, Method, predict

DEFAULT_GRID_SIZE = 25


@dataclass(frozen=True)
class BandwidthGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("bandwidth grid is empty")
        if vals[0] <= 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("bandwidth grid must be strictly increasing and positive")
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Selection:
    h: float
    score: float
    scores: tuple[float, ...]
    grid: BandwidthGrid
    n_undefined: int

    def __iter__(self):
        # unpacks as (h, score)
        return iter((self.h, self.score))


def rot_bandwidth(data: Dataset) -> float:
    """Half the median gap between successive sorted design points."""
    x = np.sort(data.x)
    if x.size < 2 or x[0] == x[-1]:
        raise ValueError("rule-of-thumb bandwidth needs at least two distinct x values")
    return 0.5 * float(np.median(np.diff(x)))


def default_grid(data: Dataset, size: int = DEFAULT_GRID_SIZE) -> BandwidthGrid:
    """Log-spaced grid from a quarter of the rule-of-thumb bandwidth to twice the range of x."""
    lo = 0.25 * rot_bandwidth(data)
    hi = 2.0 * float(np.ptp(data.x))
    if lo <= 0:
        # median gap is zero when most x are tied
        lo = hi / 1000.0
    return BandwidthGrid(tuple(np.geomspace(lo, hi, size)))


def cv_score(data: Dataset, method: Method, h: float, kernel: Kernel = GAUSSIAN):
    """Leave-one-out squared prediction error at bandwidth ``h``.

    Observations whose held-out fit is undefined are charged their squared
    deviation from the full-sample mean.  Returns ``(score, n_undefined)``;
    the score is ``inf`` when every held-out fit is undefined.
    """
    vals, ok = predict(method, data, h, kernel, data.x, leave_one_out=True)
    if not ok.any():
        return np.inf, data.n
    resid = np.where(ok, data.y - np.where(ok, vals, 0.0), data.y - data.y.mean())
    return float(resid @ resid), int((~ok).sum())


def loocv_select(data: Dataset, method: Method, kernel: Kernel = GAUSSIAN, grid: BandwidthGrid | None = None) -> Selection:
    """Pick the grid bandwidth with the smallest leave-one-out score.

    Ties go to the smaller bandwidth.

    Raises
    ------
    SelectionError
        If no bandwidth gives a finite score.
    """
    if data.n < 3:
        raise SelectionError(f"leave-one-out selection needs n >= 3, got {data.n}")
    if grid is None:
        grid = default_grid(data)
    scores, undef = [], []
    for h in grid:
        s, u = cv_score(data, method, h, kernel)
        scores.append(s)
        undef.append(u)
    best = None
    for i, s in enumerate(scores):
        if np.isfinite(s) and (best is None or s < scores[best]):
            best = i
    if best is None:
        raise SelectionError(f"{method.label}: every bandwidth gives all-undefined leave-one-out fits")
    return Selection(h=grid.values[best], score=scores[best], scores=tuple(scores), grid=grid, n_undefined=undef[best])
