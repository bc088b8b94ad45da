"""Monte Carlo comparison of the estimator battery on simulated growth curves.

Each replicate draws its own generator from ``(seed, replicate)`` so results
do not depend on execution order or on how many workers are used.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import default_grid, loocv_select
from .errors import DekernelError
from .growth import fit_nls_exponential, fit_nls_scale, loglinear_fit
from .kernels import GAUSSIAN, Kernel
from .localfit import Dataset, Method, predict

STUDY_METHODS = ("NW", "LL", "LQ", "LC", "DE1-1", "DE1-2", "DE1-3", "DE1-4", "DE1-5", "NLS")
DESIGNS = ("uniform", "beta")
BETA_SHAPE = (1.0, 0.5)
NOISE_SD = 0.1
DAMPING = {1: 0.0, 2: 0.025, 3: 0.1}


@dataclass(frozen=True)
class Scenario:
    id: int
    n: int = 25
    design: str = "uniform"
    noise_sd: float = NOISE_SD

    def __post_init__(self):
        if self.id not in DAMPING:
            raise ValueError(f"scenario id must be 1, 2 or 3, got {self.id}")
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.n < 1 or self.noise_sd < 0:
            raise ValueError("need n >= 1 and noise_sd >= 0")

    def mean(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x - DAMPING[self.id] * x * x)

    @property
    def column(self) -> str:
        return f"Scen. {self.id} ({self.n})"


@dataclass(frozen=True)
class LambdaMode:
    """Where DE1-k estimators get lambda: a known value or a per-replicate loglinear estimate."""

    kind: str = "known"
    value: float = 1.0

    @classmethod
    def known(cls, value=1.0):
        return cls("known", float(value))

    @classmethod
    def estimate(cls):
        return cls("estimate", math.nan)

    def __str__(self):
        return f"known({self.value:g})" if self.kind == "known" else "estimate"


def method_from_label(label: str, lam: float | None = None) -> Method:
    if label.startswith("DE1-"):
        return Method("DE1", k=int(label[4:]), lam=lam)
    return Method(label)


def draw_dataset(scenario: Scenario, seed) -> Dataset:
    """Sample a design on [0, 1], evaluate the scenario mean and add gaussian noise.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    rng = np.random.default_rng(seed)
    if scenario.design == "uniform":
        x = rng.uniform(0.0, 1.0, scenario.n)
    else:
        x = rng.beta(*BETA_SHAPE, size=scenario.n)
    noise = rng.normal(0.0, 1.0, scenario.n) * scenario.noise_sd
    return Dataset(x, scenario.mean(x) + noise)


def mad_score(fitted, truth) -> float:
    """Median absolute difference between fitted and true mean values."""
    fitted = np.asarray(fitted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if fitted.shape != truth.shape:
        raise ValueError(f"length mismatch: {fitted.size} vs {truth.size}")
    if fitted.size < 1:
        raise ValueError("mad_score needs at least one value")
    return float(np.median(np.abs(fitted - truth)))


@dataclass(frozen=True)
class MethodResult:
    method: str
    mads: tuple[float, ...]
    bandwidths: tuple[float, ...]
    failures: int
    replicate_ids: tuple[int, ...] = ()

    @property
    def mean_mad(self) -> float:
        return float(np.mean(self.mads)) if self.mads else math.nan

    @property
    def se_mad(self) -> float:
        if len(self.mads) < 2:
            return math.nan
        return float(np.std(self.mads, ddof=1) / math.sqrt(len(self.mads)))


@dataclass(frozen=True)
class SimReport:
    scenario: Scenario
    lambda_mode: LambdaMode
    replicates: int
    seed: int
    results: dict = field(default_factory=dict)

    def __getitem__(self, label) -> MethodResult:
        return self.results[label]

    @property
    def methods(self):
        return tuple(self.results)


def _fit_one(data: Dataset, label: str, lam: float, kernel: Kernel, lambda_mode: LambdaMode):
    """Fitted values at the design points and the bandwidth used (None for NLS).

    NLS follows the lambda mode: with a known rate only the scale is fitted,
    otherwise scale and rate are fitted jointly.
    """
    if label == "NLS":
        if lambda_mode.kind == "known":
            return fit_nls_scale(data, lam) * np.exp(lam * data.x), None
        c, rate = fit_nls_exponential(data)
        return c * np.exp(rate * data.x), None
    method = method_from_label(label, lam)
    sel = loocv_select(data, method, kernel, default_grid(data))
    vals, ok = predict(method, data, sel.h, kernel, data.x)
    if not ok.all():
        raise DekernelError(f"{label} undefined at {int((~ok).sum())} design points")
    return vals, sel.h


def _run_replicate(args):
    scenario, labels, seed, rep, lambda_mode, kernel = args
    data = draw_dataset(scenario, (seed, rep))
    truth = scenario.mean(data.x)
    if lambda_mode.kind == "known":
        lam = lambda_mode.value
    else:
        try:
            lam = loglinear_fit(data)[1]
        except DekernelError:
            lam = None
    out = {}
    for label in labels:
        if lam is None and (label.startswith("DE1-") or label == "NLS"):
            out[label] = None
            continue
        try:
            vals, h = _fit_one(data, label, lam, kernel, lambda_mode)
        except DekernelError:
            out[label] = None
            continue
        out[label] = (mad_score(vals, truth), h)
    return out


def run_study(
    scenario: Scenario,
    methods=STUDY_METHODS,
    replicates: int = 100,
    seed: int = 0,
    lambda_mode: LambdaMode = LambdaMode.known(1.0),
    kernel: Kernel = GAUSSIAN,
    workers: int = 1,
) -> SimReport:
    """Simulate ``replicates`` datasets and score every method by MAD.

    Kernel methods choose their bandwidth per replicate by leave-one-out CV
    over the default grid and are evaluated at the replicate's design points.
    A method that fails on a replicate is counted, not scored.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    labels = tuple(methods)
    for label in labels:
        method_from_label(label, 1.0)
    jobs = [(scenario, labels, seed, r, lambda_mode, kernel) for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_run_replicate, jobs, chunksize=max(1, replicates // (4 * workers))))
    else:
        per_rep = [_run_replicate(j) for j in jobs]
    results = {}
    for label in labels:
        ok = [(r, rep[label]) for r, rep in enumerate(per_rep) if rep[label] is not None]
        results[label] = MethodResult(
            method=label,
            mads=tuple(c[0] for _, c in ok),
            bandwidths=tuple(math.nan if c[1] is None else c[1] for _, c in ok),
            failures=replicates - len(ok),
            replicate_ids=tuple(r for r, _ in ok),
        )
    return SimReport(scenario, lambda_mode, replicates, seed, results)


def mad_dump_rows(report: SimReport):
    """Per-replicate MAD rows ``(scenario, n, design, method, replicate, mad)``; failed fits are absent."""
    sc = report.scenario
    for label, res in report.results.items():
        ids = res.replicate_ids or range(len(res.mads))
        for i, mad in zip(ids, res.mads):
            yield sc.id, sc.n, sc.design, label, i, mad


@dataclass
class TableDocument:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    mean: np.ndarray
    se: np.ndarray
    scale: float = 1000.0

    def to_csv(self, which="mean", digits=17) -> str:
        data = self.mean if which == "mean" else self.se
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", *self.columns])
        for name, row in zip(self.rows, data):
            writer.writerow([name, *(_fmt(v, digits) for v in row)])
        return buf.getvalue()

    def to_text(self, which="mean", decimals=2) -> str:
        data = self.mean if which == "mean" else self.se
        cells = [[""] + list(self.columns)]
        for name, row in zip(self.rows, data):
            cells.append([name] + ["NA" if not np.isfinite(v) else f"{v:.{decimals}f}" for v in row])
        widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
        lines = ["  ".join(c.rjust(w) if j else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths))) for r in cells]
        return "\n".join(lines) + "\n"


def _fmt(v, digits):
    return "NA" if not np.isfinite(v) else format(float(v), f".{digits}g")


def emit_tables(reports) -> TableDocument:
    """Arrange reports into mean and SE tables scaled by 1000.

    Rows follow the standard battery order (unknown methods appended), columns
    run over sample size (descending) then scenario id.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("emit_tables needs at least one report")
    cols = {}
    for rep in reports:
        key = (-rep.scenario.n, rep.scenario.id)
        if key in cols:
            raise ValueError(f"duplicate report for {rep.scenario.column}")
        cols[key] = rep
    order = sorted(cols)
    columns = tuple(cols[k].scenario.column for k in order)
    seen = {m for rep in reports for m in rep.methods}
    rows = tuple(m for m in STUDY_METHODS if m in seen) + tuple(sorted(seen - set(STUDY_METHODS)))
    mean = np.full((len(rows), len(columns)), np.nan)
    se = np.full_like(mean, np.nan)
    missing = []
    for j, key in enumerate(order):
        rep = cols[key]
        for i, m in enumerate(rows):
            if m not in rep.results or not rep.results[m].mads:
                missing.append(f"{m} / {columns[j]}")
                continue
            mean[i, j] = 1000.0 * rep.results[m].mean_mad
            se[i, j] = 1000.0 * rep.results[m].se_mad
    if missing:
        warnings.warn(f"missing table cells emitted as NA: {', '.join(missing)}", stacklevel=2)
    return TableDocument(rows, columns, mean, se)
