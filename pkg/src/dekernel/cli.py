"""Command-line front end.

Commands: ``fit``, ``simulate``, ``asymptotics``, ``variance-ratio``,
``tumor-demo`` and ``tumor-pipeline``.  Exit status is 0 on success, 2 for
bad input (unreadable or malformed files, invalid flags) and 3 when an
estimation or numerical step fails.  Machine-readable numbers are written
with 17 significant digits, CSV files use LF line endings, and all
randomness is derived from ``--seed``.  The ``DEKERNEL_THREADS`` environment
variable sets the number of worker processes for replicate loops.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    TABLE4_METHODS,
    TABLE5_METHODS,
    AsymptoticSpec,
    MisspecifiedTruth,
    beta_density,
    de1k_variance,
    misspecified_bias,
    table4_bias_variance,
    uniform_density,
    variance_ratio_study,
)
from .bandwidth import BandwidthGrid, default_grid, loocv_select
from .errors import DekernelError
from .growth import GrowthLaw, estimate_alpha, estimate_lambda_subexp, fit_nls_exponential, loglinear_fit
from .kernels import KERNELS, get_kernel, kernel_moments
from .localfit import Dataset, Method, fit_curve
from .simlab import STUDY_METHODS, LambdaMode, Scenario, emit_tables, mad_dump_rows, run_study
from .tumor import TIME, PipelineConfig, TumorData, run_tumor_pipeline, sparse_demo
from .tumor import to_csv as tumor_to_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
THREADS_ENV = "DEKERNEL_THREADS"
DIGITS = 17


class InputError(Exception):
    """Bad user input; ``line`` is the 1-based line number in the input file, if any."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


# ---------------------------------------------------------------- I/O helpers


def fmt(v) -> str:
    if v is None:
        return "NA"
    v = float(v)
    return "NA" if not math.isfinite(v) else format(v, f".{DIGITS}g")


def read_xy_csv(path, headers=(("x", "y"),)) -> Dataset:
    """Read a two-column numeric CSV with one of the accepted header rows."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    reader = csv.reader(io.StringIO(text))
    xs, ys = [], []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if not header_seen:
            if tuple(c.lower() for c in cells) not in headers:
                expected = " or ".join(",".join(h) for h in headers)
                raise InputError(f"expected header {expected}, got {','.join(cells)}", line)
            header_seen = True
            continue
        if len(cells) != 2:
            raise InputError(f"expected 2 columns, got {len(cells)}", line)
        try:
            x, y = float(cells[0]), float(cells[1])
        except ValueError:
            raise InputError(f"non-numeric value in {','.join(cells)}", line) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError("non-finite value", line)
        xs.append(x)
        ys.append(y)
    if not header_seen:
        raise InputError("empty file", 1)
    if len(xs) < 2:
        raise InputError(f"need at least 2 data rows, got {len(xs)}")
    return Dataset(xs, ys)


def write_text(path, text: str):
    """Write ``text`` to ``path`` (UTF-8, LF) or to stdout when ``path`` is None or '-'."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer, bool)):
        return obj if isinstance(obj, bool) else int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_sidecar(output, payload: dict, sidecar=None):
    """JSON next to ``output`` (same stem, ``.json``), or at ``sidecar`` if given."""
    if sidecar is None:
        if output is None or str(output) == "-":
            return
        sidecar = Path(output).with_suffix(".json")
    write_text(sidecar, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def worker_count(flag) -> int:
    if flag is not None:
        return max(1, flag)
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def text_table(header, rows) -> str:
    cells = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    lines = ["  ".join(c.rjust(w) if j else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths))) for r in cells]
    return "\n".join(lines) + "\n"


def emit_rows(args, header, rows, text_decimals=4):
    """Write numeric rows as CSV (17 digits) or as an aligned text table."""
    if args.format == "csv":
        text = rows_to_csv(header, [[c if isinstance(c, str) else fmt(c) for c in r] for r in rows])
    else:
        def cell(c):
            if isinstance(c, str):
                return c
            return "NA" if c is None or not math.isfinite(c) else f"{c:.{text_decimals}f}"

        text = text_table(header, [[cell(c) for c in r] for r in rows])
    write_text(args.output, text)


# ---------------------------------------------------------------- commands


def _fit_grid(args, data: Dataset):
    if args.grid_size is None:
        return np.unique(data.x)
    if args.grid_size < 1:
        raise InputError("--grid-size must be >= 1")
    lo = data.x.min() if args.grid_from is None else args.grid_from
    hi = data.x.max() if args.grid_to is None else args.grid_to
    return np.linspace(lo, hi, args.grid_size)


def cmd_fit(args) -> int:
    data = read_xy_csv(args.input, headers=(("x", "y"), ("time", "volume")))
    kernel = get_kernel(args.kernel)
    grid = _fit_grid(args, data)
    tag = args.method.upper()
    info = {"method": tag, "kernel": kernel.name, "n": data.n, "input": str(args.input)}
    work = data
    scale = "original"

    if tag == "DE1":
        lam = args.lam
        if lam is None:
            lam = loglinear_fit(data)[1]
            info["lambda_source"] = "loglinear estimate"
        else:
            info["lambda_source"] = "given"
        method = Method("DE1", k=args.k, lam=lam)
        info["lambda"] = lam
    elif tag == "SUBEXP":
        if np.any(data.y <= 0) or np.any(data.x <= 0):
            raise InputError("subexp needs positive x and y")
        alpha = estimate_alpha(data) if args.alpha is None else args.alpha
        lam = estimate_lambda_subexp(data, alpha) if args.lam is None else args.lam
        method = Method("SUBEXP", k=args.k, lam=lam, alpha=alpha)
        info.update(alpha=alpha, **{"lambda": lam}, order=args.k)
        work = Dataset(data.x, np.log(data.y))
        scale = "log"
    elif tag == "NLS":
        c, lam = fit_nls_exponential(data)
        method = Method("NLS")
        info.update(scale_estimate=c, **{"lambda": lam})
    else:
        method = Method(tag)

    h = args.h
    if method.needs_bandwidth:
        if h is None:
            grid_h = None if args.h_grid is None else BandwidthGrid(tuple(args.h_grid))
            sel = loocv_select(work, method, kernel, grid_h or default_grid(work))
            h = sel.h
            info["selection"] = {
                "criterion": "loocv",
                "grid": list(sel.grid.values),
                "scores": list(sel.scores),
                "score": sel.score,
                "n_undefined": sel.n_undefined,
            }
        elif not h > 0:
            raise InputError(f"--h must be positive, got {h}")
        else:
            info["selection"] = {"criterion": "given"}
    else:
        h = None
    curve = fit_curve(work, method, h, kernel, grid)
    values = curve.values
    if scale == "log" and not args.log_output:
        values = np.exp(values)
    info.update(h=h, label=curve.method, output_scale="log" if scale == "log" and args.log_output else "original")
    info["n_undefined"] = int((~curve.defined).sum())
    rows = [(fmt(g), fmt(v) if ok else "NA", "1" if ok else "0") for g, v, ok in zip(curve.grid, values, curve.defined)]
    write_text(args.output, rows_to_csv(("grid", "fitted", "defined"), rows))
    write_sidecar(args.output, info, args.sidecar)
    return EXIT_OK


def _parse_list(raw, conv, name):
    try:
        return [conv(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse {name} list {raw!r}") from None


def cmd_simulate(args) -> int:
    scenarios = _parse_list(args.scenario, int, "--scenario")
    sizes = _parse_list(args.n, int, "--n")
    methods = tuple(_parse_list(args.methods, str, "--methods")) if args.methods else STUDY_METHODS
    mode = LambdaMode.known(args.lam) if args.lambda_mode == "known" else LambdaMode.estimate()
    kernel = get_kernel(args.kernel)
    workers = worker_count(args.workers)
    reports = []
    for n in sizes:
        for s in scenarios:
            sc = Scenario(s, n=n, design=args.design, noise_sd=args.noise)
            reports.append(
                run_study(sc, methods, args.replicates, args.seed, lambda_mode=mode, kernel=kernel, workers=workers)
            )
    doc = emit_tables(reports)
    out = None if args.output is None else Path(args.output)
    ext = "csv" if args.format == "csv" else "txt"
    render = (lambda w: doc.to_csv(w, DIGITS)) if args.format == "csv" else (lambda w: doc.to_text(w, 2))
    if out is None:
        write_text(None, "# mean MAD x 1000\n" + render("mean") + "# standard error x 1000\n" + render("se"))
    else:
        write_text(out / f"mean.{ext}", render("mean"))
        write_text(out / f"se.{ext}", render("se"))
        write_sidecar(None, _simulate_info(args, reports, mode, methods), out / "run.json")
    if args.mad_dump:
        rows = [(s, n, d, m, r, fmt(v)) for rep in reports for s, n, d, m, r, v in mad_dump_rows(rep)]
        write_text(args.mad_dump, rows_to_csv(("scenario", "n", "design", "method", "replicate", "mad"), rows))
    return EXIT_OK


def _simulate_info(args, reports, mode, methods):
    cols = {}
    for rep in reports:
        cols[rep.scenario.column] = {
            m: {
                "failures": res.failures,
                "mean_mad": res.mean_mad,
                "se_mad": res.se_mad,
                "median_bandwidth": float(np.nanmedian(res.bandwidths)) if res.bandwidths and not all(
                    math.isnan(b) for b in res.bandwidths) else None,
            }
            for m, res in rep.results.items()
        }
    return {
        "design": args.design,
        "lambda_mode": str(mode),
        "methods": list(methods),
        "noise_sd": args.noise,
        "replicates": args.replicates,
        "seed": args.seed,
        "kernel": args.kernel,
        "columns": cols,
    }


def _density(args):
    if args.density == "uniform":
        return uniform_density(0.0, 1.0)
    return beta_density(args.beta_a, args.beta_b)


def cmd_asymptotics(args) -> int:
    kernel = get_kernel(args.kernel)
    moments = kernel_moments(kernel, 6)
    density = _density(args)
    x, h = args.x, args.h
    rows = []
    if args.misspecified:
        truth = MisspecifiedTruth(args.lambda1, args.lambda2)
        methods = _parse_list(args.methods, str, "--methods") if args.methods else list(TABLE5_METHODS)
        var = de1k_variance(args.sigma, args.n, h, moments, density, x)
        for m in methods:
            rows.append((m, misspecified_bias(m, truth, density, moments, h, x, args.corrected), var))
    else:
        law = GrowthLaw("EXP", args.lam)
        g = args.scale * math.exp(args.lam * x)
        methods = _parse_list(args.methods, str, "--methods") if args.methods else list(TABLE4_METHODS)
        for m in methods:
            bias, var = table4_bias_variance(AsymptoticSpec(m, law, args.sigma, args.n, h), g, density, moments, x, kernel)
            rows.append((m, bias, var))
    emit_rows(args, ("method", "bias", "variance"), rows, text_decimals=6)
    return EXIT_OK


def cmd_variance_ratio(args) -> int:
    kernel = get_kernel(args.kernel)
    if args.seeds < 1:
        raise InputError("--seeds must be >= 1")
    rows, pooled = [], []
    for i in range(args.seeds):
        res = variance_ratio_study(args.n, args.lam, args.k, args.h, kernel, seed=(args.seed, i))
        rows.append((str(i), res.mean, res.min, res.max, res.h, str(res.n_excluded)))
        pooled.append(res)
    means = np.array([r.mean for r in pooled])
    rows.append(
        ("all", float(means.mean()), min(r.min for r in pooled), max(r.max for r in pooled), math.nan,
         str(sum(r.n_excluded for r in pooled)))
    )
    emit_rows(args, ("replicate", "mean", "min", "max", "h", "excluded"), rows)
    return EXIT_OK


def cmd_tumor_demo(args) -> int:
    if not args.h > 0:
        raise InputError(f"--h must be positive, got {args.h}")
    if args.export_data:
        write_text(args.export_data, tumor_to_csv(TumorData().full()))
    curves = sparse_demo(args.h, get_kernel(args.kernel), args.grid_size, args.lam)
    rows = []
    for label, c in curves.items():
        rows.extend((label, fmt(g), fmt(v) if ok else "NA", "1" if ok else "0") for g, v, ok in zip(c.grid, c.values, c.defined))
    write_text(args.output, rows_to_csv(("method", "grid", "fitted", "defined"), rows))
    write_sidecar(
        args.output,
        {"h": args.h, "kernel": args.kernel, "grid_size": args.grid_size,
         "lambda": curves["DE1-1"].params.get("lam"), "range": [TIME[0], TIME[-1]]},
        args.sidecar,
    )
    return EXIT_OK


def cmd_tumor_pipeline(args) -> int:
    config = PipelineConfig(
        truth_bandwidth=args.truth_bandwidth,
        replicates=args.replicates,
        noise_sd=args.noise_sd,
        sd_ddof=args.sd_ddof,
        reestimate_growth=not args.fixed_growth,
        nls_free_start=not args.nls_zero_start,
        kernel=get_kernel(args.kernel),
    )
    report = run_tumor_pipeline(config, seed=args.seed)
    if args.format == "csv":
        write_text(args.output, report.to_csv(DIGITS))
    else:
        write_text(args.output, report.to_text())
    alphas = [a for a, _ in report.growth_params if a is not None]
    lams = [lam for _, lam in report.growth_params if lam is not None]
    write_sidecar(
        args.output,
        {
            "residual_sd": report.residual_sd,
            "noise_sd": report.noise_sd,
            "replicates": report.replicates,
            "seed": report.seed,
            "failures": report.failures,
            "truth": list(report.truth),
            "mean_alpha": float(np.mean(alphas)) if alphas else None,
            "mean_lambda": float(np.mean(lams)) if lams else None,
            "growth_params": [list(p) for p in report.growth_params],
        },
        args.sidecar,
    )
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _positive_int(raw):
    v = int(raw)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dekernel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    kernels = sorted(KERNELS)

    def common(sp, fmt_flag=False, sidecar=False):
        sp.add_argument("-o", "--output", help="output file ('-' or omitted: stdout)")
        sp.add_argument("--kernel", choices=kernels, default="gaussian")
        if fmt_flag:
            sp.add_argument("--format", choices=("csv", "text"), default="csv")
        if sidecar:
            sp.add_argument("--sidecar", help="JSON sidecar path (default: output with .json suffix)")

    f = sub.add_parser("fit", help="fit one estimator to an x,y CSV file")
    f.add_argument("input", help="CSV with header x,y")
    f.add_argument("--method", choices=("nw", "ll", "lq", "lc", "de1", "subexp", "nls"), default="nw")
    f.add_argument("--k", type=int, default=1, help="DE1 Taylor degree (1-5) or subexp order (1-2)")
    f.add_argument("--lambda", dest="lam", type=float, help="growth rate (estimated if omitted)")
    f.add_argument("--alpha", type=float, help="sub-exponential power (estimated if omitted)")
    f.add_argument("--h", type=float, help="bandwidth (leave-one-out CV if omitted)")
    f.add_argument("--h-grid", type=float, nargs="+", help="candidate bandwidths for CV")
    f.add_argument("--grid-size", type=int, help="evaluate on an even grid of this size (default: design points)")
    f.add_argument("--grid-from", type=float)
    f.add_argument("--grid-to", type=float)
    f.add_argument("--log-output", action="store_true", help="subexp: write log-scale fitted values")
    common(f, sidecar=True)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="Monte Carlo comparison of the estimator battery")
    s.add_argument("--scenario", default="1", help="comma list of scenario ids (1, 2, 3)")
    s.add_argument("--n", default="25", help="comma list of sample sizes")
    s.add_argument("--design", choices=("uniform", "beta"), default="uniform")
    s.add_argument("--replicates", type=_positive_int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--methods", help="comma list of method labels (default: all ten)")
    s.add_argument("--lambda-mode", choices=("known", "estimate"), default="known")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0, help="known growth rate")
    s.add_argument("--workers", type=_positive_int, help=f"worker processes (default: ${THREADS_ENV} or 1)")
    s.add_argument("--mad-dump", help="CSV file for per-replicate MAD values")
    s.add_argument("-o", "--output", help="output directory for mean/se tables (omitted: stdout)")
    s.add_argument("--kernel", choices=kernels, default="gaussian")
    s.add_argument("--format", choices=("csv", "text"), default="csv")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("asymptotics", help="leading-order bias and variance at one point")
    a.add_argument("--lambda", dest="lam", type=float, default=1.0)
    a.add_argument("--scale", type=float, default=1.0, help="g(x) = scale * exp(lambda x)")
    a.add_argument("--misspecified", action="store_true", help="truth exp(lambda1 x - lambda2 x^2)")
    a.add_argument("--lambda1", type=float, default=1.0)
    a.add_argument("--lambda2", type=float, default=0.0)
    a.add_argument("--corrected", action="store_true", help="use -2 lambda2 as the curvature term")
    a.add_argument("--x", type=float, default=0.5)
    a.add_argument("--h", type=float, default=0.1)
    a.add_argument("--n", type=int, default=100)
    a.add_argument("--sigma", type=float, default=0.1)
    a.add_argument("--density", choices=("uniform", "beta"), default="uniform")
    a.add_argument("--beta-a", type=float, default=1.0)
    a.add_argument("--beta-b", type=float, default=0.5)
    a.add_argument("--methods", help="comma list of rows")
    common(a, fmt_flag=True)
    a.set_defaults(func=cmd_asymptotics)

    v = sub.add_parser("variance-ratio", help="finite-sample DE1-k / NW variance ratio study")
    v.add_argument("--n", type=int, default=10)
    v.add_argument("--lambda", dest="lam", type=float, default=1.0)
    v.add_argument("--k", type=int, default=1)
    v.add_argument("--h", type=float, help="bandwidth (default: rule of thumb per draw)")
    v.add_argument("--seeds", type=int, default=100, help="number of designs drawn")
    v.add_argument("--seed", type=int, default=0)
    common(v, fmt_flag=True)
    v.set_defaults(func=cmd_variance_ratio)

    d = sub.add_parser("tumor-demo", help="four smoothers on the sparse tumour data")
    d.add_argument("--h", type=float, default=3.5)
    d.add_argument("--grid-size", type=_positive_int, default=201)
    d.add_argument("--lambda", dest="lam", type=float, help="override the loglinear growth rate")
    d.add_argument("--export-data", help="also write the full data as time,volume CSV")
    common(d, sidecar=True)
    d.set_defaults(func=cmd_tumor_demo)

    t = sub.add_parser("tumor-pipeline", help="log-scale simulation on the tumour data")
    t.add_argument("--replicates", type=_positive_int, default=100)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--truth-bandwidth", type=float, default=2.38)
    t.add_argument("--noise-sd", type=float, help="replicate noise sd (default: residual sd)")
    t.add_argument("--sd-ddof", type=int, default=1, help="denominator n - ddof for the residual sd")
    t.add_argument("--fixed-growth", action="store_true", help="estimate alpha, lambda once from the sparse data")
    t.add_argument("--nls-zero-start", action="store_true", help="global solution with g0 = 0 instead of fitted")
    common(t, fmt_flag=True, sidecar=True)
    t.set_defaults(func=cmd_tumor_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"dekernel: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DekernelError as exc:
        print(f"dekernel: {type(exc).__name__}: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"dekernel: diagnostics: {json.dumps(_jsonable(diag), sort_keys=True)}", file=sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as exc:
        print(f"dekernel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"dekernel: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
