"""Command-line front end: ``ellcov <subcommand> [options]``.

Every subcommand accepts ``--format {table,json,csv}``. Stochastic commands
take ``--seed``; its default is 42 unless ``ELLCOV_SEED`` is set.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .conditional import conditional_covariance, conditional_covariance_mc
from .diagnostics import check_normality, read_csv, write_csv
from .elliptical import EllipticalModel, benchmark, sample
from .errors import DataFormatError, EllCovError
from .families import family_from_spec
from .invariants import ProbabilitySubset, k_invariant, k_invariant_mc
from .partition import (
    equal_kprime_partition,
    equal_variance_partition,
    format_table1,
    format_table2,
    table1,
    table2,
)

SEED_ENV = "ELLCOV_SEED"
DEFAULT_DRAWS = 1_000_000


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"ellcov: {SEED_ENV} must be an integer, got {raw!r}")


def _vector(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix(text):
    try:
        return [[float(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected rows like '1,0;0,1', got {text!r}") from None


def _positive_int(text):
    try:
        value = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1 or value != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _clean(obj):
    """Make ``obj`` strict-JSON friendly (no NaN / inf, no numpy scalars)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, "" if obj is None else obj


def _emit(args, payload, text):
    payload = _clean(payload)
    if args.format == "json":
        out = json.dumps(payload, indent=2, allow_nan=False)
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["field", "value"])
        for key, value in _flatten(payload):
            writer.writerow([key, repr(value) if isinstance(value, float) else value])
        out = buf.getvalue().rstrip("\r\n")
    else:
        out = text
    print(out)


def _fmt_matrix(m, width=12, prec=6):
    m = np.atleast_2d(m)
    return "\n".join("  " + " ".join(f"{v:{width}.{prec}f}" for v in row) for row in m)


def _family_args(p, required=False):
    p.add_argument("--family", choices=["gaussian", "t"], default=None if required else "gaussian",
                   required=required, help="generator family")
    p.add_argument("--nu", type=float, help="degrees of freedom for --family t (inf = gaussian)")


def _family(args):
    return family_from_spec(args.family, args.nu)


def _load_model(args):
    if args.model:
        try:
            with open(args.model, encoding="utf-8") as fh:
                spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{args.model}: invalid JSON ({exc.msg})", line=exc.lineno) from None
        if spec.get("schema", 1) != 1:
            raise DataFormatError(f"unsupported model schema {spec.get('schema')!r}")
        for key in ("mu", "sigma"):
            if key not in spec:
                raise DataFormatError(f"model file lacks {key!r}")
        return EllipticalModel.from_dict(spec)
    if args.mu is None or args.sigma is None:
        raise EllCovError("give --model FILE or both --mu and --sigma")
    return EllipticalModel(args.mu, args.sigma, _family(args))


def _model_args(p):
    p.add_argument("--model", help='model JSON: {"schema": 1, "mu": [...], "sigma": [[...]], "family": {...}}')
    p.add_argument("--mu", type=_vector, help="inline location, e.g. 0,0")
    p.add_argument("--sigma", type=_matrix, help="inline covariance, e.g. '1,0.5;0.5,1'")
    _family_args(p)


# -- subcommands ------------------------------------------------------------


def cmd_k_invariant(args):
    family = _family(args)
    subset = ProbabilitySubset.parse(args.subset)
    if args.method == "mc":
        inv = k_invariant_mc(family, subset, args.draws, args.seed)
    else:
        inv = k_invariant(family, subset)
    payload = {"family": family.to_dict(), "subset": str(subset), **inv.to_dict()}
    lines = [
        f"family      {family}",
        f"subset      {subset}",
        f"method      {inv.method}",
        f"k           {inv.k:.6f}",
        f"k'          {inv.k_prime:.6f}",
        f"var_v1      {inv.var_v1:.6f}",
        f"err         {inv.err_estimate:.3g}",
    ]
    if inv.method == "monte-carlo":
        lines.append(f"count       {inv.count}")
    _emit(args, payload, "\n".join(lines))


def cmd_cond_cov(args):
    model = _load_model(args)
    spec = benchmark(model, args.a)
    if args.subset_values:
        lo, hi = (float(v) for v in args.subset_values.split(":"))
        subset = ProbabilitySubset.interval(spec.cdf(lo), spec.cdf(hi))
    else:
        subset = ProbabilitySubset.parse(args.subset or "0:1")
    rep = conditional_covariance(model, spec.a, subset)
    payload = rep.to_dict()
    lines = [
        f"family       {model.family}",
        f"subset       {subset}",
        f"P[B]         {rep.prob:.6f}",
        f"E_B[Y]       {rep.mean_y_b:.6f}",
        f"Var_B[Y]     {rep.var_y_b:.6f}",
        f"k(B)         {rep.k_b:.6f}",
        "beta",
        _fmt_matrix(rep.beta),
        "Var_B[X]",
        _fmt_matrix(rep.cond_cov),
        "Cov_B[X,Y]",
        _fmt_matrix(rep.cond_cross_cov),
        "Cor_B[X]",
        _fmt_matrix(rep.cond_cor),
    ]
    if args.oracle == "mc":
        mc = conditional_covariance_mc(model, spec.a, subset, args.draws, args.seed)
        payload["mc"] = mc.to_dict()
        z = (rep.cond_cov - mc.cond_cov) / mc.cov_stderr
        payload["mc"]["z_scores"] = z
        lines.append(f"Monte Carlo ({args.draws} draws, seed {args.seed}, {mc.count} in B)")
        lines.append(f"  {'i':>3} {'j':>3} {'analytic':>12} {'mc':>12} {'stderr':>12} {'z':>8}")
        for i in range(model.n):
            for j in range(i, model.n):
                lines.append(
                    f"  {i:>3} {j:>3} {rep.cond_cov[i, j]:12.6f} {mc.cond_cov[i, j]:12.6f} "
                    f"{mc.cov_stderr[i, j]:12.3g} {z[i, j]:8.2f}"
                )
        lines.append(f"  k(B) mc {mc.k_b:.6f} +- {mc.k_b_stderr:.3g}")
    if rep.psd_warning:
        lines.append("warning: conditional covariance has a negative eigenvalue")
    _emit(args, payload, "\n".join(lines))


def cmd_partition(args):
    if args.emit == "table1":
        results = table1()
        _emit(args, [r.to_dict() for r in results], format_table1(results))
        return
    if args.emit == "table2":
        rows = table2()
        payload = [{"nu": nu, **r.to_dict()} for nu, r in rows]
        _emit(args, payload, format_table2(rows))
        return
    if args.mode == "variance":
        if args.k is None:
            raise EllCovError("--mode variance needs --k")
        res = equal_variance_partition(args.k)
    else:
        if args.cells is None:
            raise EllCovError("--mode kprime needs --cells")
        res = equal_kprime_partition(_family(args), args.cells)
    label = "variance" if res.mode == "variance" else "K'"
    lines = [
        f"mode        {res.mode}",
        f"family      {res.family}",
        "levels      " + " ".join(f"{v:.3f}" for v in res.levels),
        f"{'cell ' + label:<12}" + " ".join(f"{v:.6f}" for v in res.cell_values),
        f"residual    {res.residual:.3g}",
        f"iterations  {res.iterations}",
    ]
    _emit(args, res.to_dict(), "\n".join(lines))


def cmd_check_normality(args):
    if args.data == "-":
        data = read_csv(sys.stdin)
    else:
        data = read_csv(args.data)
    rep = check_normality(data, args.a, args.k, args.bootstrap, args.seed, args.compare)
    lines = [
        f"rows        {data.rows}",
        "levels      " + " ".join(f"{v:.6f}" for v in rep.partition.levels),
        "counts      " + " ".join(str(c) for c in rep.cell_counts),
        f"statistic   {rep.statistic:.6f}  ({rep.compare})",
    ]
    for q, v in rep.bootstrap_quantiles or ():
        flag = "  <- exceeded" if rep.statistic > v else ""
        lines.append(f"bootstrap q{q:.2f} {v:.6f}{flag}")
    for i, m in enumerate(rep.cell_covariances):
        lines.append(f"cell {i}")
        lines.append(_fmt_matrix(m))
    _emit(args, rep.to_dict(), "\n".join(lines))


def cmd_sample(args):
    model = _load_model(args)
    data = sample(model, args.count, args.seed).data
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(data, fh)
    else:
        write_csv(data, sys.stdout)


# -- parser -----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ellcov",
        description="Conditional covariance matrices of elliptical vectors on quantile sets of a benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    def common(p, stochastic=False):
        p.add_argument("--format", choices=["table", "json", "csv"], default="table")
        if stochastic:
            p.add_argument("--seed", type=int, default=seed, help=f"RNG seed (default 42 or ${SEED_ENV})")
            p.add_argument("--draws", type=_positive_int, default=DEFAULT_DRAWS)

    p = sub.add_parser("k-invariant", help="K and K' invariants of a probability subset")
    _family_args(p)
    p.add_argument("--subset", required=True, help="lo:hi[,lo:hi...] inside [0, 1]")
    p.add_argument("--method", choices=["quadrature", "mc"], default="quadrature")
    common(p, stochastic=True)
    p.set_defaults(func=cmd_k_invariant)

    p = sub.add_parser("cond-cov", help="conditional covariance / correlation matrices")
    _model_args(p)
    p.add_argument("--a", type=_vector, required=True, help="benchmark weights, e.g. 1,1")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--subset", help="probability-space subset lo:hi[,lo:hi...] (default 0:1)")
    g.add_argument("--subset-values", help="value-space interval lo:hi for Y (use --subset-values=-inf:0)")
    p.add_argument("--oracle", choices=["none", "mc"], default="none")
    common(p, stochastic=True)
    p.set_defaults(func=cmd_cond_cov)

    p = sub.add_parser("partition", help="equal-variance or equal-K' quantile partitions")
    p.add_argument("--mode", choices=["variance", "kprime"], default="variance")
    p.add_argument("--k", type=int, help="number of levels for --mode variance")
    p.add_argument("--cells", type=int, help="number of cells for --mode kprime")
    _family_args(p)
    p.add_argument("--emit", choices=["table1", "table2"], help="print a full reference table")
    common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("check-normality", help="conditional-covariance normality diagnostic on CSV data")
    p.add_argument("--data", required=True, help="CSV file ('-' for standard input)")
    p.add_argument("--a", type=_vector, help="benchmark weights (default all ones)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--bootstrap", type=int, default=0, help="Gaussian resamples (>= 200, 0 disables)")
    p.add_argument("--compare", choices=["covariance", "correlation"], default="covariance")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--format", choices=["table", "json", "csv"], default="table")
    p.set_defaults(func=cmd_check_normality)

    p = sub.add_parser("sample", help="draw a CSV sample from a model")
    _model_args(p)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", help="output CSV (default standard output)")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (EllCovError, OSError) as exc:
        print(f"ellcov {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
