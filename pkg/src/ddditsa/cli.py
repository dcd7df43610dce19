"""
Command-line front end.

Flag names follow the Stata ``itsa`` options so that an existing analysis
translates directly, e.g.::

    ddditsa fit --data smoking.csv --treatid 3 --contid 8 19 --contid2 4 \\
        --trperiod 1989 --lag 1 --posttrend --figure

Exit status is 0 on success, 2 on usage errors and 1 on data or numerical
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import datasets
from .design import DesignSpec, intervention_index
from .diagnostics import autocorr_report, suggest_lag
from .estimator import FitResult, fit
from .exceptions import DDDITSAError, SpecificationError
from .inference import balance_report, estimand_catalog, lincom, posttrend
from .panel import ColumnSchema, load_csv
from .report import (
    _estimand_row,
    _format_rows,
    emit_plot,
    fmt_fixed,
    fmt_p,
    render_table,
    results_document,
)
from .simulate import SimulationSpec, power_analysis

__all__ = ["main", "run", "build_parser"]


class UsageError(Exception):
    pass


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data and design")
    g.add_argument("--data", help=f"long-format CSV (default: Proposition 99 file from ${datasets.DATA_ENV})")
    g.add_argument("--unit-col", help="unit id column (default: unit, or state for the Proposition 99 layout)")
    g.add_argument("--time-col", help="time column")
    g.add_argument("--outcome-col", help="outcome column")
    g.add_argument("--treatid", nargs="+", help="treated unit id")
    g.add_argument("--contid", nargs="*", default=[], help="primary control unit ids")
    g.add_argument("--contid2", nargs="*", default=[], help="secondary control unit ids")
    g.add_argument("--trperiod", type=float, help="first post-intervention period")
    g.add_argument("--lag", type=int, default=0, help="Newey-West lag (default 0)")
    g.add_argument("--level", type=float, default=0.95, help="confidence level (default 0.95)")
    g.add_argument("--origin", type=int, default=0,
                   help="value of the post-intervention clock at the intervention period (default 0)")
    g.add_argument("--pool", action="store_true",
                   help="stack member units as separate series instead of averaging them")
    g.add_argument("--t-dist", action="store_true", help="use Student t instead of the normal")
    g.add_argument("--no-dof-adjust", action="store_true", help="drop the n/(n-k) scaling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddditsa", description="Single-, two- and three-group interrupted time series analysis."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the model and print the coefficient table")
    _add_data_flags(p)
    p.add_argument("--posttrend", action="store_true", help="append post-treatment trends")
    p.add_argument("--catalog", action="store_true", help="append every trend/level/DiD/DDD estimand")
    p.add_argument("--figure", nargs="?", const="itsa_figure", metavar="PREFIX",
                   help="write PREFIX.json and PREFIX.svg (default prefix itsa_figure)")
    p.add_argument("--save-fit", metavar="PATH", help="store the fit as JSON for later lincom calls")
    p.add_argument("--json", metavar="PATH", help="write fit and estimands as JSON")

    p = sub.add_parser("balance", help="baseline level and trend balance contrasts")
    _add_data_flags(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("posttrend", help="post-treatment trend of each group")
    _add_data_flags(p)
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("lincom", help="Wald test of a linear combination of coefficients")
    _add_data_flags(p)
    p.add_argument("--expr", required=True, help='e.g. "b7 - b11" or "_b[_z1_x_t1989] - _b[_z2_x_t1989]"')
    p.add_argument("--fit-file", metavar="PATH", help="stored fit from `fit --save-fit`")
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("diag", help="residual ACF/PACF and Breusch-Godfrey tests")
    _add_data_flags(p)
    p.add_argument("--max-lag", type=int, default=4)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--json", metavar="PATH")

    p = sub.add_parser("simulate", help="Monte Carlo rejection rate for one estimand")
    p.add_argument("--config", metavar="PATH", help="JSON file with SimulationSpec fields")
    p.add_argument("--beta", type=float, nargs=12, metavar="B", help="true b0..b11")
    p.add_argument("--rho", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--periods", type=int, dest="n_periods")
    p.add_argument("--intervention-index", type=int,
                   help="number of pre-intervention periods")
    p.add_argument("--units", type=int, nargs=3, metavar=("TREAT", "C1", "C2"), dest="units_per_group")
    p.add_argument("--unit-noise", type=float, dest="unit_noise_sd")
    p.add_argument("--reps", type=int, dest="replications")
    p.add_argument("--seed", type=int)
    p.add_argument("--lag", type=int, dest="hac_lag")
    p.add_argument("--target", default="ddd_trend", help="catalog key or b0..b11 (default ddd_trend)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", metavar="PATH")
    return parser


def _resolve_data_path(path: str | None) -> Path:
    if path is None:
        return datasets.find_prop99()
    p = Path(path)
    if not p.is_file() and not p.is_absolute():
        env = os.environ.get(datasets.DATA_ENV)
        if env and (Path(env) / p).is_file():
            return Path(env) / p
    if not p.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    return p


def _load_panel(args):
    path = _resolve_data_path(args.data)
    if args.unit_col or args.time_col or args.outcome_col:
        schema = ColumnSchema(
            unit=args.unit_col or "unit",
            time=args.time_col or "time",
            outcome=args.outcome_col or "outcome",
        )
        return load_csv(path, schema)
    try:
        return datasets.load_prop99(path)
    except ValueError:
        return load_csv(path)


def _spec_from_args(args, panel) -> DesignSpec:
    if not args.treatid:
        raise UsageError("--treatid is required")
    if args.trperiod is None:
        raise UsageError("--trperiod is required")
    try:
        intervention_index(panel.times, args.trperiod)
    except SpecificationError as exc:
        raise UsageError(str(exc)) from None
    for u in [*args.treatid, *args.contid, *args.contid2]:
        if str(u) not in panel.units:
            raise UsageError(f"unit id {u} not found in data; available: {', '.join(panel.units)}")
    t = args.trperiod
    return DesignSpec(
        treat_unit=tuple(args.treatid),
        control1_units=args.contid,
        control2_units=args.contid2,
        intervention_time=int(t) if float(t).is_integer() else t,
        hac_lag=args.lag,
        interaction_origin=args.origin,
        confidence_level=args.level,
        pool=args.pool,
    )


def _fit_from_args(args) -> FitResult:
    panel = _load_panel(args)
    spec = _spec_from_args(args, panel)
    return fit(panel, spec, use_t=args.t_dist, dof_adjust=not args.no_dof_adjust)


def _write_json(path, doc) -> None:
    if path is None:
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _cmd_fit(args, out) -> None:
    res = _fit_from_args(args)
    cat = estimand_catalog(res) if args.catalog else None
    pt = posttrend(res) if args.posttrend else None
    out.write(render_table(res, catalog=cat, posttrend=pt))
    if args.figure:
        emit_plot(res, f"{args.figure}.json", f"{args.figure}.svg")
        out.write(f"figure written to {args.figure}.json and {args.figure}.svg\n")
    if args.save_fit:
        res.to_json(args.save_fit)
    if args.json:
        doc = results_document(res, catalog=estimand_catalog(res))
        if pt:
            doc["posttrend"] = {k: r.to_dict() for k, r in pt.items()}
        _write_json(args.json, doc)


def _cmd_balance(args, out) -> None:
    res = _fit_from_args(args)
    if res.kind != "DDD":
        raise UsageError("balance needs --contid and --contid2")
    bal = balance_report(res, alpha=args.alpha)
    out.write(_estimand_lines(bal.results, bal.passed))
    verdict = "all contrasts balanced" if bal.all_pass else "imbalance detected"
    out.write(f"\n{verdict} at alpha = {bal.alpha:g}\n")
    _write_json(args.json, bal.to_dict())


def _cmd_posttrend(args, out) -> None:
    res = _fit_from_args(args)
    pt = posttrend(res)
    out.write(_estimand_lines(pt))
    _write_json(args.json, {k: r.to_dict() for k, r in pt.items()})


def _estimand_lines(results, passed=None) -> str:
    rows = [_estimand_row(r, r.label or k) for k, r in results.items()]
    level = next(iter(results.values())).level
    pct = f"{100 * level:g}"
    lines = _format_rows(rows, ("Estimand", "Estimate", "Std Err", "Z", "P", f"{pct}% LCL", f"{pct}% UCL"))
    if passed is not None:
        flags = ["balanced" if passed[k] else "NOT balanced" for k in results]
        lines = [lines[0]] + [f"{l}  {f}" for l, f in zip(lines[1:], flags)]
    return "\n".join(lines) + "\n"


def _cmd_lincom(args, out) -> None:
    if args.fit_file:
        try:
            res = FitResult.from_json(args.fit_file)
        except FileNotFoundError:
            raise FileNotFoundError(f"fit file not found: {args.fit_file}") from None
    else:
        res = _fit_from_args(args)
    try:
        r = lincom(res, args.expr)
    except SpecificationError as exc:
        raise UsageError(str(exc)) from None
    out.write(f"( 1) {r.combination.expression()}\n")
    out.write(_estimand_lines({args.expr: r}))
    _write_json(args.json, r.to_dict())


def _cmd_diag(args, out) -> None:
    res = _fit_from_args(args)
    rep = autocorr_report(res, args.max_lag)
    out.write("Residual autocorrelation (mean over groups)\n")
    out.write(f"{'lag':>4}  {'ACF':>7}  {'PACF':>7}\n")
    for j, a, p in zip(rep.lags, rep.mean_acf, rep.mean_pacf):
        out.write(f"{j:>4}  {fmt_fixed(a, 3):>7}  {fmt_fixed(p, 3):>7}\n")
    out.write("\nBreusch-Godfrey LM tests (H0: no autocorrelation up to the order)\n")
    out.write(f"{'order':>5}  {'chi2':>8}  {'df':>3}  {'p':>6}\n")
    for t in rep.lm_tests:
        out.write(f"{t.order:>5}  {fmt_fixed(t.statistic, 3):>8}  {t.df:>3}  {fmt_p(t.p):>6}\n")
    q = suggest_lag(rep.lm_tests, args.alpha)
    out.write(f"\nSuggested lag: {q} (suggestion, not a decision; alpha = {args.alpha:g})\n")
    doc = rep.to_dict()
    doc["suggested_lag"] = q
    _write_json(args.json, doc)


_SIM_FIELDS = ("rho", "sigma", "n_periods", "intervention_index", "units_per_group",
               "unit_noise_sd", "replications", "seed", "hac_lag")


def _cmd_simulate(args, out) -> None:
    params = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            params.update(json.load(fh))
    if args.beta is not None:
        params["beta_true"] = args.beta
    for name in _SIM_FIELDS:
        val = getattr(args, name)
        if val is not None:
            params[name] = val
    try:
        spec = SimulationSpec(**params)
    except TypeError as exc:
        raise UsageError(f"bad simulation config: {exc}") from None
    res = power_analysis(spec, target=args.target, alpha=args.alpha, workers=args.workers)
    out.write(res.summary() + "\n")
    _write_json(args.json, res.to_dict())


_COMMANDS = {
    "fit": _cmd_fit,
    "balance": _cmd_balance,
    "posttrend": _cmd_posttrend,
    "lincom": _cmd_lincom,
    "diag": _cmd_diag,
    "simulate": _cmd_simulate,
}


def run(argv=None, out=None, err=None) -> int:
    """Run one command; returns the exit status instead of exiting."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"ddditsa {args.command}: error: {exc}\n")
        return 2
    except SpecificationError as exc:
        err.write(f"ddditsa {args.command}: error: {exc}\n")
        return 2
    except (DDDITSAError, FileNotFoundError, OSError, ValueError) as exc:
        err.write(f"ddditsa {args.command}: error: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
