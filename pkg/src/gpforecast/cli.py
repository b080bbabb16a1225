"""Command-line front end: ``gpforecast {fit,predict,cv,eval,baseline}``.

Exit status is 0 on success, 1 when a pipeline stage fails (the message
names the stage), and 2 for configuration errors. Options may also come
from a plain ``key = value`` file given with ``--config``; command-line
flags win over file values.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, gp, transform
from .data import (
    CovariateStats, build_dataset, dataset_from_records, load_monthly, month_index, parse_month,
)
from .errors import GPForecastError
from .evaluation import MetricReport, blocked_kfold, persistence_forecast
from .pipeline import (
    Forecast, PipelineConfig, fit_dataset, forecast, read_predictions,
    write_predictions,
)

log = logging.getLogger("gpforecast")

DEFAULTS = {"restarts": 5, "seed": 0, "k": 10, "max_iters": 500, "tol": 1e-5}


class ConfigError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        super().__init__(f"{stage} failed: {exc}")


class _Stage:
    """Context manager that tags any library error with the stage name."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.debug("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (GPForecastError, OSError, ValueError, ArithmeticError)):
            raise StageError(self.name, exc) from exc
        return False


def read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        values["from_" if key == "from" else key] = value
    return values


def resolve(args, names) -> dict:
    """Merge flags over config-file values over defaults for ``names``."""
    from_file = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(from_file) - set(names)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    out = {}
    for name in names:
        value = getattr(args, name, None)
        if value is None:
            value = from_file.get(name, DEFAULTS.get(name))
        out[name] = value
    return out


def _int(cfg, name, minimum):
    try:
        value = int(cfg[name])
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {cfg[name]!r}") from None
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _month(cfg, name):
    value = cfg.get(name)
    if value is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required")
    try:
        parse_month(str(value))
    except ValueError:
        raise ConfigError(f"{name} must be YYYY-MM, got {value!r}") from None
    return str(value)


def _required(cfg, name):
    if not cfg.get(name):
        raise ConfigError(f"--{name.replace('_', '-')} is required")
    return str(cfg[name])


def _pipeline_config(cfg) -> PipelineConfig:
    try:
        tol = float(cfg["tol"])
    except (TypeError, ValueError):
        raise ConfigError(f"tol must be a number, got {cfg['tol']!r}") from None
    if not tol > 0:
        raise ConfigError("tol must be positive")
    return PipelineConfig(_int(cfg, "restarts", 1), _int(cfg, "seed", -(2**63)),
                          tol, _int(cfg, "max_iters", 0))


def _write_meta(path, command, cfg):
    meta = {"tool": "gpforecast", "tool_version": __version__, "command": command, "config": cfg,
            "back_transform": transform.BACK_TRANSFORM}
    Path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# -- commands ----------------------------------------------------------------

def cmd_fit(args) -> int:
    cfg = resolve(args, ["data", "train_end", "restarts", "seed", "max_iters", "tol", "out"])
    data_path, out = _required(cfg, "data"), _required(cfg, "out")
    train_end = _month(cfg, "train_end")
    pconf = _pipeline_config(cfg)
    with _Stage("ingest"):
        monthly = load_monthly(data_path)
    if not monthly:
        raise StageError("ingest", "no data rows")
    first, last = monthly[0].period, monthly[-1].period
    if not month_index(first) <= month_index(train_end) < month_index(last):
        raise ConfigError(f"train_end {train_end} must lie in [{first}, {last}) so both splits are nonempty")
    with _Stage("split"):
        train, _ = build_dataset(monthly, train_end)
    with _Stage("optimize"):
        model, opt = fit_dataset(train, pconf)
    echo = {"data": data_path, "train_end": train_end, **pconf.to_dict()}
    model = gp.TrainedModel(model.train_points, model.targets, model.theta, model.factor, model.alpha,
                            model.transform_state, {**model.meta, "config": echo})
    with _Stage("write"):
        Path(out).write_text(gp.to_document(model), encoding="utf-8")
        summary = {"tool_version": __version__, "config": echo, **model.meta["fit"],
                   "log_marginal_likelihood": gp.log_marginal_likelihood(model)}
        Path(str(out) + ".summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n",
                                                    encoding="utf-8")
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def load_model(path) -> gp.TrainedModel:
    with _Stage("load-model"):
        return gp.from_document(Path(path).read_text(encoding="utf-8"))


def cmd_predict(args) -> int:
    cfg = resolve(args, ["model", "data", "from_", "to", "out"])
    model_path, data_path, out = _required(cfg, "model"), _required(cfg, "data"), _required(cfg, "out")
    start, stop = _month(cfg, "from_"), _month(cfg, "to")
    if month_index(start) > month_index(stop):
        raise ConfigError(f"empty prediction range {start}..{stop}")
    model = load_model(model_path)
    with _Stage("ingest"):
        monthly = load_monthly(data_path)
    by_period = {r.period: r for r in monthly}
    wanted = _months(start, stop)
    missing = [p for p in wanted if p not in by_period]
    if missing:
        raise StageError("ingest", f"no covariates for period(s) {', '.join(missing)}")
    with _Stage("predict"):
        fc = forecast_periods(model, [by_period[p] for p in wanted])
        write_predictions(fc, out)
        _write_meta(str(out) + ".meta.json", "predict", cfg)
    return 0


def _months(start, stop):
    from .data import month_from_index
    return [month_from_index(i) for i in range(month_index(start), month_index(stop) + 1)]


def forecast_periods(model: gp.TrainedModel, records) -> Forecast:
    """Forecast contiguous monthly records with the model's time origin and scaling."""
    stats = CovariateStats.from_dict(model.meta["covariate_stats"])
    t0 = month_index(records[0].period) - month_index(model.meta["series_start"]) + 1
    ds = dataset_from_records(records, stats, t0=t0)
    return forecast(model, ds)


def cmd_cv(args) -> int:
    cfg = resolve(args, ["data", "k", "restarts", "seed", "max_iters", "tol", "train_end", "out"])
    data_path, out = _required(cfg, "data"), _required(cfg, "out")
    k = _int(cfg, "k", 2)
    pconf = _pipeline_config(cfg)
    train_end = _month(cfg, "train_end") if cfg.get("train_end") else None
    with _Stage("ingest"):
        monthly = load_monthly(data_path)
        if train_end is not None:
            monthly = [r for r in monthly if month_index(r.period) <= month_index(train_end)]
        ds = dataset_from_records(monthly)
    with _Stage("cross-validate"):
        report = blocked_kfold(ds, k, pconf)
    echo = {"data": data_path, "train_end": train_end, **report.config}
    report = type(report)(report.k, report.per_fold, report.folds, echo)
    with _Stage("write"):
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "cv_report.json").write_text(report.to_json(), encoding="utf-8")
        report.write_csv(outdir / "cv_folds.csv")
    print(json.dumps({"k": k, "mean": report.mean(), "std": report.std()}, indent=1, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    cfg = resolve(args, ["pred", "actual"])
    pred_path, actual_path = _required(cfg, "pred"), _required(cfg, "actual")
    with _Stage("ingest"):
        pred = read_predictions(pred_path)
        actual = {r.period: r.incidence for r in load_monthly(actual_path)}
    periods = pred["period"]
    unmatched = [p for p in periods if p not in actual]
    if not periods or unmatched:
        raise StageError("join", f"{len(unmatched)} of {len(periods)} prediction periods have no actual "
                                 f"count ({', '.join(unmatched[:5])})")
    pc = np.asarray(pred["mean_count"], dtype=float)
    ac = np.array([actual[p] for p in periods], dtype=float)
    with _Stage("score"):
        # the centering constant cancels in differences, so log1p is the transformed scale
        report = MetricReport.compute(np.log1p(pc), np.log1p(ac), pc, ac)
    print(json.dumps({"tool_version": __version__, "pred": pred_path, "actual": actual_path,
                      **report.to_dict()}, indent=1, sort_keys=True))
    return 0


def cmd_baseline(args) -> int:
    cfg = resolve(args, ["data", "train_end", "out"])
    data_path, out = _required(cfg, "data"), _required(cfg, "out")
    train_end = _month(cfg, "train_end")
    with _Stage("ingest"):
        monthly = load_monthly(data_path)
    with _Stage("split"):
        train, test = build_dataset(monthly, train_end)
    with _Stage("predict"):
        pred, state = persistence_forecast(train, test)
        nan = np.full(pred.shape, math.nan)
        counts = transform.inverse(pred, state)
        write_predictions(Forecast(test.periods, pred, nan, nan, counts, nan, nan, nan), out)
        _write_meta(str(out) + ".meta.json", "baseline", cfg)
    return 0


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpforecast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gpforecast {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, fitting=False):
        p.add_argument("--config", help="key = value file; flags override it")
        if fitting:
            p.add_argument("--restarts", type=int, help="BFGS starts (default 5)")
            p.add_argument("--seed", type=int, help="seed for jittered starts (default 0)")
            p.add_argument("--max-iters", dest="max_iters", type=int, help="BFGS iteration cap (default 500)")
            p.add_argument("--tol", type=float, help="gradient max-norm tolerance (default 1e-5)")

    p = sub.add_parser("fit", help="optimize hyperparameters and write a model document")
    p.add_argument("--data")
    p.add_argument("--train-end", dest="train_end", metavar="YYYY-MM")
    p.add_argument("--out")
    common(p, fitting=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="forecast periods with a fitted model")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--from", dest="from_", metavar="YYYY-MM")
    p.add_argument("--to", metavar="YYYY-MM")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="blocked k-fold cross-validation")
    p.add_argument("--data")
    p.add_argument("--k", type=int)
    p.add_argument("--train-end", dest="train_end", metavar="YYYY-MM",
                   help="only use rows up to this month")
    p.add_argument("--out", help="output directory")
    common(p, fitting=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("eval", help="score a prediction CSV against observed counts")
    p.add_argument("--pred")
    p.add_argument("--actual")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="seasonal-naive predictions for the test split")
    p.add_argument("--data")
    p.add_argument("--train-end", dest="train_end", metavar="YYYY-MM")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"gpforecast {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"gpforecast {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
