"""End-to-end fit and forecast on :class:`~gpforecast.data.Dataset` objects."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from . import gp, transform
from .data import CovariateStats, Dataset, month_from_index, month_index
from .kernels import HyperParams
from .optimize import OptimResult, fit_hyperparams

PREDICTION_HEADER = (
    "period", "mean_transformed", "lo95_transformed", "hi95_transformed",
    "mean_count", "lo95_count", "hi95_count",
)


@dataclass(frozen=True)
class PipelineConfig:
    restarts: int = 5
    seed: int = 0
    tol: float = 1e-5
    max_iters: int = 500

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 0 or not self.tol > 0:
            raise ValueError("max_iters must be >= 0 and tol > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Forecast:
    periods: tuple
    mean_transformed: np.ndarray
    lo95_transformed: np.ndarray
    hi95_transformed: np.ndarray
    mean_count: np.ndarray
    lo95_count: np.ndarray
    hi95_count: np.ndarray
    variance: np.ndarray


def fit_dataset(train: Dataset, config: PipelineConfig = PipelineConfig()) -> tuple[gp.TrainedModel, OptimResult]:
    """Transform counts, optimize hyperparameters, and condition the GP."""
    y, state = transform.forward(train.counts)
    X = train.points
    opt = fit_hyperparams(X, y, restarts=config.restarts, seed=config.seed,
                          tol=config.tol, max_iters=config.max_iters)
    meta = {
        "series_start": series_start(train),
        "train_periods": list(train.periods),
        "covariate_stats": train.covariate_stats.to_dict(),
        "config": config.to_dict(),
        "fit": fit_summary(opt),
    }
    model = gp.fit(X, y, opt.theta, state, meta=meta)
    return model, opt


def series_start(ds: Dataset) -> str:
    """Calendar month that carries time index 1."""
    return month_from_index(month_index(ds.periods[0]) - int(ds.t[0]) + 1)


def fit_summary(opt: OptimResult) -> dict:
    return {
        "final_nll": opt.final_nll,
        "iterations": opt.iterations,
        "converged": opt.converged,
        "restart_index": opt.restart_index,
        "grad_max_norm": opt.grad_norm,
        "stop_reason": opt.message,
        "natural_hyperparameters": HyperParams.from_array(opt.theta).natural(),
    }


def forecast(model: gp.TrainedModel, ds: Dataset) -> Forecast:
    """Predict ``ds`` rows on both the transformed and the count scale."""
    pred = gp.predict(model, ds.points)
    state = model.transform_state or transform.TransformState(0.0)
    return Forecast(
        tuple(ds.periods), pred.mean, pred.lower95, pred.upper95,
        transform.inverse(pred.mean, state), transform.inverse(pred.lower95, state),
        transform.inverse(pred.upper95, state), pred.variance,
    )


def model_covariate_stats(model: gp.TrainedModel) -> CovariateStats:
    return CovariateStats.from_dict(model.meta["covariate_stats"])


def write_predictions(fc: Forecast, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        cols = (fc.mean_transformed, fc.lo95_transformed, fc.hi95_transformed,
                fc.mean_count, fc.lo95_count, fc.hi95_count)
        for i, period in enumerate(fc.periods):
            w.writerow([period] + [repr(float(c[i])) for c in cols])


def read_predictions(path) -> dict:
    """Read a prediction CSV into ``{column: list}``; only ``period`` and
    ``mean_count`` are required, so other tools' outputs can be scored."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in ("period", "mean_count"):
            if col not in fields:
                raise ValueError(f"{path}: prediction file lacks column {col!r}")
        out = {f: [] for f in fields}
        for row in reader:
            for f in fields:
                out[f].append(row[f] if f == "period" else float(row[f]))
    return out
