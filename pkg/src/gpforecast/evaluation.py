"""Error metrics, blocked k-fold cross-validation and a seasonal-naive baseline."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, transform
from .data import Dataset
from .errors import DimensionMismatch, EmptyInput, TooFewRows
from .pipeline import PipelineConfig, fit_dataset, forecast

SEASON = 12
METRICS = ("rmse_transformed", "mad_transformed", "rmse_counts", "mad_counts")


def _pair(pred, actual):
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.shape != actual.shape:
        raise DimensionMismatch(f"{pred.size} predictions for {actual.size} observations")
    if pred.size == 0:
        raise EmptyInput("metrics need at least one observation")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _pair(pred, actual)
    diff = pred - actual
    # scale first so tiny differences do not underflow when squared
    scale = float(np.max(np.abs(diff)))
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    return scale * float(np.sqrt(np.mean((diff / scale) ** 2)))


def mad(pred, actual) -> float:
    """Mean absolute deviation of predictions from observations."""
    pred, actual = _pair(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


@dataclass(frozen=True)
class MetricReport:
    rmse_transformed: float
    mad_transformed: float
    rmse_counts: float
    mad_counts: float
    n: int

    @classmethod
    def compute(cls, pred_transformed, actual_transformed, pred_counts, actual_counts) -> "MetricReport":
        return cls(
            rmse(pred_transformed, actual_transformed), mad(pred_transformed, actual_transformed),
            rmse(pred_counts, actual_counts), mad(pred_counts, actual_counts),
            len(np.atleast_1d(actual_transformed)),
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    periods: tuple
    metrics: MetricReport
    theta: np.ndarray
    center: float
    covariate_stats: dict


@dataclass(frozen=True)
class CvReport:
    k: int
    per_fold: list
    folds: list = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict)

    def mean(self) -> dict:
        return {m: float(np.mean([getattr(r, m) for r in self.per_fold])) for m in METRICS}

    def std(self) -> dict:
        return {m: float(np.std([getattr(r, m) for r in self.per_fold])) for m in METRICS}

    def to_json(self) -> str:
        doc = {
            "tool_version": __version__,
            "config": self.config,
            "k": self.k,
            "mean": self.mean(),
            "std": self.std(),
            "folds": [
                {
                    "fold": f.fold,
                    "first_period": f.periods[0],
                    "last_period": f.periods[-1],
                    **f.metrics.to_dict(),
                    "log_hyperparameters": list(map(float, f.theta)),
                }
                for f in self.folds
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fold", "first_period", "last_period", "n", *METRICS])
            for f in self.folds:
                r = f.metrics
                w.writerow([f.fold, f.periods[0], f.periods[-1], r.n] + [repr(getattr(r, m)) for m in METRICS])


def fold_blocks(n: int, k: int) -> list[np.ndarray]:
    """Contiguous index blocks whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < 2 * k:
        raise TooFewRows(f"{n} rows cannot make {k} folds of at least 2 rows")
    return np.array_split(np.arange(n), k)


def evaluate_fold(dataset: Dataset, block: np.ndarray, config: PipelineConfig, fold: int = 0) -> FoldResult:
    """Train on every row outside ``block`` and score the rows inside it."""
    train_idx = np.setdiff1d(np.arange(len(dataset)), block)
    restd, stats = dataset.restandardized(train_idx)
    train, held = restd.subset(train_idx), restd.subset(block)
    model, opt = fit_dataset(train, config)
    fc = forecast(model, held)
    actual_t = transform.apply(held.counts, model.transform_state)
    metrics = MetricReport.compute(fc.mean_transformed, actual_t, fc.mean_count, held.counts)
    return FoldResult(fold, held.periods, metrics, opt.theta, model.transform_state.center, stats.to_dict())


def blocked_kfold(dataset: Dataset, k: int = 10, config: PipelineConfig = PipelineConfig()) -> CvReport:
    """k-fold cross-validation over contiguous time blocks.

    Each fold re-derives covariate standardization, the response center, and
    the hyperparameters from the remaining rows only.
    """
    blocks = fold_blocks(len(dataset), k)
    folds = [evaluate_fold(dataset, block, config, i) for i, block in enumerate(blocks)]
    return CvReport(k, [f.metrics for f in folds], folds, {"k": k, **config.to_dict()})


def persistence_forecast(train: Dataset, test: Dataset) -> tuple[np.ndarray, transform.TransformState]:
    """Seasonal-naive predictions on the transformed scale.

    Each test month gets the observed value twelve months earlier; when that
    month is not in either split the last training value is used.
    """
    y_train, state = transform.forward(train.counts)
    y_test = transform.apply(test.counts, state)
    observed = dict(zip(np.concatenate([train.t, test.t]).tolist(), np.concatenate([y_train, y_test])))
    last = float(y_train[-1])
    pred = np.array([observed.get(t - SEASON, last) for t in test.t.tolist()], dtype=float)
    return pred, state


def persistence_baseline(train: Dataset, test: Dataset) -> MetricReport:
    pred, state = persistence_forecast(train, test)
    actual = transform.apply(test.counts, state)
    return MetricReport.compute(pred, actual, transform.inverse(pred, state), test.counts)
