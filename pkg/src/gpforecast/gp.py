"""Exact Gaussian-process regression with a zero prior mean.

The noise variance lives on the Gram diagonal through the white-noise leaf of
the composite kernel, so ``gram(X)`` already equals ``K + sigma_n^2 I``.
Cross covariances never carry that term.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DimensionMismatch, EmptyData, ModelFormatError
from .kernels import HyperParams, N_PARAMS, as_points, as_theta, cross_gram, gram, prior_variance
from .linalg import CholeskyFactor, cholesky, log_det, solve_lower, solve_system
from .transform import BACK_TRANSFORM, TransformState

Z95 = 1.96
LOG_2PI = math.log(2.0 * math.pi)
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    train_points: np.ndarray
    targets: np.ndarray
    theta: np.ndarray
    factor: CholeskyFactor
    alpha: np.ndarray
    transform_state: TransformState | None = None
    # auxiliary metadata carried into the persisted document
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.targets.shape[0]


@dataclass(frozen=True)
class Prediction:
    mean: np.ndarray
    variance: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    n_clamped: int = 0
    cov: np.ndarray | None = None


def fit(points, targets, theta, transform_state: TransformState | None = None,
        max_jitter: float | None = None, meta: dict | None = None) -> TrainedModel:
    """Condition the GP on centered, transformed targets."""
    X = np.asarray(points, dtype=float)
    if X.size == 0:
        raise EmptyData("cannot fit a GP to zero points")
    X = as_points(X)
    y = np.asarray(targets, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} points but {y.shape[0]} targets")
    theta = as_theta(theta).copy()
    K = gram(X, theta).matrix
    L = cholesky(K, max_jitter)
    alpha = solve_system(L, y)
    for arr in (X, y, theta, alpha, L.lower):
        arr.setflags(write=False)
    return TrainedModel(X, y, theta, L, alpha, transform_state, dict(meta or {}))


def predict(model: TrainedModel, stars, full_cov: bool = False) -> Prediction:
    """Posterior mean and variance of the latent function at ``stars``."""
    Xs = as_points(stars)
    if Xs.shape[1] != model.train_points.shape[1]:
        raise DimensionMismatch("test points have the wrong number of columns")
    Ks = cross_gram(Xs, model.train_points, model.theta)
    mean = Ks @ model.alpha
    V = solve_lower(model.factor, Ks.T)
    if full_cov:
        cov = cross_gram(Xs, Xs, model.theta) - V.T @ V
        cov = 0.5 * (cov + cov.T)
        var = np.diag(cov).copy()
    else:
        cov = None
        var = prior_variance(model.theta) - np.einsum("ij,ij->j", V, V)
    n_clamped = int(np.count_nonzero(var < 0))
    var = np.maximum(var, 0.0)
    half = Z95 * np.sqrt(var)
    return Prediction(mean, var, mean - half, mean + half, n_clamped, cov)


def log_marginal_likelihood(model: TrainedModel) -> float:
    y, a = model.targets, model.alpha
    return float(-0.5 * y @ a - 0.5 * log_det(model.factor) - 0.5 * model.n * LOG_2PI)


def lml_gradient(model: TrainedModel, grads: np.ndarray | None = None) -> np.ndarray:
    """Derivative of the log marginal likelihood w.r.t. each log-hyperparameter.

    Uses ``0.5 * tr((a a^T - Kinv) dK)``; ``Kinv`` comes from solving against
    the identity with the stored factor.
    """
    if grads is None:
        grads = gram(model.train_points, model.theta, want_grads=True).grads
    a = model.alpha
    Kinv = solve_system(model.factor, np.eye(model.n))
    W = np.outer(a, a) - Kinv
    return 0.5 * np.einsum("ij,mij->m", W, grads)


def nll_and_grad(points, targets, theta, max_jitter: float | None = None):
    """Negative log marginal likelihood and its gradient in one Gram pass."""
    X = as_points(points)
    y = np.asarray(targets, dtype=float)
    theta = as_theta(theta)
    res = gram(X, theta, want_grads=True)
    L = cholesky(res.matrix, max_jitter)
    a = solve_system(L, y)
    nll = 0.5 * y @ a + 0.5 * log_det(L) + 0.5 * y.shape[0] * LOG_2PI
    W = np.outer(a, a) - solve_system(L, np.eye(y.shape[0]))
    return float(nll), -0.5 * np.einsum("ij,mij->m", W, res.grads)


# -- persistence -------------------------------------------------------------

def to_document(model: TrainedModel) -> str:
    """Serialize a model to a JSON text document (floats round-trip exactly)."""
    doc = {
        "format": "gpforecast-model",
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "hyperparameters": dict(zip(HyperParams._fields, map(float, model.theta))),
        "transform": {
            "kind": "log1p-centered",
            "center": None if model.transform_state is None else model.transform_state.center,
            "back_transform": BACK_TRANSFORM,
        },
        "train_points": [list(map(float, row)) for row in model.train_points],
        "targets": list(map(float, model.targets)),
        "jitter_used": model.factor.jitter_used,
    }
    doc.update(model.meta)
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def from_document(text: str) -> TrainedModel:
    """Rebuild (and refactor) a model from :func:`to_document` output."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from None
    if doc.get("format") != "gpforecast-model":
        raise ModelFormatError("not a gpforecast model document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    try:
        hp = doc["hyperparameters"]
        theta = np.array([hp[name] for name in HyperParams._fields], dtype=float)
        center = doc["transform"]["center"]
        X = np.array(doc["train_points"], dtype=float)
        y = np.array(doc["targets"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model document is missing {exc}") from None
    if theta.shape != (N_PARAMS,):
        raise ModelFormatError("model document must carry 12 hyperparameters")
    known = {"format", "format_version", "tool_version", "hyperparameters", "transform",
             "train_points", "targets", "jitter_used"}
    meta = {k: v for k, v in doc.items() if k not in known}
    state = None if center is None else TransformState(float(center))
    return fit(X, y, theta, state, meta=meta)
