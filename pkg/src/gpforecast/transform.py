"""log1p warping of incidence counts plus centering, with exact inverses.

Counts come back to the count scale by the plug-in rule
``max(0, exp(value + center) - 1)``, applied separately to the mean and each
interval endpoint. That reports the count-scale median of a lognormal
predictive, not its mean; no ``exp(sigma^2 / 2)`` correction is applied.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeCount

BACK_TRANSFORM = "plug-in median: max(0, exp(value + center) - 1), no lognormal mean correction"


@dataclass(frozen=True)
class TransformState:
    center: float


def _counts(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 1:
        counts = counts.ravel()
    if not np.all(np.isfinite(counts)):
        raise NegativeCount("counts must be finite")
    if np.any(counts < 0):
        raise NegativeCount(f"negative count at position {int(np.argmax(counts < 0))}")
    return counts


def forward(counts) -> tuple[np.ndarray, TransformState]:
    """Warp training counts and center them; returns the values and the state."""
    logged = np.log1p(_counts(counts))
    center = float(np.mean(logged)) if logged.size else 0.0
    return logged - center, TransformState(center)


def apply(counts, state: TransformState) -> np.ndarray:
    """Warp counts with a previously fitted center."""
    return np.log1p(_counts(counts)) - state.center


def inverse(values, state: TransformState) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.maximum(0.0, np.expm1(values + state.center))
