"""Synthetic monthly incidence series with known seasonal structure.

Used as the committed test fixture: a 12-month cycle on the log scale, a
secular upward trend, climate covariates that co-vary with the season, and
noise whose spread is larger in the high season (heteroskedastic).
"""
from __future__ import annotations

import csv
import io
import math
from importlib import resources

import numpy as np

from .data import HEADER, RawRecord, month_label

FIXTURE_NAME = "synthetic_120.csv"


def seasonal_records(n_months: int = 120, seed: int = 0, start: str = "2005-01",
                     period: float = 12.0, trend: float = 0.015) -> list[RawRecord]:
    """Generate ``n_months`` monthly records starting at ``start``."""
    rng = np.random.default_rng(seed)
    t = np.arange(1, n_months + 1, dtype=float)
    phase = 2.0 * math.pi * t / period
    season = np.sin(phase) + 0.35 * np.sin(2.0 * phase + 0.6)

    rainfall = 180.0 + 70.0 * np.sin(phase - 0.8) + rng.normal(0.0, 25.0, n_months)
    rainfall = np.maximum(rainfall, 0.0)
    humidity = np.clip(80.0 + 4.0 * np.sin(phase - 0.5) + rng.normal(0.0, 1.5, n_months), 0.0, 100.0)
    temperature = 27.5 + 1.2 * np.sin(phase + 0.3) + rng.normal(0.0, 0.3, n_months)

    noise_sd = 0.05 * (1.0 + 0.8 * (1.0 + np.sin(phase)) / 2.0)
    level = 4.5 + trend * t + 0.9 * season + rng.normal(0.0, 1.0, n_months) * noise_sd
    counts = np.round(np.expm1(level)).astype(int)

    y0, m0 = (int(x) for x in start.split("-"))
    records = []
    for i in range(n_months):
        months = (m0 - 1) + i
        records.append(RawRecord(
            period=month_label(y0 + months // 12, months % 12 + 1),
            incidence=int(counts[i]),
            rainfall=round(float(rainfall[i]), 1),
            humidity=round(float(humidity[i]), 2),
            temperature=round(float(temperature[i]), 2),
        ))
    return records


def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([r.period, r.incidence, r.rainfall, r.humidity, r.temperature])
    return buf.getvalue()


def fixture_path():
    """Path of the committed 120-month fixture shipped with the package."""
    return resources.files("gpforecast") / "fixtures" / FIXTURE_NAME
