"""CSV ingestion, weekly-to-monthly aggregation and train/test datasets.

Input files are UTF-8 CSV with the header::

    period,incidence,rainfall_mm,humidity_pct,temperature_c

``period`` is ``YYYY-MM`` (monthly) or ``YYYY-Www`` (ISO week). The
resolution is detected from the first data row and must not change.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import EmptySplit, GapError, MissingColumn, ParseError, RangeError

HEADER = ("period", "incidence", "rainfall_mm", "humidity_pct", "temperature_c")
COVARIATES = ("rainfall", "humidity", "temperature")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_WEEK_RE = re.compile(r"^(\d{4})-W(\d{2})$")


@dataclass(frozen=True)
class RawRecord:
    period: str
    incidence: int
    rainfall: float
    humidity: float
    temperature: float


def month_label(year: int, month: int) -> str:
    return f"{year:04d}-{month:02d}"


def parse_month(label: str) -> tuple[int, int]:
    m = _MONTH_RE.match(label)
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ValueError(f"not a YYYY-MM month: {label!r}")
    return int(m.group(1)), int(m.group(2))


def month_index(label: str) -> int:
    """Months since year 0, so consecutive months differ by one."""
    y, m = parse_month(label)
    return 12 * y + (m - 1)


def month_from_index(index: int) -> str:
    return month_label(index // 12, index % 12 + 1)


def parse_week(label: str) -> tuple[int, int]:
    m = _WEEK_RE.match(label)
    if not m:
        raise ValueError(f"not a YYYY-Www ISO week: {label!r}")
    year, week = int(m.group(1)), int(m.group(2))
    dt.date.fromisocalendar(year, week, 1)  # raises ValueError for week 53 in 52-week years
    return year, week


def resolution(label: str) -> str:
    if _MONTH_RE.match(label):
        return "monthly"
    if _WEEK_RE.match(label):
        return "weekly"
    raise ValueError(f"unrecognized period {label!r}")


def _number(text: str, column: str, row: int) -> float:
    text = text.strip()
    if not text:
        raise ParseError(f"empty {column}", row)
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{column} is not a number: {text!r}", row) from None
    if not math.isfinite(value):
        raise ParseError(f"{column} is not finite", row)
    return value


def load_csv(path) -> list[RawRecord]:
    """Parse an incidence/climate CSV into records, in file order.

    Raises
    ------
    MissingColumn
        A required header column is absent.
    ParseError
        Malformed header, period, number or mixed resolution (with row number).
    RangeError
        Negative incidence or humidity outside [0, 100].
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty; a header row is required", 1) from None
        for col in HEADER:
            if col not in header:
                raise MissingColumn(col)
        if tuple(header) != HEADER:
            raise ParseError(f"header must be exactly {','.join(HEADER)}", 1)

        records = []
        kind = None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", lineno)
            period = row[0].strip()
            try:
                this_kind = resolution(period)
                if this_kind == "monthly":
                    parse_month(period)
                else:
                    parse_week(period)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if kind is None:
                kind = this_kind
            elif this_kind != kind:
                raise ParseError(f"mixed resolution: {period!r} in a {kind} file", lineno)

            raw_inc = row[1].strip()
            inc = _number(raw_inc, "incidence", lineno)
            if inc < 0:
                raise RangeError(f"negative incidence {raw_inc}", lineno)
            if inc != int(inc):
                raise ParseError(f"incidence must be an integer count: {raw_inc!r}", lineno)
            rain = _number(row[2], "rainfall_mm", lineno)
            hum = _number(row[3], "humidity_pct", lineno)
            if not 0.0 <= hum <= 100.0:
                raise RangeError(f"humidity {hum} outside [0, 100]", lineno)
            temp = _number(row[4], "temperature_c", lineno)
            records.append(RawRecord(period, int(inc), rain, hum, temp))
    return records


def save_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in records:
            w.writerow([r.period, r.incidence, repr(r.rainfall), repr(r.humidity), repr(r.temperature)])


def _week_days(label: str) -> list[dt.date]:
    y, w = parse_week(label)
    monday = dt.date.fromisocalendar(y, w, 1)
    return [monday + dt.timedelta(days=d) for d in range(7)]


def aggregate_monthly(records: list[RawRecord]) -> list[RawRecord]:
    """Collapse ISO-week records into calendar months.

    A week belongs wholly to the month containing its Thursday. Incidence and
    rainfall are summed; humidity and temperature are averaged with each week
    weighted by how many of its days fall inside that month.

    Raises
    ------
    GapError
        If a month inside the covered range receives no week.
    """
    if not records:
        return []
    buckets: dict[int, list] = {}
    for r in records:
        days = _week_days(r.period)
        thursday = days[3]
        key = 12 * thursday.year + thursday.month - 1
        weight = sum(1 for d in days if (d.year, d.month) == (thursday.year, thursday.month))
        buckets.setdefault(key, []).append((r, weight))
    first, last = min(buckets), max(buckets)
    missing = [month_from_index(k) for k in range(first, last + 1) if k not in buckets]
    if missing:
        raise GapError(f"no weekly data for month(s) {', '.join(missing)}")
    out = []
    for key in range(first, last + 1):
        rows = buckets[key]
        wsum = float(sum(w for _, w in rows))
        out.append(RawRecord(
            period=month_from_index(key),
            incidence=sum(r.incidence for r, _ in rows),
            rainfall=float(sum(r.rainfall for r, _ in rows)),
            humidity=sum(r.humidity * w for r, w in rows) / wsum,
            temperature=sum(r.temperature * w for r, w in rows) / wsum,
        ))
    return out


def load_monthly(path) -> list[RawRecord]:
    """Load a CSV and aggregate it to months when it is weekly."""
    records = load_csv(path)
    if records and resolution(records[0].period) == "weekly":
        records = aggregate_monthly(records)
    return records


@dataclass(frozen=True)
class CovariateStats:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def of(cls, raw: np.ndarray) -> "CovariateStats":
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        # a constant column standardizes to zeros rather than dividing by zero
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.mean) / self.std

    def to_dict(self) -> dict:
        return {name: {"mean": float(m), "std": float(s)}
                for name, m, s in zip(COVARIATES, self.mean, self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "CovariateStats":
        return cls(np.array([d[c]["mean"] for c in COVARIATES], dtype=float),
                   np.array([d[c]["std"] for c in COVARIATES], dtype=float))


@dataclass(frozen=True)
class Dataset:
    """Time-ordered monthly rows; ``points`` are standardized with ``covariate_stats``."""

    periods: tuple
    t: np.ndarray
    raw_covariates: np.ndarray
    counts: np.ndarray
    covariate_stats: CovariateStats

    def __len__(self) -> int:
        return len(self.periods)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.t, self.covariate_stats.standardize(self.raw_covariates)])

    def subset(self, index, stats: CovariateStats | None = None) -> "Dataset":
        """Rows at ``index``; standardization is kept unless ``stats`` is given."""
        index = np.asarray(index)
        return Dataset(
            tuple(np.asarray(self.periods, dtype=object)[index]),
            self.t[index],
            self.raw_covariates[index],
            self.counts[index],
            self.covariate_stats if stats is None else stats,
        )

    def restandardized(self, train_index) -> tuple["Dataset", CovariateStats]:
        """Copy of the dataset standardized by statistics of ``train_index`` rows only."""
        stats = CovariateStats.of(self.raw_covariates[np.asarray(train_index)])
        return self.subset(np.arange(len(self)), stats), stats


def check_contiguous(monthly: list[RawRecord]) -> None:
    idx = [month_index(r.period) for r in monthly]
    for a, b, r in zip(idx, idx[1:], monthly[1:]):
        if b != a + 1:
            raise GapError(f"monthly records are not contiguous at {r.period}")


def build_dataset(monthly: list[RawRecord], train_end: str) -> tuple[Dataset, Dataset]:
    """Split contiguous monthly records at ``train_end`` (inclusive).

    Time indices run 1..N over the whole series; covariates are standardized
    with means and standard deviations of the training rows only.
    """
    if monthly and resolution(monthly[0].period) != "monthly":
        raise ValueError("build_dataset needs monthly records; aggregate weekly data first")
    check_contiguous(monthly)
    cut = month_index(train_end)
    periods = tuple(r.period for r in monthly)
    is_train = np.array([month_index(p) <= cut for p in periods], dtype=bool)
    if not is_train.any():
        raise EmptySplit(f"no training rows at or before train_end {train_end}")
    if is_train.all():
        raise EmptySplit(f"no test rows after train_end {train_end}")
    full = dataset_from_records(monthly)
    train_idx = np.flatnonzero(is_train)
    stats = CovariateStats.of(full.raw_covariates[train_idx])
    return full.subset(train_idx, stats), full.subset(np.flatnonzero(~is_train), stats)


def dataset_from_records(monthly: list[RawRecord], stats: CovariateStats | None = None,
                         t0: int = 1) -> Dataset:
    """All records as one dataset (stats from every row unless given)."""
    check_contiguous(monthly)
    raw = np.array([[r.rainfall, r.humidity, r.temperature] for r in monthly], dtype=float).reshape(-1, 3)
    counts = np.array([r.incidence for r in monthly], dtype=np.int64)
    t = np.arange(t0, t0 + len(monthly), dtype=float)
    if stats is None:
        stats = CovariateStats.of(raw) if len(monthly) else CovariateStats(np.zeros(3), np.ones(3))
    return Dataset(tuple(r.period for r in monthly), t, raw, counts, stats)
