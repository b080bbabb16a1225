import datetime as dt

import numpy as np
import pytest

from gpforecast import data, synthetic
from gpforecast.data import RawRecord
from gpforecast.errors import EmptySplit, GapError, MissingColumn, ParseError, RangeError

HEAD = ",".join(data.HEADER)


def write(tmp_path, body, header=HEAD):
    p = tmp_path / "in.csv"
    p.write_text(header + "\n" + body, encoding="utf-8")
    return p


def monthly(n, start="2005-01", seed=0):
    rng = np.random.default_rng(seed)
    base = data.month_index(start)
    return [RawRecord(data.month_from_index(base + i), int(rng.integers(0, 500)),
                      float(rng.uniform(50, 300)), float(rng.uniform(60, 95)), float(rng.uniform(25, 30)))
            for i in range(n)]


def week_label(date):
    y, w, _ = date.isocalendar()
    return f"{y:04d}-W{w:02d}"


class TestLoadCsv:
    def test_single_row(self, tmp_path):
        recs = data.load_csv(write(tmp_path, "2005-01,436,198.6,84.3,26.5\n"))
        assert recs == [RawRecord("2005-01", 436, 198.6, 84.3, 26.5)]

    def test_empty_body(self, tmp_path):
        assert data.load_csv(write(tmp_path, "")) == []

    def test_negative_incidence(self, tmp_path):
        with pytest.raises(RangeError) as exc:
            data.load_csv(write(tmp_path, "2005-01,1,1,50,20\n2005-02,-3,1,50,20\n"))
        assert exc.value.row == 3

    def test_humidity_range(self, tmp_path):
        with pytest.raises(RangeError):
            data.load_csv(write(tmp_path, "2005-01,1,1,100.5,20\n"))

    def test_missing_column(self, tmp_path):
        with pytest.raises(MissingColumn) as exc:
            data.load_csv(write(tmp_path, "2005-01,1,1,50\n", header="period,incidence,rainfall_mm,humidity_pct"))
        assert exc.value.column == "temperature_c"

    def test_missing_cell(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            data.load_csv(write(tmp_path, "2005-01,1,,50,20\n"))
        assert exc.value.row == 2

    def test_bad_number(self, tmp_path):
        with pytest.raises(ParseError):
            data.load_csv(write(tmp_path, "2005-01,1,abc,50,20\n"))

    def test_fractional_incidence(self, tmp_path):
        with pytest.raises(ParseError):
            data.load_csv(write(tmp_path, "2005-01,1.5,1,50,20\n"))

    def test_mixed_resolution(self, tmp_path):
        with pytest.raises(ParseError):
            data.load_csv(write(tmp_path, "2005-01,1,1,50,20\n2005-W06,1,1,50,20\n"))

    def test_bad_period(self, tmp_path):
        with pytest.raises(ParseError):
            data.load_csv(write(tmp_path, "2005-13,1,1,50,20\n"))
        with pytest.raises(ParseError):
            data.load_csv(write(tmp_path, "2005-W53,1,1,50,20\n"))

    def test_weekly_detected(self, tmp_path):
        recs = data.load_csv(write(tmp_path, "2015-W53,4,1,50,20\n2016-W01,5,1,50,20\n"))
        assert [r.period for r in recs] == ["2015-W53", "2016-W01"]

    def test_save_load_roundtrip(self, tmp_path):
        recs = monthly(5)
        p = tmp_path / "out.csv"
        data.save_csv(recs, p)
        assert data.load_csv(p) == recs


class TestAggregate:
    def test_pure_sum(self):
        # ISO weeks 9-12 of 2021 (1-28 March) lie wholly inside March
        recs = [RawRecord(f"2021-W{w:02d}", inc, 1.0, 80.0, 27.0) for w, inc in zip(range(9, 13), (10, 20, 30, 40))]
        out = data.aggregate_monthly(recs)
        assert [(r.period, r.incidence) for r in out] == [("2021-03", 100)]

    def test_straddling_week_goes_to_thursday_month(self):
        # 2021-W09 runs Mon 1 Mar .. Sun 7 Mar; 2021-W13 runs Mon 29 Mar .. Sun 4 Apr (Thursday 1 Apr)
        recs = [RawRecord(f"2021-W{w:02d}", 1, 0.0, 80.0, 27.0) for w in range(9, 14)]
        out = data.aggregate_monthly(recs)
        assert [(r.period, r.incidence) for r in out] == [("2021-03", 4), ("2021-04", 1)]

    def test_day_weighted_covariates(self):
        # Jan/Feb 2021 fixture. W04 (25-31 Jan) lies inside January; W05 (1-7 Feb) inside
        # February; W01 (4-10 Jan) inside January; W53 of 2020 (28 Dec - 3 Jan) has Thursday 31 Dec
        # and is left out. W08 (22-28 Feb) inside Feb. W09 (1-7 Mar) would be March, so stop at W08.
        weeks = {1: (80.0, 26.0), 2: (82.0, 26.5), 3: (84.0, 27.0), 4: (86.0, 27.5),
                 5: (70.0, 28.0), 6: (72.0, 28.5), 7: (74.0, 29.0), 8: (76.0, 29.5)}
        recs = [RawRecord(f"2021-W{w:02d}", w, 10.0 * w, h, t) for w, (h, t) in weeks.items()]
        out = data.aggregate_monthly(recs)
        assert [r.period for r in out] == ["2021-01", "2021-02"]
        # every week lies wholly inside its month, so each carries 7 days of weight
        jan_h = (80 * 7 + 82 * 7 + 84 * 7 + 86 * 7) / 28
        feb_t = (28.0 * 7 + 28.5 * 7 + 29.0 * 7 + 29.5 * 7) / 28
        assert out[0].humidity == pytest.approx(jan_h, abs=1e-10)
        assert out[1].temperature == pytest.approx(feb_t, abs=1e-10)
        assert out[0].rainfall == pytest.approx(100.0)
        assert out[1].incidence == 5 + 6 + 7 + 8

    def test_partial_week_weighting(self):
        # W13 of 2021: Mon 29 Mar .. Sun 4 Apr, Thursday 1 Apr, so 4 April days weigh in.
        # W14: 5-11 Apr, 7 days.
        recs = [RawRecord("2021-W13", 1, 1.0, 60.0, 20.0), RawRecord("2021-W14", 1, 1.0, 90.0, 30.0)]
        out = data.aggregate_monthly(recs)
        assert out[0].period == "2021-04"
        assert out[0].humidity == pytest.approx((60.0 * 4 + 90.0 * 7) / 11, abs=1e-10)
        assert out[0].temperature == pytest.approx((20.0 * 4 + 30.0 * 7) / 11, abs=1e-10)

    def test_gap(self):
        recs = [RawRecord("2021-W02", 1, 1, 50, 20), RawRecord("2021-W14", 1, 1, 50, 20)]
        with pytest.raises(GapError):
            data.aggregate_monthly(recs)

    def test_conserves_incidence(self):
        rng = np.random.default_rng(3)
        start = dt.date(2014, 12, 29)
        recs = [RawRecord(week_label(start + dt.timedelta(weeks=i)), int(rng.integers(0, 900)),
                          1.0, 80.0, 27.0) for i in range(156)]
        out = data.aggregate_monthly(recs)
        assert sum(r.incidence for r in out) == sum(r.incidence for r in recs)

    def test_load_monthly_aggregates_weekly(self, tmp_path):
        p = write(tmp_path, "".join(f"2021-W{w:02d},{w},1,80,27\n" for w in range(9, 13)))
        out = data.load_monthly(p)
        assert [r.period for r in out] == ["2021-03"]


class TestBuildDataset:
    def test_index_bookkeeping(self):
        recs = monthly(24)
        train, test = data.build_dataset(recs, recs[11].period)
        np.testing.assert_array_equal(train.t, np.arange(1, 13))
        np.testing.assert_array_equal(test.t, np.arange(13, 25))
        assert train.periods[-1] == recs[11].period

    def test_train_standardized(self):
        train, _ = data.build_dataset(monthly(24), "2005-12")
        Z = train.points[:, 1:]
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-10)

    def test_test_rows_use_train_stats(self):
        recs = [RawRecord("2005-01", 1, 100.0, 80.0, 26.0), RawRecord("2005-02", 2, 200.0, 90.0, 28.0),
                RawRecord("2005-03", 3, 400.0, 70.0, 30.0)]
        _, test = data.build_dataset(recs, "2005-02")
        # train means (150, 85, 27), population stds (50, 5, 1)
        np.testing.assert_allclose(test.points[0], [3.0, 5.0, -3.0, 3.0], atol=1e-12)

    def test_no_leakage_from_test_rows(self):
        recs = monthly(30)
        train, _ = data.build_dataset(recs, recs[19].period)
        perturbed = recs[:20] + [RawRecord(r.period, r.incidence, r.rainfall * 50, 1.0, -40.0) for r in recs[20:]]
        train2, _ = data.build_dataset(perturbed, recs[19].period)
        np.testing.assert_array_equal(train.covariate_stats.mean, train2.covariate_stats.mean)
        np.testing.assert_array_equal(train.covariate_stats.std, train2.covariate_stats.std)
        raw = np.array([[r.rainfall, r.humidity, r.temperature] for r in recs[:20]])
        np.testing.assert_array_equal(train.covariate_stats.mean, raw.mean(axis=0))

    def test_empty_split(self):
        recs = monthly(6)
        with pytest.raises(EmptySplit):
            data.build_dataset(recs, "2004-12")
        with pytest.raises(EmptySplit):
            data.build_dataset(recs, recs[-1].period)

    def test_non_contiguous(self):
        recs = monthly(6)
        with pytest.raises(GapError):
            data.build_dataset(recs[:2] + recs[3:], "2005-02")

    def test_idempotent_through_csv(self, tmp_path):
        recs = monthly(18)
        p = tmp_path / "d.csv"
        data.save_csv(recs, p)
        a_train, a_test = data.build_dataset(recs, "2005-12")
        b_train, b_test = data.build_dataset(data.load_csv(p), "2005-12")
        for a, b in ((a_train, b_train), (a_test, b_test)):
            np.testing.assert_array_equal(a.points, b.points)
            np.testing.assert_array_equal(a.counts, b.counts)
            assert a.periods == b.periods


def test_committed_fixture_matches_generator(fixture_csv):
    assert fixture_csv.read_text(encoding="utf-8") == synthetic.to_csv(synthetic.seasonal_records(120, 0))
