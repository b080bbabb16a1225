"""Acceptance gate: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines appear at
the end of the session. Criterion 7 needs real monthly data and is skipped
unless ``GPFORECAST_SINGAPORE_CSV`` names a CSV in the ingest format.
"""
import math
import os
import time

import numpy as np
import pytest

from gpforecast import data, gp, optimize, synthetic, transform
from gpforecast.cli import main
from gpforecast.evaluation import evaluate_fold, fold_blocks, persistence_baseline, rmse
from gpforecast.kernels import HyperParams, SLOT, gram, periodic, prior_variance, rational_quadratic, squared_exp
from gpforecast.linalg import cholesky
from gpforecast.pipeline import PipelineConfig, fit_dataset, forecast

from conftest import random_points, random_theta
from oracles import brute_force

pytestmark = pytest.mark.acceptance

# regression numbers from the committed fixture (seed 0, 5 restarts, train through month 108)
FIXTURE_PERIOD = 11.999539379087288
FIXTURE_GP_RMSE = 0.10825758579784735
FIXTURE_NAIVE_RMSE = 0.20210833657482064
REAL_DATA_ENV = "GPFORECAST_SINGAPORE_CSV"


def relerr(got, want):
    got, want = np.asarray(got, dtype=float), np.asarray(want, dtype=float)
    return float(np.max(np.abs(got - want) / np.maximum(np.abs(want), np.finfo(float).tiny)))


def test_1_oracle_equivalence(report_criterion):
    start = time.perf_counter()
    worst = {"mean": 0.0, "variance": 0.0, "lml": 0.0}
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 11))
        X, y, theta = random_points(rng, n), rng.normal(size=n), random_theta(rng)
        stars = np.vstack([X[: min(n, 2)], random_points(rng, 4)])
        model = gp.fit(X, y, theta)
        pred = gp.predict(model, stars)
        mean, cov, lml, _ = brute_force(X, y, stars, theta)
        worst["mean"] = max(worst["mean"], relerr(pred.mean, mean))
        worst["variance"] = max(worst["variance"], relerr(pred.variance, np.diag(cov)))
        worst["lml"] = max(worst["lml"], relerr(gp.log_marginal_likelihood(model), lml))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-8 and elapsed < 10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert report_criterion(1, "oracle equivalence, 50 seeds", ok,
                            f"max rel err {detail} (tol 1e-8), {elapsed:.2f}s (limit 10s)")


def test_2_gradient_correctness(report_criterion):
    start = time.perf_counter()
    worst, h = 0.0, 1e-5
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        X, y, theta = random_points(rng, 15), rng.normal(size=15), random_theta(rng)
        g = gp.lml_gradient(gp.fit(X, y, theta))
        for m in range(12):
            up, down = theta.copy(), theta.copy()
            up[m] += h
            down[m] -= h
            fd = (gp.log_marginal_likelihood(gp.fit(X, y, up))
                  - gp.log_marginal_likelihood(gp.fit(X, y, down))) / (2 * h)
            worst = max(worst, relerr(g[m], fd))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 30
    assert report_criterion(2, "gradient vs central differences, 20 instances n=15", ok,
                            f"max rel err {worst:.1e} (tol 1e-4), {elapsed:.2f}s (limit 30s)")


def _floor_rmse(points, targets):
    theta = np.asarray(optimize.initial_theta(points, targets), dtype=float)
    theta[SLOT["sigman"]] = optimize.noise_floor(targets)
    model = gp.fit(points, targets, theta)
    return rmse(gp.predict(model, points).mean, targets)


def test_3_interpolation_regime(report_criterion, fixture_split):
    start = time.perf_counter()
    train, _ = fixture_split
    y, _ = transform.forward(train.counts)
    results = {"fixture": _floor_rmse(train.points, y)}
    for seed in range(1, 6):
        ds = data.dataset_from_records(synthetic.seasonal_records(96, seed))
        results[f"seed{seed}"] = _floor_rmse(ds.points, transform.forward(ds.counts)[0])
    elapsed = time.perf_counter() - start
    worst = max(results.values())
    ok = worst < 1e-4 and elapsed < 30
    assert report_criterion(3, "interpolation with sigma_n at the floor", ok,
                            f"max training rmse {worst:.1e} over {len(results)} fixtures (tol 1e-4), "
                            f"{elapsed:.2f}s (limit 30s)")


def test_4_synthetic_recovery(report_criterion, fixture_split):
    start = time.perf_counter()
    train, test = fixture_split
    model, opt = fit_dataset(train, PipelineConfig(restarts=5, seed=0))
    fc = forecast(model, test)
    p = HyperParams.from_array(opt.theta).natural()["p"]
    gp_rmse = rmse(fc.mean_transformed, transform.apply(test.counts, model.transform_state))
    naive = persistence_baseline(train, test).rmse_transformed
    gain = 1.0 - gp_rmse / naive
    elapsed = time.perf_counter() - start
    ok = abs(p - 12.0) <= 0.05 * 12.0 and gain >= 0.30 and elapsed < 300
    assert report_criterion(4, "synthetic recovery on the committed fixture", ok,
                            f"p {p:.4f} (12 +/- 5%), rmse gp {gp_rmse:.4f} vs persistence {naive:.4f} "
                            f"= {100 * gain:.1f}% better (need 30%), {elapsed:.2f}s (limit 300s)")
    # regression numbers; loose enough for BLAS differences across machines
    assert p == pytest.approx(FIXTURE_PERIOD, rel=1e-3)
    assert gp_rmse == pytest.approx(FIXTURE_GP_RMSE, rel=1e-2)
    assert naive == pytest.approx(FIXTURE_NAIVE_RMSE, rel=1e-12)


def test_5_kernel_properties(report_criterion):
    start = time.perf_counter()
    failures = []
    for seed in range(200):
        rng = np.random.default_rng(5000 + seed)
        n = int(rng.integers(1, 40))
        X, theta = random_points(rng, n), rng.uniform(-4, 4, 12)
        K = gram(X, theta).matrix
        if not np.array_equal(K, K.T):
            failures.append(f"symmetry seed {seed}")
        diag = prior_variance(theta) + math.exp(2 * theta[SLOT["sigman"]])
        if relerr(np.diag(K), np.full(n, diag)) > 1e-12 or np.any(np.abs(K) > diag * (1 + 1e-12)):
            failures.append(f"diagonal magnitude seed {seed}")
        try:
            cholesky(K)
        except Exception as exc:  # noqa: BLE001 - any failure is a property violation
            failures.append(f"psd seed {seed}: {exc}")

        a = rng.normal(size=4)
        b = rng.normal(size=4)
        p, lper, k = rng.uniform(2, 20), rng.uniform(0.2, 3), int(rng.integers(-5, 6))
        shifted = b.copy()
        shifted[0] += k * p
        if abs(periodic(a, shifted, p, lper) - periodic(a, b, p, lper)) > 1e-12:
            failures.append(f"periodicity seed {seed}")

        s, ell = rng.uniform(0.2, 3), rng.uniform(0.3, 5)
        rq, se = rational_quadratic(a, b, s * s, 1e6, ell), squared_exp(a, b, s, ell)
        if abs(rq - se) > 1e-4 * max(se, 1e-300) and abs(rq - se) > 1e-4:
            failures.append(f"rq limit seed {seed}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 30
    detail = "none" if not failures else "; ".join(failures[:3])
    assert report_criterion(5, "kernel properties over 200 random draws", ok,
                            f"violations: {detail}, {elapsed:.2f}s (limit 30s)")


def _leak_free(recs, k=5):
    ds = data.dataset_from_records(recs)
    config = PipelineConfig(restarts=1, max_iters=200)
    for j, block in enumerate(fold_blocks(len(ds), k)):
        held = set(block.tolist())
        base = evaluate_fold(ds, block, config)
        bumped = [data.RawRecord(r.period, r.incidence * 5 + 11, r.rainfall + 500.0, 3.0, 40.0)
                  if i in held else r for i, r in enumerate(recs)]
        moved = evaluate_fold(data.dataset_from_records(bumped), block, config)
        if not (np.array_equal(base.theta, moved.theta) and base.center == moved.center
                and base.covariate_stats == moved.covariate_stats):
            return False
    return True


def _train_only_stats(recs, train_end):
    train, test = data.build_dataset(recs, train_end)
    n = len(train)
    raw = np.array([[r.rainfall, r.humidity, r.temperature] for r in recs[:n]])
    expected = data.CovariateStats.of(raw)
    altered = recs[:n] + [data.RawRecord(r.period, r.incidence, r.rainfall * 9, 1.0, 10.0) for r in recs[n:]]
    train2, _ = data.build_dataset(altered, train_end)
    return (np.array_equal(train.covariate_stats.mean, expected.mean)
            and np.array_equal(train.covariate_stats.std, expected.std)
            and np.array_equal(train.points, train2.points)
            and test.covariate_stats is train.covariate_stats)


def _byte_identical(tmp_path, csv_path):
    # both passes write to the same paths, since every artifact echoes its config
    d = tmp_path / "run"
    d.mkdir()
    model = d / "model.json"
    files = ["model.json", "model.json.summary.json", "pred.csv", "pred.csv.meta.json",
             "cv/cv_report.json", "cv/cv_folds.csv"]
    outputs = []
    for _ in range(2):
        assert main(["fit", "--data", str(csv_path), "--train-end", "2012-12", "--restarts", "2",
                     "--out", str(model)]) == 0
        assert main(["predict", "--model", str(model), "--data", str(csv_path), "--from", "2013-01",
                     "--to", "2013-12", "--out", str(d / "pred.csv")]) == 0
        assert main(["cv", "--data", str(csv_path), "--k", "4", "--restarts", "1",
                     "--out", str(d / "cv")]) == 0
        outputs.append([(d / f).read_bytes() for f in files])
    return outputs[0] == outputs[1]


def test_6_pipeline_hygiene(report_criterion, tmp_path, capsys):
    start = time.perf_counter()
    recs = synthetic.seasonal_records(108, seed=3)
    csv_path = tmp_path / "series.csv"
    data.save_csv(recs, csv_path)
    checks = {
        "cv leakage": _leak_free(recs[:40]),
        "train-only standardization": _train_only_stats(recs, "2012-12"),
        "byte-identical artifacts": _byte_identical(tmp_path, csv_path),
    }
    capsys.readouterr()
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 60
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    assert report_criterion(6, "pipeline hygiene", ok, f"{detail}, {elapsed:.2f}s (limit 60s)")


def test_7_real_data(report_criterion):
    path = os.environ.get(REAL_DATA_ENV)
    if not path:
        report_criterion(7, "real monthly data (optional)", True, f"set {REAL_DATA_ENV} to run", status="SKIP")
        pytest.skip(f"{REAL_DATA_ENV} not set")
    monthly = data.load_monthly(path)
    monthly = [r for r in monthly if "2005-01" <= r.period <= "2017-12"]
    train, test = data.build_dataset(monthly, "2016-12")
    model, opt = fit_dataset(train, PipelineConfig(restarts=5, seed=0))
    gp_rmse = rmse(forecast(model, test).mean_transformed, transform.apply(test.counts, model.transform_state))
    naive = persistence_baseline(train, test).rmse_transformed
    p = HyperParams.from_array(opt.theta).natural()["p"]
    ok = gp_rmse < naive and 11.0 <= p <= 13.0
    assert report_criterion(7, "real monthly data, 2017 held out", ok,
                            f"rmse gp {gp_rmse:.4f} vs persistence {naive:.4f}, p {p:.3f} (need [11, 13])")
