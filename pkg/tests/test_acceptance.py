"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines
as they complete (they also appear in captured output with -rA).
"""

import itertools
import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from swtforecast.data import DailyMatrix, aggregate_sites, load_csv, synthesize_pv
from swtforecast.evaluation import MetricsContext, compute_metrics, wilcoxon_rank_sum
from swtforecast.models import (
    CnnConfig,
    ConvNet,
    denormalize,
    fit_normalizer,
    gradient_check,
    normalize,
)
from swtforecast.padding import padding_plan
from swtforecast.pipeline import PipelineConfig, run_pipeline
from swtforecast.volatility import historical_volatility, volatility_table
from swtforecast.wavelets import daubechies_filters, iswt, reconstruct_components, swt

pytestmark = pytest.mark.filterwarnings("ignore:constant feature")

SQRT2 = math.sqrt(2.0)


@contextmanager
def criterion(number: int, description: str, capsys):
    """Run one criterion and print its verdict outside pytest's capture."""
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"ACCEPTANCE {number:2d} FAIL: {description}")
        raise
    with capsys.disabled():
        print(f"ACCEPTANCE {number:2d} PASS: {description}")


@pytest.fixture(scope="module")
def acceptance_matrix():
    return aggregate_sites(synthesize_pv(days=400, sites=3, seed=7, cloud_noise=0.25))


def test_criterion_1_perfect_reconstruction(capsys):
    with criterion(1, "SWT round trip <= 1e-9 relative on the full grid, under 5 s", capsys):
        rng = np.random.default_rng(101)
        started = time.perf_counter()
        for order, level, length in itertools.product(
            range(1, 8), range(1, 5), (32, 64, 128)
        ):
            filt = daubechies_filters(order)
            x = rng.normal(size=length)
            rebuilt = iswt(swt(x, filt, level), filt)
            assert np.max(np.abs(rebuilt - x)) <= 1e-9 * np.max(np.abs(x)), (
                f"db{order} DL={level} N={length}"
            )
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"round-trip grid took {elapsed:.2f}s"


def test_criterion_2_component_additivity(capsys):
    with criterion(2, "components sum to the signal <= 1e-9 relative on the full grid", capsys):
        rng = np.random.default_rng(202)
        for order, level, length in itertools.product(
            range(1, 8), range(1, 5), (32, 64, 128)
        ):
            filt = daubechies_filters(order)
            x = rng.normal(size=length)
            comps = reconstruct_components(swt(x, filt, level), filt)
            assert np.max(np.abs(comps.total() - x)) <= 1e-9 * np.max(np.abs(x)), (
                f"db{order} DL={level} N={length}"
            )


def test_criterion_3_filter_invariants(capsys):
    with criterion(3, "filter-bank invariants hold for orders 1..7", capsys):
        for order in range(1, 8):
            f = daubechies_filters(order)
            length = 2 * order
            assert abs(f.lp.sum() - SQRT2) < 1e-12
            assert abs(f.lp @ f.lp - 1.0) < 1e-12
            for shift in range(1, order):
                assert abs(f.lp[: length - 2 * shift] @ f.lp[2 * shift :]) < 1e-12
            signs = (-1.0) ** np.arange(length)
            assert np.array_equal(f.hp, signs * f.lp[::-1])
            k = np.arange(length, dtype=float)
            for p in range(order):
                assert abs(k**p @ f.hp) < 1e-8, f"db{order} moment {p}"


def test_criterion_4_padding_plan_arithmetic(capsys):
    with criterion(4, "padded length 62 and right pad 8 for (27, 27, db4, DL=1)", capsys):
        plan = padding_plan(27, 27, daubechies_filters(4), 1)
        assert plan.total == 62
        assert plan.right_len == 8


def test_criterion_5_metrics_oracle(capsys):
    with criterion(5, "metrics match the double-loop oracle to 1e-12 on 100 matrices", capsys):
        rng = np.random.default_rng(505)
        for _ in range(100):
            d = int(rng.integers(1, 6))
            n = int(rng.integers(2, 11))
            actual = rng.uniform(1.0, 50.0, size=(d, n))
            pred = actual + rng.normal(size=(d, n))
            max_power = float(actual.max()) + 1.0
            means = actual.mean(axis=0) + 0.1 * rng.normal(size=n)
            ctx = MetricsContext(max_power=max_power, step_means=means)
            m = compute_metrics(pred, actual, ctx)

            abs_sum = sq_sum = ref_abs = ref_sq = num_r2 = 0.0
            for i in range(d):
                for t in range(n):
                    err = pred[i, t] - actual[i, t]
                    abs_sum += abs(err)
                    sq_sum += err * err
                    ref_abs += abs(means[t] - actual[i, t])
                    ref_sq += (means[t] - actual[i, t]) ** 2
                    num_r2 += (means[t] - pred[i, t]) ** 2
            count = d * n
            assert m.mae == pytest.approx(abs_sum / count, rel=1e-12)
            assert m.rmse == pytest.approx(math.sqrt(sq_sum / count), rel=1e-12)
            assert m.mre_pct == pytest.approx(abs_sum / count / max_power * 100, rel=1e-12)
            assert m.rae == pytest.approx(abs_sum / ref_abs, rel=1e-12)
            assert m.rrse == pytest.approx(math.sqrt(sq_sum / ref_sq), rel=1e-12)
            assert m.r2 == pytest.approx(num_r2 / ref_sq, rel=1e-12)
            assert m.mae <= m.rmse + 1e-12
        actual = rng.uniform(0.0, 80.0, size=(6, 9))
        means = actual.mean(axis=0)
        ctx = MetricsContext(max_power=100.0, step_means=means)
        m = compute_metrics(np.broadcast_to(means, actual.shape), actual, ctx)
        assert m.rae == pytest.approx(1.0, abs=1e-15)
        assert m.rrse == pytest.approx(1.0, abs=1e-15)


def _enumeration_p(a, b) -> float:
    pooled = list(a) + list(b)
    n, total = len(a), len(pooled)
    order = sorted(range(total), key=lambda i: pooled[i])
    ranks = [0.0] * total
    i = 0
    while i < total:
        j = i
        while j + 1 < total and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2.0 + 1.0
        i = j + 1
    observed = sum(ranks[:n])
    mean = sum(ranks) * n / total
    hits = count = 0
    for combo in itertools.combinations(range(total), n):
        count += 1
        if abs(sum(ranks[i] for i in combo) - mean) >= abs(observed - mean) - 1e-12:
            hits += 1
    return hits / count


def test_criterion_6_wilcoxon(capsys):
    with criterion(6, "exact rank-sum p equals enumeration; normal approx within 0.02", capsys):
        rng = np.random.default_rng(606)
        for n in range(1, 8):
            for m in range(1, 8):
                a = rng.normal(size=n)
                b = rng.normal(size=m) + rng.normal() * 0.4
                res = wilcoxon_rank_sum(a, b)
                assert res.method == "exact"
                assert res.p_two_sided == pytest.approx(_enumeration_p(a, b), abs=1e-12)
        tied_a = [1.0, 2.0, 2.0, 3.0, 5.0]
        tied_b = [2.0, 2.0, 4.0]
        assert wilcoxon_rank_sum(tied_a, tied_b).p_two_sided == pytest.approx(
            _enumeration_p(tied_a, tied_b), abs=1e-12
        )
        worst = 0.0
        for _ in range(25):
            a = rng.normal(size=7)
            b = rng.normal(size=7) + rng.normal() * 0.5
            exact = wilcoxon_rank_sum(a, b, method="exact").p_two_sided
            approx = wilcoxon_rank_sum(a, b, method="normal").p_two_sided
            worst = max(worst, abs(exact - approx))
        assert worst < 0.02, f"worst exact-vs-normal gap {worst:.4f}"


def test_criterion_7_cnn_gradient_check(capsys):
    with criterion(7, "analytic CNN gradients match central differences < 1e-4", capsys):
        rng = np.random.default_rng(707)
        x = rng.normal(size=(2, 27, 2))
        y = rng.normal(size=(2, 27))
        for topology in ("mc", "mi"):
            net = ConvNet(27, 2, CnnConfig(filters=32, topology=topology), seed=11)
            err = gradient_check(net, x, y, step=1e-6, max_checks=600, seed=1)
            assert err < 1e-4, f"{topology}: max relative error {err:.2e}"


def test_criterion_8_model_count_law(acceptance_matrix, capsys):
    with criterion(8, "model counts: LR_MM DL=3 -> 108, LR_MC -> 27, CNN_MC/MI -> 1", capsys):
        mm = PipelineConfig(model="lr", approach="mm", wavelet_order=2, level=3, train_days=365)
        assert run_pipeline(mm, acceptance_matrix).fitted_model_count == 27 * 4 == 108
        mc = PipelineConfig(model="lr", approach="mc", wavelet_order=2, level=3, train_days=365)
        assert run_pipeline(mc, acceptance_matrix).fitted_model_count == 27
        small = dict(cnn_filters=4, cnn_max_epochs=2, cnn_patience=2, train_days=365)
        cnn_mc = PipelineConfig(model="cnn", approach="mc", wavelet_order=1, level=1, **small)
        assert run_pipeline(cnn_mc, acceptance_matrix).fitted_model_count == 1
        cnn_mi = PipelineConfig(model="cnn", approach="mi", wavelet_order=1, level=1, **small)
        assert run_pipeline(cnn_mi, acceptance_matrix).fitted_model_count == 1


def test_criterion_9_causality(acceptance_matrix, capsys):
    with criterion(9, "truncating after a test day reproduces its forecast bit-for-bit", capsys):
        for model, extra in (("lr", {}), ("rf", {"rf_estimators": 3})):
            cfg = PipelineConfig(
                model=model, approach="mc", wavelet_order=3, level=2,
                padding="rep", train_days=365, **extra,
            )
            full = run_pipeline(cfg, acceptance_matrix)
            for target_day in (365, 380, 399):
                cut = DailyMatrix(
                    acceptance_matrix.values[: target_day + 1],
                    acceptance_matrix.dates[: target_day + 1],
                )
                partial = run_pipeline(cfg, cut)
                j = target_day - 365
                assert np.array_equal(full.predictions[j], partial.predictions[-1]), (
                    f"{model} day {target_day}"
                )


def test_criterion_10_desk_scale_forecasting(acceptance_matrix, capsys):
    with criterion(
        10, "LR routes beat persistence; MC within 1.10x MM MAE; MC faster at DL=4", capsys
    ):
        started = time.perf_counter()
        mae = {}
        for label, cfg in {
            "persistence": PipelineConfig(model="persistence", train_days=365),
            "lr": PipelineConfig(model="lr", train_days=365),
            "lr_mc": PipelineConfig(
                model="lr", approach="mc", wavelet_order=4, level=2, train_days=365
            ),
            "lr_mm": PipelineConfig(
                model="lr", approach="mm", wavelet_order=4, level=2, train_days=365
            ),
        }.items():
            mae[label] = run_pipeline(cfg, acceptance_matrix).metrics.mae
        assert mae["lr"] < mae["persistence"]
        assert mae["lr_mc"] < mae["persistence"]
        assert mae["lr_mm"] < mae["persistence"]
        assert mae["lr_mc"] <= 1.10 * mae["lr_mm"], f"{mae['lr_mc']} vs {mae['lr_mm']}"

        mc4 = PipelineConfig(model="lr", approach="mc", wavelet_order=4, level=4, train_days=365)
        mm4 = PipelineConfig(model="lr", approach="mm", wavelet_order=4, level=4, train_days=365)
        t_mc = [run_pipeline(mc4, acceptance_matrix).wall_time_s for _ in range(5)]
        t_mm = [run_pipeline(mm4, acceptance_matrix).wall_time_s for _ in range(5)]
        assert np.mean(t_mc) <= np.mean(t_mm), f"{np.mean(t_mc):.3f}s vs {np.mean(t_mm):.3f}s"
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"criterion took {elapsed:.1f}s"


def test_criterion_11_volatility(capsys):
    with criterion(11, "volatility: zero for constant/geometric, scale-invariant, oracle-equal", capsys):
        constant = np.full(27 * 20, 6.0)
        _, sigma = historical_volatility(constant, 1, 27, group="samples")
        assert sigma == 0.0
        geometric = 2.0 * 1.03 ** np.arange(27 * 20)
        _, sigma = historical_volatility(geometric, 1, 27, group="samples")
        assert abs(sigma) <= 1e-12
        _, sigma = historical_volatility(geometric, 27, 27, group="returns")
        assert abs(sigma) <= 1e-12

        rng = np.random.default_rng(1111)
        series = rng.uniform(0.5, 30.0, size=27 * 15)
        _, base = historical_volatility(series, 1, 27, group="samples")
        for alpha in (1e-3, 7.0, 1e5):
            _, scaled = historical_volatility(alpha * series, 1, 27, group="samples")
            assert scaled == pytest.approx(base, rel=1e-12)

        def oracle(series, h, window, group):
            sigmas = []
            if group == "samples":
                blocks = [series[s : s + window] for s in range(0, len(series), window)]
                chunks = [
                    [math.log(b[t] / b[t - h]) for t in range(h, len(b))] for b in blocks
                ]
            else:
                rets = [math.log(series[t] / series[t - h]) for t in range(h, len(series))]
                chunks = [rets[s : s + window] for s in range(0, len(rets), window)]
            for c in chunks:
                if len(c) >= 2:
                    mean = sum(c) / len(c)
                    sigmas.append(math.sqrt(sum((r - mean) ** 2 for r in c) / (len(c) - 1)))
            return sum(sigmas) / len(sigmas)

        for group, lag in (("samples", 1), ("returns", 27)):
            _, got = historical_volatility(series, lag, 27, group=group)
            assert got == pytest.approx(oracle(series.tolist(), lag, 27, group), rel=1e-12)


def test_criterion_11_optional_real_nsw_check(capsys):
    """Reported, not hard-failed: set SWTFORECAST_NSW_CSV to a real NSW export."""
    path = os.environ.get("SWTFORECAST_NSW_CSV")
    if not path:
        pytest.skip("no real NSW dataset supplied (SWTFORECAST_NSW_CSV unset)")
    matrices, _ = load_csv(path)
    aggregate = aggregate_sites(matrices) if len(matrices) > 1 else matrices[0]
    table = volatility_table([("state", aggregate.values.ravel())])
    intra, trans = table.sigma_intra[0], table.sigma_trans[0]
    with capsys.disabled():
        print(
            f"ACCEPTANCE 11 (conditional): NSW sigma_intra={intra:.2f} (reference 9.35), "
            f"sigma_trans={trans:.2f} (reference 7.39); within 10%: "
            f"{abs(intra - 9.35) <= 0.935 and abs(trans - 7.39) <= 0.739}"
        )


def test_criterion_12_normalization_round_trip(capsys):
    with criterion(12, "normalization round trip to 1e-12; extremes map to 0 and 1", capsys):
        rng = np.random.default_rng(1212)
        for _ in range(20):
            train = rng.normal(size=(30, 5)) * rng.uniform(0.1, 1000.0)
            params = fit_normalizer(train)
            x = rng.normal(size=(10, 5)) * 100.0
            back = denormalize(normalize(x, params), params)
            assert np.max(np.abs(back - x)) <= 1e-12 * max(1.0, np.max(np.abs(x)))
            scaled = normalize(train, params)
            assert np.all(scaled.min(axis=0) == 0.0)
            assert np.all(scaled.max(axis=0) == 1.0)
