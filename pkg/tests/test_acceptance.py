"""Acceptance criteria AC1 to AC11 at their stated tolerances.

Each test prints one PASS/FAIL line; the same lines are collected into the
"acceptance criteria" section of the pytest terminal summary. Run alone with
``python3 -m pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time

import numpy as np
import pytest

from robust_tsf.anomalies import AnomalySpec, inject_subsequence, run_lengths
from robust_tsf.harness.config import parse_config_text
from robust_tsf.harness.experiment import best_mae, mean_delta, prepare, run, selection_config, strip_timing
from robust_tsf.lp_oracle import lp_oracle
from robust_tsf.models import LossKind, Model, ModelSpec
from robust_tsf.probes import gaussian_optimum_probe, loss_identity_probe, risk_affinity_probe
from robust_tsf.scoring import select
from robust_tsf.series import TimeSeries
from robust_tsf.trend import TrendConfig, fit_trend, trend_windows

SEEDS = "seeds = 0, 1, 2\n"


def _report(box, ok, detail):
    box["detail"] = detail
    print(f"{'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@pytest.mark.criterion("AC1 trend optimality")
def test_ac1_trend_filter_matches_lp_oracle(criterion):
    rng = np.random.default_rng(1)
    start = time.monotonic()
    worst = 0.0
    for i in range(100):
        T = int(rng.integers(8, 21))
        lam = (0.1, 0.3, 1.0)[i % 3]
        z = rng.normal(size=T) * rng.uniform(0.5, 3.0)
        _, best = lp_oracle(z, lam)
        worst = max(worst, abs(fit_trend(z, TrendConfig(lam=lam)).objective - best))
    elapsed = time.monotonic() - start
    _report(criterion, worst <= 1e-6 and elapsed < 10,
            f"max |gap| = {worst:.2e} (<= 1e-6), {elapsed:.2f} s (< 10 s)")


@pytest.mark.criterion("AC2 MAE identity")
def test_ac2_mae_sum_identity(criterion):
    rng = np.random.default_rng(2)
    worst_ulp, min_spread = 0.0, math.inf
    grid = np.linspace(0.05, 0.95, 19)
    for _ in range(1000):
        y, ya = rng.normal(scale=5.0, size=2)
        q = y + rng.uniform(0.001, 0.999) * (ya - y)
        worst_ulp = max(worst_ulp, loss_identity_probe(y, ya, [q]).max_ulp_error)
        mse = loss_identity_probe(y, ya, y + grid * (ya - y)).mse_sums
        min_spread = min(min_spread, np.ptp(mse))
    _report(criterion, worst_ulp <= 1.0 and min_spread > 0,
            f"max MAE-sum error {worst_ulp:.0f} ulp (<= 1), min MSE spread over grid {min_spread:.3g} (> 0)")


@pytest.mark.criterion("AC3 risk affinity")
def test_ac3_risk_affinity(criterion):
    rng = np.random.default_rng(3)
    data = (rng.normal(size=(1000, 16)), rng.normal(size=(1000, 1)))
    model = Model(ModelSpec("LinearAR", 16, 1))
    start = time.monotonic()
    parts, ok = [], True
    for eta in (0.1, 0.3, 0.49):
        audit = risk_affinity_probe(model, data, eta, AnomalySpec("Constant", scale=0.5), 100_000, seed=3)
        z = abs(audit.gamma1 - (1 - 2 * eta)) / audit.gamma1_se
        ok &= audit.consistent(3.0)
        parts.append(f"eta={eta}: gamma1={audit.gamma1:.4f} vs {1 - 2 * eta:.2f} ({z:.2f} SE)")
    elapsed = time.monotonic() - start
    _report(criterion, ok and elapsed < 5, "; ".join(parts) + f"; {elapsed:.2f} s (< 5 s)")


@pytest.mark.criterion("AC4 Gaussian optimum")
def test_ac4_gaussian_optimum(criterion):
    q = {k: gaussian_optimum_probe(0.0, 2.0, 0.3, 100_000, LossKind(k)) for k in ("MAE", "MSE")}
    _report(criterion, all(abs(v) < 0.02 for v in q.values()),
            f"|q*| MAE {abs(q['MAE']):.2e}, MSE {abs(q['MSE']):.2e} (< 0.02)")


@pytest.mark.criterion("AC5 gradient check")
def test_ac5_gradients(criterion):
    from test_models import max_rel_error, numeric_grad

    rng = np.random.default_rng(5)
    worst = {}
    for kind in ("LinearAR", "MLP1"):
        for loss in ("MAE", "MSE"):
            w = 0.0
            for draw in range(50):
                K, O = int(rng.integers(2, 10)), int(rng.integers(1, 4))
                act = ("tanh", "relu")[draw % 2]
                m = Model(ModelSpec(kind, K, O, hidden=int(rng.integers(2, 9)), activation=act, init_seed=draw))
                X, Y = rng.normal(size=(int(rng.integers(1, 9)), K)), rng.normal(size=(1, O))
                Y = np.repeat(Y, X.shape[0], axis=0) + rng.normal(size=(X.shape[0], O))
                _, g = m.loss_and_grad(X, Y, LossKind(loss))
                w = max(w, max_rel_error(g, numeric_grad(m, X, Y, LossKind(loss))))
            worst[f"{kind}/{loss}"] = w
    _report(criterion, max(worst.values()) < 1e-5,
            ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (< 1e-5)")


@pytest.mark.criterion("AC6 position effect")
def test_ac6_position_effect(criterion):
    base = ("data.length = 4000\nanomaly.kind = Gaussian\nanomaly.rate = 0.2\nanomaly.scale = 2\n"
            "model.kind = LinearAR\nmethods = vanilla_mae\n" + SEEDS)
    start = time.monotonic()
    mae = {pos: best_mae(run(parse_config_text(base + f"anomaly.position = {pos}\n")), "vanilla_mae")
           for pos in ("front", "back")}
    elapsed = time.monotonic() - start
    margin = mae["back"] - mae["front"]
    _report(criterion, margin > 0 and elapsed < 60,
            f"best MAE back {mae['back']:.4f} - front {mae['front']:.4f} = {margin:.4f} (> 0), "
            f"{elapsed:.1f} s (< 60 s)")


@pytest.mark.criterion("AC7 end-to-end ordering")
def test_ac7_robust_tsf_vs_vanilla(criterion):
    cfg = parse_config_text("anomaly.kind = Missing\nanomaly.rate = 0.3\nanomaly.scale = 0\n"
                            "methods = robust_tsf, vanilla_mae\n" + SEEDS)
    start = time.monotonic()
    rep = run(cfg)
    elapsed = time.monotonic() - start
    b_r, b_v = best_mae(rep, "robust_tsf"), best_mae(rep, "vanilla_mae")
    d_r, d_v = mean_delta(rep, "robust_tsf"), mean_delta(rep, "vanilla_mae")
    _report(criterion, b_r <= b_v and d_r <= d_v and elapsed < 120,
            f"best MAE {b_r:.4f} <= {b_v:.4f}; delta {d_r:.4f} <= {d_v:.4f}; {elapsed:.1f} s (< 120 s)")


@pytest.mark.criterion("AC8 selection purity")
def test_ac8_selection_purity(criterion):
    cfg = parse_config_text("anomaly.kind = Gaussian\nanomaly.rate = 0.3\nanomaly.scale = 2\n"
                            "selection.tau = 0.3\nselection.weight_kind = Dirac\n" + SEEDS)
    K = cfg["window.input_len"]
    parts, ok = [], True
    for seed in cfg["seeds"]:
        prep = prepare(cfg, seed)
        trip = trend_windows(prep.train_set, fit_trend(prep.noisy_train).trend)
        mask = select(trip, selection_config(cfg))
        last_bad = prep.point_mask[prep.train_set.starts + K - 1]
        sel, rej = last_bad[mask].mean(), last_bad[~mask].mean()
        ok &= sel < rej
        parts.append(f"seed {seed}: {sel:.3f} selected vs {rej:.3f} rejected")
    _report(criterion, ok, "; ".join(parts))


@pytest.mark.criterion("AC9 degenerate equivalences")
def test_ac9_degenerate_equivalences(criterion):
    rep = run(parse_config_text(
        "data.length = 1200\nanomaly.kind = Gaussian\nanomaly.rate = 0.2\nanomaly.scale = 2\n"
        "selection.tau = inf\ndir.delta = inf\nloss_sel.keep_fraction = 1\ndir.loss = MSE\nloss_sel.loss = MSE\n"
        "methods = robust_tsf, vanilla_mae, offline_dir, loss_sel, vanilla_mse\n" + SEEDS))

    def hist(m):
        return strip_timing([r["history"] for r in rep["methods"][m]["seeds"]])

    checks = {
        "tau=inf vs vanilla_mae": hist("robust_tsf") == hist("vanilla_mae"),
        "delta=inf vs vanilla_mse": hist("offline_dir") == hist("vanilla_mse"),
        "keep=1 vs vanilla_mse": hist("loss_sel") == hist("vanilla_mse"),
    }
    _report(criterion, all(checks.values()),
            ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in checks.items()))


@pytest.mark.criterion("AC10 determinism")
def test_ac10_determinism(criterion):
    cfg = parse_config_text(
        "data.length = 1200\nanomaly.kind = Missing\nanomaly.rate = 0.2\nanomaly.scale = 0\nmodel.kind = MLP1\n"
        "methods = robust_tsf, vanilla_mae, vanilla_mse, offline_dir, loss_sel, zero_impute, interp_impute, "
        "trend_only\nseeds = 0, 1\n")
    a = json.dumps(strip_timing(run(cfg)), sort_keys=True)
    b = json.dumps(strip_timing(run(cfg)), sort_keys=True)
    _report(criterion, a == b, f"two runs of 8 methods x 2 seeds: {'identical' if a == b else 'DIFFERENT'} "
                               f"({len(a)} bytes)")


@pytest.mark.criterion("AC11 subsequence run length")
def test_ac11_subsequence_run_length(criterion):
    ts = TimeSeries(np.zeros(1_000_000))
    _, mask = inject_subsequence(ts, AnomalySpec("SubsequenceGaussian", 0.3, 1.0, shape=0.9, seed=11))
    mean_run = run_lengths(mask).mean()
    rel = abs(mean_run - 10.0) / 10.0
    _report(criterion, rel <= 0.05, f"mean run length {mean_run:.3f} vs 10 ({100 * rel:.2f}% off, <= 5%)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
