import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robust_tsf.anomalies import AnomalySpec
from robust_tsf.models import LossKind, Model, ModelSpec
from robust_tsf.probes import gaussian_optimum_probe, loss_identity_probe, risk_affinity_probe


def _clean(n=400, K=8, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, K)), rng.normal(size=(n, 1))


def test_identity_example():
    audit = loss_identity_probe(0.0, 1.0, [0.3])
    assert audit.mae_sums[0] == 1.0 and audit.c_x == 1.0
    mse = loss_identity_probe(0.0, 1.0, [0.3, 0.5]).mse_sums
    assert abs(mse[0] - 0.58) < 1e-15 and mse[1] == 0.5


def test_identity_outside_band():
    audit = loss_identity_probe(0.0, 1.0, [-0.2, 1.5])
    assert np.all(audit.mae_sums > 1.0)


def test_identity_errors():
    with pytest.raises(ValueError):
        loss_identity_probe(0.0, 1.0, [])
    with pytest.raises(ValueError):
        loss_identity_probe(1.0, 1.0, [0.5])


@given(st.floats(-100, 100), st.floats(-100, 100), st.lists(st.floats(0.001, 0.999), min_size=3, max_size=20))
def test_identity_holds_to_one_ulp(y, ya, fracs):
    if y == ya:
        return
    q = [y + f * (ya - y) for f in fracs]
    audit = loss_identity_probe(y, ya, q)
    assert audit.max_ulp_error <= 1.0


@pytest.mark.parametrize("kind,scale", [("Constant", 0.5), ("Missing", 0.0)])
def test_affinity_zero_rate(kind, scale):
    audit = risk_affinity_probe(Model(ModelSpec("LinearAR", 8, 1)), _clean(), 0.0, AnomalySpec(kind, scale=scale),
                                2000)
    assert abs(audit.gamma1 - 1) < 1e-12 and abs(audit.gamma2) < 1e-12
    np.testing.assert_allclose(audit.noisy_risk, audit.clean_risk)


@pytest.mark.parametrize("eta", [0.1, 0.3, 0.49])
def test_affinity_recovers_slope(eta):
    audit = risk_affinity_probe(Model(ModelSpec("LinearAR", 8, 1)), _clean(), eta,
                                AnomalySpec("Constant", scale=0.5), 100_000, seed=1)
    assert audit.consistent(3.0)
    assert abs(audit.gamma2 - eta * audit.c_x_mean) < 5 * audit.gamma1_se


def test_affinity_constant_within_one_percent():
    audit = risk_affinity_probe(Model(ModelSpec("LinearAR", 8, 1)), _clean(), 0.3,
                                AnomalySpec("Constant", scale=0.5), 100_000, seed=2)
    assert abs(audit.gamma1 - 0.4) / 0.4 < 0.01 + 3 * audit.gamma1_se / 0.4


def test_affinity_errors():
    m = Model(ModelSpec("LinearAR", 8, 1))
    with pytest.raises(ValueError):
        risk_affinity_probe(m, _clean(), 0.5, AnomalySpec("Constant", scale=0.5), 1000)
    with pytest.raises(ValueError):
        risk_affinity_probe(m, _clean(), 0.2, AnomalySpec("Gaussian", scale=1.0), 1000)


def test_gaussian_optimum():
    for loss in ("MAE", "MSE"):
        assert abs(gaussian_optimum_probe(0.0, 2.0, 0.3, 100_000, LossKind(loss))) < 0.02
    assert gaussian_optimum_probe(1.5, 2.0, 0.0, 1000, LossKind("MSE")) == 1.5


def test_gaussian_optimum_mse_closed_form_matches_search():
    from scipy.optimize import minimize_scalar

    from robust_tsf._rng import stream
    eps = stream(4, "probe.gaussian").normal(0, 2.0, 5000)
    risk = lambda q: 0.7 * q ** 2 + 0.3 * np.mean((q - eps) ** 2)
    ref = minimize_scalar(risk, bounds=(-5, 5), method="bounded", options={"xatol": 1e-10}).x
    assert abs(gaussian_optimum_probe(0.0, 2.0, 0.3, 5000, LossKind("MSE"), seed=4) - ref) < 1e-7


def test_gaussian_optimum_errors():
    with pytest.raises(ValueError):
        gaussian_optimum_probe(0, 0.0, 0.3, 10, LossKind("MAE"))
    with pytest.raises(ValueError):
        gaussian_optimum_probe(0, 1.0, 1.0, 10, LossKind("MAE"))
    with pytest.raises(ValueError):
        gaussian_optimum_probe(0, 1.0, 0.3, 0, LossKind("MAE"))
