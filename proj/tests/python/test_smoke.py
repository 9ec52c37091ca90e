import math

import numpy as np
import pytest

import valunlearn as vu


def small_data(n=300, d=4, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1).max()
    y = np.where(x @ rng.normal(size=d) >= 0, 1.0, -1.0)
    return vu.Dataset(x, y)


def test_train_reaches_stationary_point():
    data = small_data()
    model = vu.train(data, "logistic", 0.01)
    assert model.w.shape == (4,)
    assert vu.gradient_residual(model.w, data, "logistic", 0.01) < 1e-6
    assert vu.evaluate(model.w, data).accuracy > 0.8


def test_quadratic_newton_round_is_exact():
    data = small_data(seed=1)
    lam = 0.01
    x, y = data.features, data.labels
    n = len(data)
    w = np.linalg.solve(x.T @ x / n + lam * np.eye(4), x.T @ y / n)
    h = x.T @ x / n + lam * np.eye(4)
    gone = list(range(20))
    w1, _ = vu.newton_round(w, h, data.select(gone), n_before=n, loss="squared", lam=lam)
    rest = data.without(gone)
    xr, yr = rest.features, rest.labels
    exact = np.linalg.solve(xr.T @ xr / len(rest) + lam * np.eye(4), xr.T @ yr / len(rest))
    assert np.linalg.norm(w1 - exact) <= 1e-8 * np.linalg.norm(exact)


def test_knn_values_sum_to_test_accuracy_utility():
    train = small_data(50, seed=2)
    test = small_data(10, seed=3)
    q = vu.knn_sv(train, test, 3)
    assert set(q) == set(train.ids)
    assert all(math.isfinite(v) for v in q.values())


def test_weights_follow_value_branches():
    assert vu.weight_from_value(-1.0, 0.1) == 1.0
    assert vu.weight_from_value(0.0, 0.1) == 0.0
    assert vu.weight_from_value(0.2, 0.1) == pytest.approx(0.25)
    v = vu.weights_from_values({0: -0.5, 1: 0.0, 2: 0.1, 3: 0.4})
    assert v[0] == 1.0 and v[1] == 0.0 and v[3] == pytest.approx(0.125)


def test_bounds_and_constant():
    assert vu.gauss_constant(1e-4) == pytest.approx(4.34361, abs=1e-3)
    gap = vu.parameter_gap_bound(1.0, 0.1, 0.001, 21000, 1000, 1000)
    assert gap == pytest.approx(1_000_200, rel=1e-9)
    assert vu.residual_bound(1.0, 0.1, 0.001, 21000, 1000, 1000) == pytest.approx(gap * 0.001)


def test_synthetic_and_run(tmp_path):
    data = vu.gen_synthetic("sy1", n=500, seed=1)
    assert len(data) == 500 and data.dim == 20
    rounds = vu.run(
        {"n": "600", "rounds": "3", "deletions": "10", "repetitions": "2", "method": "dvwu-k"},
        out=tmp_path,
    )
    assert len(rounds) == 6
    assert all(r["residual"] <= r["threshold"] for r in rounds)
    assert (tmp_path / "rounds.csv").exists()


def test_bad_config_raises():
    with pytest.raises(ValueError):
        vu.run({"method": "no-such-method"})
