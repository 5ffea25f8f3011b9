import math

import numpy as np
import pytest

from neulogit.link import R_MAX, dsigmoid, kappa_for_bound, link_eval, sigmoid


def test_link_eval_at_zero():
    mu, dmu, ddmu = link_eval(0.0)
    assert mu == 0.5
    assert dmu == 0.25
    assert ddmu == 0.0


def test_link_eval_known_point():
    # mu(1) = 1 / (1 + e^-1)
    mu, dmu, ddmu = link_eval(1.0)
    assert mu == pytest.approx(0.7310585786300049, abs=1e-15)
    assert dmu == pytest.approx(mu * (1 - mu), abs=1e-15)
    assert ddmu == pytest.approx(dmu * (1 - 2 * mu), abs=1e-15)


def test_link_eval_symmetry():
    for z in (0.3, 1.7, 12.0):
        left = link_eval(-z)
        right = link_eval(z)
        assert left.mu == pytest.approx(1.0 - right.mu, abs=1e-15)
        assert left.dmu == pytest.approx(right.dmu, abs=1e-15)
        assert left.ddmu == pytest.approx(-right.ddmu, abs=1e-15)


def test_link_eval_extreme_tails_stable():
    assert link_eval(800.0).mu == 1.0
    assert link_eval(-800.0).mu == 0.0
    assert link_eval(800.0).dmu == 0.0


def test_link_eval_rejects_nonfinite():
    with pytest.raises(ValueError):
        link_eval(math.inf)
    with pytest.raises(ValueError):
        link_eval(math.nan)


def test_sigmoid_matches_scalar():
    z = np.linspace(-30, 30, 101)
    vals = sigmoid(z)
    for zi, vi in zip(z, vals):
        assert vi == pytest.approx(link_eval(zi).mu, abs=1e-15)


def test_sigmoid_handles_zero_dim_and_infinities():
    assert sigmoid(np.float64(2.0)).shape == ()
    assert float(sigmoid(np.inf)) == 1.0
    assert float(sigmoid(-np.inf)) == 0.0
    out = sigmoid(np.array([-np.inf, 0.0, np.inf]))
    assert np.all(out == [0.0, 0.5, 1.0])


def test_sigmoid_monotone_and_bounded():
    rng = np.random.default_rng(0)
    z = np.sort(rng.normal(scale=50.0, size=500))
    out = sigmoid(z)
    assert np.all(np.diff(out) >= 0.0)
    assert np.all((out >= 0.0) & (out <= 1.0))


def test_dsigmoid_peak_and_symmetry():
    assert float(dsigmoid(0.0)) == 0.25
    z = np.linspace(-20, 20, 81)
    out = dsigmoid(z)
    assert np.all(out <= R_MAX)
    assert out[::-1] == pytest.approx(out, abs=1e-15)


def test_kappa_at_zero_is_four():
    kappa, R = kappa_for_bound(0.0)
    assert kappa == 4.0
    assert R == 0.25


def test_kappa_known_value():
    # 1 / mu'(5): mu(5) = 1/(1+e^-5), kappa = 1/(mu (1-mu))
    mu = 1.0 / (1.0 + math.exp(-5.0))
    expected = 1.0 / (mu * (1.0 - mu))
    assert kappa_for_bound(5.0).kappa == pytest.approx(expected, rel=1e-12)
    assert kappa_for_bound(5.0).kappa == pytest.approx(150.4198970495757, rel=1e-13)


def test_kappa_grows_exponentially():
    # kappa(B+1)/kappa(B) approaches e from below as B grows
    near = kappa_for_bound(6.0).kappa / kappa_for_bound(5.0).kappa
    far = kappa_for_bound(31.0).kappa / kappa_for_bound(30.0).kappa
    assert near == pytest.approx(math.e, rel=2e-2)
    assert far == pytest.approx(math.e, rel=1e-12)
    assert near < far < math.e


def test_kappa_rejects_negative_bound():
    with pytest.raises(ValueError):
        kappa_for_bound(-1.0)


def test_kappa_overflows_loudly():
    with pytest.raises(OverflowError):
        kappa_for_bound(800.0)
