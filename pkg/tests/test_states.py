import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from opawitness import (
    DomainError,
    HeraldedSourceConfig,
    PhotonNumberDistribution,
    ValidationError,
    apply_loss,
    heralded_spdc,
    make_coherent,
    make_fock,
    make_thermal,
    make_vacuum,
    mix,
    moments,
)
from opawitness.fock_core import TAIL_TOL

from strategies import distributions, etas


def brute_force_loss(probs, eta):
    """Enumerate every photon as kept/lost; exponential but independent."""
    out = np.zeros(len(probs))
    for n, p in enumerate(probs):
        for k in range(n + 1):
            out[k] += p * math.comb(n, k) * eta**k * (1 - eta) ** (n - k)
    return out


def test_fock_states():
    np.testing.assert_array_equal(make_fock(0).probs, [1.0])
    np.testing.assert_array_equal(make_fock(1).probs, [0.0, 1.0])
    ms = moments(make_fock(2))
    assert (ms.m, ms.s2) == (2.0, 0.0)


@pytest.mark.parametrize("n", [-1, 51, 1.5])
def test_fock_domain(n):
    with pytest.raises(DomainError):
        make_fock(n)


def test_thermal_values():
    assert make_thermal(0).probs.tolist() == [1.0]
    d = make_thermal(1.0)
    assert d.p0 == pytest.approx(0.5, abs=1e-12)
    assert d.p1 == pytest.approx(0.25, abs=1e-12)
    assert abs(moments(make_thermal(0.1)).g2_pre - 2) < 1e-9


def test_coherent_values():
    assert make_coherent(0).probs.tolist() == [1.0]
    assert make_coherent(1.0).p0 == pytest.approx(math.exp(-1), abs=1e-12)
    assert abs(moments(make_coherent(4.0)).g2_pre - 1) < 1e-9
    np.testing.assert_allclose(make_coherent(3.0).probs[:10], stats.poisson.pmf(np.arange(10), 3.0), atol=1e-12)


@pytest.mark.parametrize("make, mean", [(make_thermal, 0.3), (make_thermal, 5.0), (make_coherent, 0.5), (make_coherent, 20.0)])
def test_auto_truncation_tail(make, mean):
    d = make(mean)
    assert d.probs[-1] < TAIL_TOL
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("mean", [-0.1, float("nan")])
def test_negative_means(mean):
    with pytest.raises(DomainError):
        make_thermal(mean)
    with pytest.raises(DomainError):
        make_coherent(mean)


def test_mix_examples():
    d = make_fock(2)
    np.testing.assert_array_equal(mix([1.0], [d]).probs, d.probs)
    np.testing.assert_allclose(mix([0.67, 0.33], [make_vacuum(), make_fock(1)]).probs, [0.67, 0.33])
    m = moments(mix([0.25, 0.75], [make_thermal(1.0), make_thermal(3.0)])).m
    assert m == pytest.approx(0.25 * 1 + 0.75 * 3, abs=1e-9)


@pytest.mark.parametrize("w", [[0.5, 0.6], [1.0], [-0.5, 1.5]])
def test_mix_rejects(w):
    with pytest.raises(ValidationError):
        mix(w, [make_vacuum(), make_fock(1)])


def test_loss_examples():
    d = make_fock(1)
    assert apply_loss(d, 1.0) is d
    np.testing.assert_allclose(apply_loss(d, 0.26).probs, [0.74, 0.26], atol=1e-15)
    np.testing.assert_allclose(apply_loss(PhotonNumberDistribution([0.4, 0.2, 0.4]), 0.5).probs, [0.6, 0.3, 0.1], atol=1e-15)


@pytest.mark.parametrize("eta", [-0.1, 1.1])
def test_loss_domain(eta):
    with pytest.raises(DomainError):
        apply_loss(make_fock(1), eta)


@given(distributions(), etas)
def test_loss_matches_brute_force(d, eta):
    np.testing.assert_allclose(apply_loss(d, eta).probs, brute_force_loss(d.probs, eta), atol=1e-12)


@given(distributions(), etas, etas)
def test_loss_composes(d, a, b):
    np.testing.assert_allclose(apply_loss(apply_loss(d, a), b).probs, apply_loss(d, a * b).probs, atol=1e-12)


@given(distributions(), etas)
def test_loss_preserves_g2(d, eta):
    before = moments(d).g2_pre
    after = moments(apply_loss(d, eta)).g2_pre
    if before is None or after is None:
        return
    assert abs(after - before) < 1e-9


@given(distributions(), etas)
def test_loss_scales_mean(d, eta):
    assert moments(apply_loss(d, eta)).m == pytest.approx(eta * moments(d).m, abs=1e-12)


# -- heralded source --------------------------------------------------------
def test_heralded_low_brightness_limit():
    d, _ = heralded_spdc(HeraldedSourceConfig(1e-6, 0.51))
    assert d.p1 == pytest.approx(0.51, abs=1e-5)
    assert d.p0 == pytest.approx(0.49, abs=1e-5)
    assert d.p2plus < 1e-5


@pytest.mark.parametrize("mean_pairs", [1e-4, 1e-3, 1e-2])
def test_heralded_reduces_to_lossy_single_photon(mean_pairs):
    d, _ = heralded_spdc(HeraldedSourceConfig(mean_pairs, 0.51))
    ref = apply_loss(make_fock(1), 0.51).padded(d.n_max)
    assert np.max(np.abs(d.probs - ref)) < 10 * mean_pairs


def test_lossless_heralding_has_no_vacuum():
    d, _ = heralded_spdc(HeraldedSourceConfig(0.1, 1.0, 1.0))
    assert d.p0 == 0.0


def test_herald_probability_matches_closed_form():
    # thermal pairs with a threshold herald: 1 - 1/(1 + eta_i nbar)
    cfg = HeraldedSourceConfig(0.2, 0.5, 0.3)
    _, p_h = heralded_spdc(cfg)
    assert p_h == pytest.approx(1 - 1 / (1 + 0.3 * 0.2), abs=1e-12)


def test_zero_brightness_is_an_error():
    with pytest.raises(DomainError):
        heralded_spdc(HeraldedSourceConfig(0.0, 0.5))


def test_dark_clicks_add_vacuum():
    clean, _ = heralded_spdc(HeraldedSourceConfig(0.01, 0.5))
    noisy, _ = heralded_spdc(HeraldedSourceConfig(0.01, 0.5, dark_prob=1e-3))
    assert noisy.p0 > clean.p0


def test_heralded_multiphoton_grows_with_brightness():
    p2 = [heralded_spdc(HeraldedSourceConfig(b, 0.51))[0].p2plus for b in (0.008, 0.05, 0.1, 0.25)]
    assert np.all(np.diff(p2) > 0)


def test_source_config_json():
    cfg = HeraldedSourceConfig.from_json('{"mean_pairs": 0.1, "eta_signal": 0.51}')
    assert cfg.to_dict()["mean_pairs"] == 0.1
    with pytest.raises(ValidationError):
        HeraldedSourceConfig.from_json("[1, 2]")
    with pytest.raises(ValidationError):
        HeraldedSourceConfig.from_json('{"mean_pairs": 0.1}')
    with pytest.raises(DomainError):
        HeraldedSourceConfig(0.1, 1.5)
