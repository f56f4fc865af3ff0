import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import eval_hermite, gammaln

from opawitness import (
    DomainError,
    GainSetting,
    PhotonNumberDistribution,
    amplified_mean,
    asymptotic_moments,
    estimate_moments,
    intensity_distribution,
    make_coherent,
    make_fock,
    make_thermal,
    make_vacuum,
    mix,
    moments,
    sample_pulses,
)
from opawitness.opa import hermite_functions, mode_mismatch, quadrature_grid

G = 6.5


def psi_oracle(n, x):
    """Closed form via physicists' Hermite polynomials (small n only)."""
    log_norm = -0.5 * (n * math.log(2) + gammaln(n + 1)) - 0.25 * math.log(math.pi)
    return np.exp(log_norm - x * x / 2) * eval_hermite(n, x)


# -- gain and means ----------------------------------------------------------
def test_gain_setting():
    g = GainSetting(6.5)
    assert g.asymptotic_ok and not GainSetting(2.0).asymptotic_ok
    assert g.sinh2 == pytest.approx(math.sinh(6.5) ** 2)
    with pytest.raises(DomainError):
        GainSetting(-1.0)


def test_amplified_mean_examples():
    s2 = math.sinh(G) ** 2
    assert amplified_mean(0.0, G) == pytest.approx(s2)
    assert amplified_mean(0.7, G) == pytest.approx(2.4 * s2 + 0.7)
    assert amplified_mean(1.0, 12.0) / math.sinh(12.0) ** 2 == pytest.approx(3.0, abs=1e-9)


@given(st.floats(0.01, 10.0))
def test_amplified_mean_excess_shrinks_with_gain(m):
    gains = np.linspace(3.0, 12.0, 10)
    excess = [amplified_mean(m, g) / math.sinh(g) ** 2 - (2 * m + 1) for g in gains]
    assert np.all(np.diff(excess) < 0)
    assert excess[-1] < 1e-9 * max(m, 1)


# -- asymptotic moment map --------------------------------------------------
@pytest.mark.parametrize("n", range(6))
def test_fock_g2_post(n):
    amp = asymptotic_moments(moments(make_fock(n)))
    assert amp.mu_rel == 2 * n + 1
    assert amp.g2_post == pytest.approx(1 + 2 * (1 + n + n * n) / (2 * n + 1) ** 2, abs=1e-15)


def test_fock_reference_values():
    assert asymptotic_moments(0.0, 0.0).g2_post == 3.0
    assert asymptotic_moments(1.0, 0.0).g2_post == pytest.approx(5 / 3)


@given(st.floats(0.0, 30.0))
def test_thermal_maps_to_three(nbar):
    assert asymptotic_moments(nbar, nbar * nbar + nbar).g2_post == pytest.approx(3.0, abs=1e-12)


@given(st.floats(0.01, 30.0))
def test_coherent_maps_to_nc_line(m):
    amp = asymptotic_moments(m, m)
    mu = amp.mu_rel
    assert abs(amp.g2_post - (1.5 + 3 / mu - 1.5 / mu**2)) < 1e-12


def test_asymptotic_moments_vectorized():
    m = np.array([0.0, 1.0, 2.0])
    amp = asymptotic_moments(m, np.zeros(3))
    np.testing.assert_allclose(amp.mu_rel, [1, 3, 5])


def test_asymptotic_moments_needs_variance():
    with pytest.raises(TypeError):
        asymptotic_moments(1.0)


# -- wavefunctions ----------------------------------------------------------
def test_hermite_functions_match_closed_form():
    x = np.linspace(-7, 7, 301)
    psi = hermite_functions(20, x)
    for n in range(21):
        np.testing.assert_allclose(psi[n], psi_oracle(n, x), atol=1e-12)


@pytest.mark.parametrize("n", [0, 1, 5, 40, 120])
def test_hermite_functions_normalized(n):
    val, _ = integrate.quad(lambda x: hermite_functions(n, np.array([x]))[n, 0] ** 2, -40, 40, limit=400)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_quadrature_grid_shape():
    x = quadrature_grid(3)
    assert x[0] == pytest.approx(1e-10) and np.all(np.diff(x) > 0)
    assert x[-1] >= math.sqrt(7) + 10


# -- intensity distribution -------------------------------------------------
STATES = {
    "vacuum": make_vacuum(),
    "fock1": make_fock(1),
    "fock2": make_fock(2),
    "fock5": make_fock(5),
    "thermal": make_thermal(1.0),
    "coherent": make_coherent(1.0),
    "mixture": PhotonNumberDistribution([0.67, 0.33]),
}


@pytest.mark.parametrize("name", list(STATES))
def test_intensity_normalization_and_mean(name):
    d = STATES[name]
    dens = intensity_distribution(d, G)
    assert abs(dens.total() - 1) < 1e-6
    # high-gain mean is (2m + 1) sinh^2 G; the +m term is below grid accuracy
    assert dens.mean() / math.sinh(G) ** 2 == pytest.approx(2 * moments(d).m + 1, rel=1e-4)


def test_vacuum_is_scaled_chi_square():
    dens = intensity_distribution(make_vacuum(), G)
    s = math.exp(2 * G) / 4
    N = dens.grid[::997]
    oracle = np.exp(-N / (2 * s)) / np.sqrt(2 * math.pi * s * N)
    np.testing.assert_allclose(dens.density[::997], oracle, rtol=1e-10)
    assert dens.mean() == pytest.approx(math.sinh(G) ** 2, rel=5e-3)


def test_fock1_density_vanishes_at_origin():
    dens = intensity_distribution(make_fock(1), G)
    assert dens.density[0] < 1e-12
    assert dens.density[0] < dens.density[len(dens.density) // 4]


def test_mixture_lies_between_components():
    grid = intensity_distribution(make_fock(1), G).grid
    p0 = intensity_distribution(make_vacuum(), G, grid=grid).density
    p1 = intensity_distribution(make_fock(1), G, grid=grid).density
    pm = intensity_distribution(PhotonNumberDistribution([0.67, 0.33]), G, grid=grid).density
    lo, hi = np.minimum(p0, p1), np.maximum(p0, p1)
    assert np.all(pm >= lo - 1e-15) and np.all(pm <= hi + 1e-15)


def test_intensity_refuses_low_gain_and_short_grid():
    with pytest.raises(DomainError):
        intensity_distribution(make_vacuum(), 2.0)
    with pytest.raises(DomainError):
        intensity_distribution(make_vacuum(), G, grid=np.linspace(1e3, 1e4, 50))
    with pytest.raises(DomainError):
        intensity_distribution(make_vacuum(), G, grid=np.array([0.0, 1.0, 2.0]))


def test_intensity_refuses_huge_photon_numbers():
    with pytest.raises(DomainError):
        intensity_distribution(make_thermal(30.0), G)


def test_intensity_csv(tmp_path):
    dens = intensity_distribution(make_fock(1), G, step=5e-3)
    path = tmp_path / "d.csv"
    dens.to_csv(path)
    assert path.read_text().splitlines()[0] == "N,density"


# -- pulse sampling ---------------------------------------------------------
def test_sampling_is_reproducible():
    a = sample_pulses(make_fock(1), G, 1000, seed=3)
    b = sample_pulses(make_fock(1), G, 1000, seed=3)
    np.testing.assert_array_equal(a.counts, b.counts)
    c = sample_pulses(make_fock(1), G, 1000, seed=4)
    assert not np.array_equal(a.counts, c.counts)


def test_sampled_vacuum_million_pulses():
    rec = sample_pulses(make_vacuum(), G, 1_000_000, seed=0)
    est = estimate_moments(rec, n_boot=0)
    assert abs(est.g2 - 3.0) < 0.02
    assert est.mean / math.sinh(G) ** 2 == pytest.approx(1.0, abs=0.01)


def test_detection_scale_leaves_g2_unchanged():
    full = estimate_moments(sample_pulses(make_fock(1), G, 20000, 1.0, seed=5), n_boot=200)
    half = estimate_moments(sample_pulses(make_fock(1), G, 20000, 0.5, seed=5), n_boot=200)
    assert abs(full.g2 - half.g2) < 3 * full.g2_se


@pytest.mark.parametrize("d, seed", [(make_fock(1), 1), (make_fock(2), 2), (make_thermal(0.5), 3)])
def test_sampled_g2_matches_model(d, seed):
    est = estimate_moments(sample_pulses(d, G, 200_000, seed=seed), n_boot=100, seed=seed)
    assert abs(est.g2 - asymptotic_moments(moments(d)).g2_post) < 3 * est.g2_se


def test_sampling_keeps_herald_and_meta():
    herald = np.arange(10) % 2 == 0
    rec = sample_pulses(make_fock(1), G, 10, seed=1, herald=herald)
    assert rec.heralded().counts.size == 5
    assert rec.meta["gain"] == G and rec.meta["seed"] == 1


@pytest.mark.parametrize("kw", [{"n_pulses": 0}, {"n_pulses": 10, "detection_scale": 0.0}])
def test_sampling_domain(kw):
    with pytest.raises(DomainError):
        sample_pulses(make_vacuum(), G, **kw)


def test_mode_mismatch_is_loss():
    d = mode_mismatch(make_fock(1), 0.9)
    np.testing.assert_allclose(d.probs, [0.1, 0.9])
