import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from opawitness import (
    DomainError,
    EstimationError,
    HeraldedSourceConfig,
    PulseFormatError,
    PulseRecordSet,
    ValidationError,
    analyze,
    asymptotic_moments,
    make_thermal,
    make_vacuum,
    sample_pulses,
    sweep_brightness,
)
from opawitness.fock_core import VerdictCategory as V
from opawitness.witnesses import classify_moments
from opawitness.pipeline import heralded_lossy_state, ingest_pulse_csv, preamp_comparison, sweep_to_csv, SWEEP_COLUMNS

G = 6.5


@pytest.fixture(scope="module")
def vacuum_ref():
    return sample_pulses(make_vacuum(), G, 35000, seed=2)


# -- ingest -----------------------------------------------------------------
def test_ingest_three_rows(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("pulse_index,counts,herald\n0,1.5,1\n1,2.25,0\n2,0.0,1\n")
    rec = ingest_pulse_csv(path)
    np.testing.assert_array_equal(rec.counts, [1.5, 2.25, 0.0])
    assert len(rec.meta["sha256"]) == 64
    np.testing.assert_array_equal(ingest_pulse_csv(path, heralded_only=True).counts, [1.5, 0.0])


def test_ingest_empty(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("pulse_index,counts\n")
    with pytest.raises(PulseFormatError):
        ingest_pulse_csv(path)


def test_ingest_simulated_fixture(tmp_path):
    rec = sample_pulses(make_thermal(0.5), G, 35000, seed=8)
    path = tmp_path / "s.csv"
    rec.to_csv(path)
    back = ingest_pulse_csv(path)
    assert back.counts.mean() == rec.counts.mean()


# -- analyze ----------------------------------------------------------------
def test_signal_equal_to_reference(vacuum_ref):
    rep = analyze(vacuum_ref, vacuum_ref, n_boot=200)
    assert rep.mu_rel == 1.0
    assert abs(rep.g2 - 3) < 0.1
    assert rep.verdict.category == V.CLASSICAL


def test_report_is_self_consistent(vacuum_ref):
    sig = sample_pulses(heralded_lossy_state(HeraldedSourceConfig(0.1, 0.51), 0.26 / 0.51), G, 35000, seed=1)
    rep = analyze(sig, vacuum_ref, n_boot=300, seed=4)
    d = json.loads(rep.to_json())
    assert d["schema_version"] == "1.0"
    assert d["mu_rel_ci"][0] <= d["mu_rel"] <= d["mu_rel_ci"][1]
    assert d["g2_ci"][0] <= d["g2"] <= d["g2_ci"][1]
    assert d["verdict"]["thresholds"]["ng"] == d["boundary_samples"]["ng"]
    assert (d["g2"] < d["boundary_samples"]["ng"]) == (d["verdict"]["category"] == V.NON_GAUSSIAN)
    assert abs(rep.mu_rel - 1.66) < 0.05 + 0.03
    assert abs(rep.g2 - 2.58) < 0.08


def test_analyze_invariant_under_rescaling(vacuum_ref):
    sig = sample_pulses(make_thermal(0.3), G, 5000, seed=6)
    a = analyze(sig, vacuum_ref, n_boot=0)
    b = analyze(sig.scaled(0.37), vacuum_ref.scaled(0.37), n_boot=0)
    assert abs(a.mu_rel - b.mu_rel) < 1e-12 and abs(a.g2 - b.g2) < 1e-12


def test_conditioning(vacuum_ref):
    bright = sample_pulses(make_thermal(2.0), G, 4000, seed=1).counts
    dark = vacuum_ref.counts[:4000]
    herald = np.r_[np.ones(4000, bool), np.zeros(4000, bool)]
    rec = PulseRecordSet(np.r_[bright, dark], herald)
    cond = analyze(rec, vacuum_ref, n_boot=0)
    uncond = analyze(rec, vacuum_ref, n_boot=0, conditioned=False)
    assert cond.mu_rel > uncond.mu_rel
    assert cond.inputs["conditioned"] and not uncond.inputs["conditioned"]


@pytest.mark.parametrize("nbar, seed", [(0.2, 1), (1.0, 2), (3.0, 3)])
def test_thermal_is_classical(vacuum_ref, nbar, seed):
    rep = analyze(sample_pulses(make_thermal(nbar), G, 35000, seed=seed), vacuum_ref, n_boot=300, seed=seed)
    assert rep.g2_ci[0] - 0.05 <= 3 <= rep.g2_ci[1] + 0.05
    assert rep.verdict.category == V.CLASSICAL


def test_analyze_errors(vacuum_ref):
    zero = PulseRecordSet(np.zeros(10))
    with pytest.raises(DomainError):
        analyze(vacuum_ref, zero, n_boot=0)
    with pytest.raises(EstimationError):
        analyze(PulseRecordSet([1.0]), vacuum_ref, n_boot=0)


def test_analyze_reproducible(vacuum_ref):
    sig = sample_pulses(make_thermal(0.3), G, 3000, seed=6)
    assert analyze(sig, vacuum_ref, n_boot=100, seed=3).to_json() == analyze(sig, vacuum_ref, n_boot=100, seed=3).to_json()


# -- sweeps -----------------------------------------------------------------
BASE = HeraldedSourceConfig(0.1, 0.51)


def test_sweep_trace_is_monotone():
    b = [0.008, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25]
    rows = sweep_brightness(BASE, b)
    assert np.all(np.diff([r["p1"] for r in rows]) < 0)
    assert np.all(np.diff([r["p2plus"] for r in rows]) > 0)


def test_lossy_sweep_moves_toward_classical():
    b = [0.1, 0.15, 0.39, 0.62, 0.77, 0.94]
    rows = sweep_brightness(BASE, b, extra_loss=0.26 / 0.51)
    assert np.all(np.diff([r["mu_rel"] for r in rows]) > 0)
    nc_margin = [classify_moments(r["mu_rel"], r["g2"]).margins["nc"] for r in rows]
    assert np.all(np.diff(nc_margin) < 0)
    assert rows[0]["verdict_moments"] == V.NON_GAUSSIAN
    assert rows[-1]["verdict_moments"] == V.CLASSICAL


def test_low_brightness_limit_on_mixture_line():
    eta = 0.26
    row = sweep_brightness(HeraldedSourceConfig(0.1, eta), [1e-6])[0]
    ref = asymptotic_moments(eta, eta - eta * eta)
    assert row["mu_rel"] == pytest.approx(ref.mu_rel, abs=1e-4)
    assert row["g2"] == pytest.approx(ref.g2_post, abs=1e-4)


def test_analytic_and_monte_carlo_agree():
    b = [0.02, 0.1, 0.25]
    an = sweep_brightness(BASE, b)
    mc = sweep_brightness(BASE, b, mode="monte_carlo", n_pulses=100_000, seed=5, n_boot=100)
    for a, m in zip(an, mc):
        assert abs(a["mu_rel"] - m["mu_rel"]) < 3 * m["sigma_mu_rel"]
        assert abs(a["g2"] - m["g2"]) < 3 * m["sigma_g2"]


def test_sweep_errors():
    with pytest.raises(ValidationError):
        sweep_brightness(BASE, [])
    with pytest.raises(ValidationError):
        sweep_brightness(BASE, [0.1], mode="other")


def test_sweep_csv(tmp_path):
    rows = sweep_brightness(BASE, [0.05, 0.1])
    text = sweep_to_csv(rows, tmp_path / "s.csv")
    lines = text.splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS) and len(lines) == 3
    assert (tmp_path / "s.csv").read_text() == text


# -- pre-amplification comparison -------------------------------------------
def test_preamp_examples():
    rows = preamp_comparison([(3.0, 5 / 3), (1.0, 3.0), (2 * 0.7 + 1, 3.0)], [])
    assert rows[0]["m"] == pytest.approx(1.0) and rows[0]["s2"] == pytest.approx(0.0, abs=1e-12)
    assert rows[1]["m"] == 0 and rows[1]["s2"] == pytest.approx(0.0, abs=1e-12)
    assert rows[2]["s2"] == pytest.approx(0.7**2 + 0.7)
    assert not any(r["flagged"] for r in rows)


def test_preamp_flags_negative_variance():
    rows = preamp_comparison([(3.0, 1.2)], [(0.5, 0.6, -0.1)])
    assert rows[0]["flagged"] and rows[1]["flagged"]


def test_preamp_probability_points():
    rows = preamp_comparison([], [(0.6, 0.3, 0.1)], eta=0.5)
    # loss 0.5 gives (0.775, 0.2, 0.025) on {0, 1, 2}
    m = 0.2 + 2 * 0.025
    assert rows[0]["m"] == pytest.approx(m)
    assert rows[0]["s2"] == pytest.approx(0.2 + 4 * 0.025 - m * m)
    assert rows[0]["s2_nc"] == rows[0]["m"]


@given(st.floats(0.0, 10.0), st.floats(0.0, 50.0))
def test_preamp_inverts_moment_map(m, s2):
    amp = asymptotic_moments(m, s2)
    row = preamp_comparison([(amp.mu_rel, amp.g2_post)], [])[0]
    assert row["m"] == pytest.approx(m, abs=1e-10)
    assert row["s2"] == pytest.approx(s2, abs=1e-10 * max(1.0, s2))
