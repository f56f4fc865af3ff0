"""Heralded single photons: HBT characterization and a brightness sweep."""
import warnings

import numpy as np

from opawitness import (
    HbtConfig,
    HeraldedSourceConfig,
    heralding_efficiency,
    infer_probabilities,
    make_vacuum,
    sample_pulses,
    simulate_clicks,
    sweep_brightness,
)
from opawitness.pipeline import analyze, heralded_lossy_state, sweep_to_csv

# heralding efficiency from raw rates and known transmissions
eta = heralding_efficiency(6e-4, 0.01, [0.34, 0.5, 0.9, 0.8])
print(f"heralding efficiency {eta:.3f}")

# HBT on the heralded state at brightness 0.1
src = HeraldedSourceConfig(0.1, 0.51)
state = heralded_lossy_state(src)
cfg = HbtConfig(0.5, 0.6, 0.6)
stats = simulate_clicks(state, cfg, 1_000_000, seed=0)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    est = infer_probabilities(stats, cfg)
print("model    p0, p1, p2+:", np.round([state.p0, state.p1, state.p2plus], 4))
print("inferred p0, p1, p2+:", np.round(est.as_tuple(), 4), "+/-", np.round(est.sigma_p1, 4))

# brightness sweep, analytic model
rows = sweep_brightness(src, [0.008, 0.03, 0.1, 0.25, 0.4, 0.5])
print(sweep_to_csv(rows).splitlines()[0])
for r in rows:
    print(f"{r['brightness']:.3f}  p1 = {r['p1']:.4f}  p2+ = {r['p2plus']:.4f}  {r['verdict_probabilities']}")

# full simulated measurement at overall transmittance 0.26
sig = sample_pulses(heralded_lossy_state(src, 0.26 / 0.51), 6.5, 35000, seed=1)
vac = sample_pulses(make_vacuum(), 6.5, 35000, seed=2)
report = analyze(sig, vac, n_boot=500, seed=3)
print(f"mu_rel = {report.mu_rel:.3f}  g2 = {report.g2:.3f}  -> {report.verdict.category}")
