"""Amplified vacuum, single photons and their mixture.

Shows the high-gain moment map and the intensity distributions that a
camera would histogram after the amplifier.
"""
import numpy as np

from opawitness import (
    PhotonNumberDistribution,
    asymptotic_moments,
    estimate_moments,
    intensity_distribution,
    make_fock,
    make_thermal,
    make_vacuum,
    moments,
    sample_pulses,
)

G = 6.5

# Fock states get pushed away from g2 = 3 as n grows, thermal light does not
for name, d in [("vacuum", make_vacuum()), ("|1>", make_fock(1)), ("|2>", make_fock(2)), ("thermal 0.5", make_thermal(0.5))]:
    amp = asymptotic_moments(moments(d))
    print(f"{name:12s} mu_rel = {amp.mu_rel:6.3f}  g2 = {amp.g2_post:.4f}")

# Densities of the amplified photon number, on one shared grid
grid = intensity_distribution(make_fock(1), G).grid
p0 = intensity_distribution(make_vacuum(), G, grid=grid)
p1 = intensity_distribution(make_fock(1), G, grid=grid)
pm = intensity_distribution(PhotonNumberDistribution([0.67, 0.33]), G, grid=grid)
print("normalization:", p0.total(), p1.total(), pm.total())

# a few sample points, in units of the vacuum mean
mu0 = np.sinh(G) ** 2
for N in (0.01, 0.5, 1.0, 3.0, 8.0):
    k = np.searchsorted(grid, N * mu0)
    print(f"N/mu0 = {N:5.2f}  P0 = {p0.density[k] * mu0:.4f}  mix = {pm.density[k] * mu0:.4f}  P1 = {p1.density[k] * mu0:.4f}")

# the mixture stays between its two components everywhere
assert np.all((pm.density - p0.density) * (pm.density - p1.density) <= 1e-15)

# Monte-Carlo: 35000 pulses of amplified vacuum
est = estimate_moments(sample_pulses(make_vacuum(), G, 35000, seed=0), seed=0)
print(f"sampled vacuum g2 = {est.g2:.3f}  68% interval {est.g2_ci[0]:.3f} .. {est.g2_ci[1]:.3f}")
