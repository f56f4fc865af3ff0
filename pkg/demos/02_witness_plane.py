"""Where do common states land relative to the NC and NG boundaries?"""
import numpy as np

from opawitness import (
    asymptotic_moments,
    classify_moments,
    classify_probabilities,
    make_coherent,
    make_fock,
    mix,
    make_vacuum,
    moments,
)
from opawitness.witnesses import boundary_curve, floor_post, nc_bound_post, ng_bound_post

mu = np.array([1.2, 1.66, 2.0, 3.0, 4.0])
print(" mu_rel   floor     NG       NC")
for m, f, ng, nc in zip(mu, floor_post(mu), ng_bound_post(mu), nc_bound_post(mu)):
    print(f"{m:6.2f}  {f:.4f}  {ng:.4f}  {nc:.4f}")

# Post-amplification classification of a few inputs
states = {
    "coherent 0.3": make_coherent(0.3),
    "0.6|0> + 0.4|1>": mix([0.6, 0.4], [make_vacuum(), make_fock(1)]),
    "|1>": make_fock(1),
}
for name, d in states.items():
    amp = asymptotic_moments(moments(d))
    v = classify_moments(amp.mu_rel, amp.g2_post)
    print(f"{name:18s} ({amp.mu_rel:.3f}, {amp.g2_post:.3f}) -> {v.category}")

# the point reported for a lossy heralded photon
print(classify_moments(1.66, 2.58, 0.02, 0.03).confidence_note)

# Probability plane
for p0, p1 in [(0.67, 0.33), (0.715, 0.239), (0.99, 0.005)]:
    v = classify_probabilities(p0, p1)
    print(f"(p0, p1) = ({p0}, {p1}) -> {v.category}; {v.confidence_note}")

# curves as plain arrays, ready for any plotting tool
c = boundary_curve("NG_post", points=6)
print(np.column_stack([c.x, c.y]))
