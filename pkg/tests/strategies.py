"""Hypothesis strategies shared by the property tests."""
import numpy as np
from hypothesis import strategies as st

from opawitness import PhotonNumberDistribution


@st.composite
def distributions(draw, max_n=12):
    n = draw(st.integers(min_value=1, max_value=max_n))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    w = np.asarray(w) + 1e-6
    return PhotonNumberDistribution(w / w.sum())


etas = st.floats(min_value=0.01, max_value=1.0)
