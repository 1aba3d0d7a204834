"""Shared scenario generators for the test suite."""

import math

import numpy as np

from hbnoma.channel import ClusterSpec, ScenarioConfig


def separated_phis(rng, n, min_gap):
    """n sorted normalized angles in (-0.95, 0.95) with pairwise gaps >= min_gap."""
    span = 1.9 - n * min_gap
    if span <= 0:
        raise ValueError(f"cannot fit {n} angles with gap {min_gap}")
    base = np.sort(rng.uniform(0.0, span, size=n))
    return -0.95 + base + min_gap * np.arange(n) + min_gap / 2.0


def random_config(rng, n_clusters=None, n_bs=32, max_users=4, misalign_deg=0.0):
    """Random well-separated scenario; separation keeps the ZF design conditioned."""
    n = int(rng.integers(2, 9)) if n_clusters is None else n_clusters
    phis = separated_phis(rng, n, min_gap=3.0 / n_bs)
    clusters = []
    for phi in phis:
        m = int(rng.integers(1, max_users + 1))
        gains = (0.0,) + tuple(
            round(float(g), 3) for g in rng.uniform(-6.0, -0.5, size=m - 1)
        )
        clusters.append(ClusterSpec(aod_deg=math.degrees(math.asin(phi)), gains_db=gains))
    return ScenarioConfig(
        clusters=tuple(clusters),
        n_bs=n_bs,
        misalign_deg=misalign_deg,
        snr_db=float(rng.uniform(0.0, 25.0)),
    )
