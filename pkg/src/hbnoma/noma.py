"""User ordering, power allocation, and exact rate evaluation with ideal SIC.

Decoding position 1 is the strongest user: it decodes and cancels everyone
decoded after it, so a user at position p keeps interference only from the
p-1 users decoded before it. Power splits in two stages: across clusters in
proportion to the summed squared effective norms, then equally inside each
cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Scenario
from .errors import DegenerateScenario

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PowerAllocation:
    """Per-cluster totals and per-user shares (user_power[n][m], original order)."""

    cluster_power: np.ndarray
    user_power: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class RateReport:
    """One user's SINR decomposition: rate = log2(1 + signal/(intra+inter+noise))."""

    cluster: int
    user: int
    position: int
    signal: float
    intra: float
    inter: float
    noise: float
    rate: float


def rate_from_terms(signal: float, intra: float, inter: float, noise: float) -> float:
    return math.log1p(signal / (intra + inter + noise)) / LOG2


def order_users_by_effective(norms_sq) -> np.ndarray:
    """Decode order: indices sorted by effective norm descending, ties by index."""
    arr = np.asarray(norms_sq, dtype=np.float64)
    return np.argsort(-arr, kind="stable")


def allocate_power(norms_sq_by_cluster, total_power: float) -> PowerAllocation:
    """Two-stage split: cluster n gets P * (its norm sum / grand sum), users split equally."""
    if not total_power > 0:
        raise DegenerateScenario(f"total power must be positive, got {total_power}")
    sums = np.array([float(np.sum(c)) for c in norms_sq_by_cluster])
    grand = float(np.sum(sums))
    if grand <= 0.0:
        raise DegenerateScenario("all effective channel norms are zero")
    cluster_power = total_power * sums / grand
    user_power = tuple(
        np.full(len(norms), p_n / len(norms))
        for norms, p_n in zip(norms_sq_by_cluster, cluster_power)
    )
    return PowerAllocation(cluster_power=cluster_power, user_power=user_power)


def exact_rate(
    h_eff: np.ndarray,
    f_bb: np.ndarray,
    cluster_idx: int,
    user_idx: int,
    position: int,
    own_power: float,
    earlier_power: float,
    cluster_power: np.ndarray,
    noise_var: float,
) -> RateReport:
    """Exact rate of one user given its effective channel and decode position.

    earlier_power is the summed power of same-cluster users decoded before this
    one; cluster_power holds every cluster's total (the own-cluster entry is
    ignored for the inter term).
    """
    beam_gains = np.abs(h_eff.conj() @ f_bb) ** 2
    own_gain = float(beam_gains[cluster_idx])
    signal = own_power * own_gain
    intra = earlier_power * own_gain
    inter = float(np.dot(cluster_power, beam_gains)) - float(cluster_power[cluster_idx]) * own_gain
    return RateReport(
        cluster=cluster_idx + 1,
        user=user_idx + 1,
        position=position,
        signal=signal,
        intra=intra,
        inter=inter,
        noise=noise_var,
        rate=rate_from_terms(signal, intra, inter, noise_var),
    )


def oma_rate(beta: complex, total_power: float, noise_var: float, array_gain: float) -> float:
    """Single-user rate with the user's own analog beam at full power.

    The experiment layer divides the per-user rates by the total user count to
    form the frame-averaged TDMA sum-rate.
    """
    return rate_from_terms(total_power * array_gain * abs(beta) ** 2, 0.0, 0.0, noise_var)


def fully_digital_rates(scenario: Scenario) -> dict[tuple[int, int], float]:
    """Per-user rates of the fully-digital reference (one RF chain per antenna).

    Exact zero-forcing with unit-power columns removes both the inter-cluster
    interference and the Gram-matrix noise penalty, so the rate reduces to
    log2(1 + P_m c|beta|^2 / (sum_{k<m} P_k c|beta|^2 + sigma^2)) with powers
    allocated from the fully-digital effective norms c|beta|^2. Misalignment
    never enters: per-antenna control is not limited to a steered beam.
    """
    c = scenario.array_gain
    norms = [
        np.array([c * abs(link.beta) ** 2 for link in cluster]) for cluster in scenario.clusters
    ]
    alloc = allocate_power(norms, scenario.total_power)
    rates: dict[tuple[int, int], float] = {}
    for n, cluster in enumerate(scenario.clusters):
        order = order_users_by_effective(norms[n])
        powers = alloc.user_power[n]
        earlier = 0.0
        for pos, idx in enumerate(order, start=1):
            link = cluster[idx]
            gain = norms[n][idx]
            rate = rate_from_terms(powers[idx] * gain, earlier * gain, 0.0, scenario.noise_var)
            rates[(link.cluster, link.user)] = rate
            earlier += powers[idx]
    return rates
