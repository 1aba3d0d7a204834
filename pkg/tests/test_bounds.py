import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_config
from hbnoma.beamforming import design_precoder, effective_channel, rf_subspace_modes
from hbnoma.bounds import (
    kappa_max_S,
    leakage_direction,
    misalignment_factor,
    misalignment_factor_eigen,
    model_effective_channel,
    theorem1_lower_bound,
    theorem2_lower_bound,
    theorem3_gap_bound,
    user_bounds,
)
from hbnoma.channel import collinearity_sum, synthesize_scenario
from hbnoma.errors import ZeroVector
from hbnoma.numerics import hermitian_eig


def _designed(seed=31, n_clusters=4, misalign_deg=4.0, trial=1):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng, n_clusters=n_clusters, misalign_deg=misalign_deg)
    scen = synthesize_scenario(cfg, seed=seed, trial=trial)
    return scen, design_precoder(scen)


def test_theorem1_frozen_value():
    got = theorem1_lower_bound(
        own_power=2.0, earlier_power=1.0, c_beta_sq=100.0, kappa_min_f=0.8, noise_var=1.0
    )
    assert got == pytest.approx(1.5730393333453367, abs=1e-12)


def test_theorem2_frozen_value():
    bound, zi, ze, zn = theorem2_lower_bound(
        own_power=2.0,
        earlier_power=1.0,
        rho=0.9,
        c_beta_sq=100.0,
        kappa_max_s=5.0,
        kappa_min_f=0.8,
        k_sum_first=2.0,
        k_sum_user=1.5,
        noise_var=1.0,
    )
    assert zi == pytest.approx(81.0, abs=1e-12)
    assert ze == pytest.approx(237.5, abs=1e-12)
    assert zn == pytest.approx(1.6666666666666665, abs=1e-12)
    assert bound == pytest.approx(0.5907088042640725, abs=1e-12)


def test_theorem2_reduces_to_theorem1_at_full_alignment():
    # rho = 1 and K_m = K_1 collapse the zeta terms onto the aligned bound
    lb1 = theorem1_lower_bound(3.0, 1.5, 200.0, 0.7, 1.0)
    lb2, *_ = theorem2_lower_bound(3.0, 1.5, 1.0, 200.0, 9.0, 0.7, 1.2, 1.2, 1.0)
    assert lb2 == pytest.approx(lb1, abs=1e-12)


def test_theorem3_frozen_value_and_first_position():
    got, applicable = theorem3_gap_bound(
        earlier_power=1.0,
        rho=0.9,
        c_beta_sq=100.0,
        kappa_max_s=5.0,
        kappa_min_f=0.8,
        k_sum_first=2.0,
        k_sum_user=1.5,
        noise_var=1.0,
        position=2,
    )
    assert applicable
    assert got == pytest.approx(1.9828293000597461, abs=1e-12)
    got1, applicable1 = theorem3_gap_bound(1.0, 0.9, 100.0, 5.0, 0.8, 2.0, 1.5, 1.0, 1)
    assert not applicable1 and math.isinf(got1)


def test_misalignment_factor_limits():
    h = np.array([1.0 + 1.0j, 2.0, -1.0j])
    assert misalignment_factor(h, h) == pytest.approx(1.0, abs=1e-12)
    assert misalignment_factor(3.0j * h, h) == pytest.approx(1.0, abs=1e-12)
    a = np.array([1.0, 0.0], dtype=complex)
    b = np.array([0.0, 1.0], dtype=complex)
    assert misalignment_factor(a, b) == 0.0
    with pytest.raises(ZeroVector):
        misalignment_factor(np.zeros(2, dtype=complex), h[:2])


def test_misalignment_factor_eigen_route_matches_direct():
    scen, pre = _designed()
    modes = rf_subspace_modes(pre.f_rf, hermitian_eig(pre.gram))
    anchor_phis = [
        scen.clusters[c][pre.first_users[c]].phi_norm for c in range(scen.n_clusters)
    ]
    for ci, cluster in enumerate(scen.clusters):
        first = scen.clusters[ci][pre.first_users[ci]]
        h_first = effective_channel(first, pre.f_rf, scen.ula_bs, scen.array_gain)
        for link in cluster:
            h = effective_channel(link, pre.f_rf, scen.ula_bs, scen.array_gain)
            direct = misalignment_factor(h, h_first)
            eig_route = misalignment_factor_eigen(
                link.phi_norm,
                first.phi_norm,
                modes,
                collinearity_sum(link.phi_norm, anchor_phis, scen.ula_bs),
                collinearity_sum(first.phi_norm, anchor_phis, scen.ula_bs),
                scen.ula_bs,
            )
            assert 0.0 <= direct <= 1.0
            assert 0.0 <= eig_route <= 1.0
            # the eigen form upper-bounds the direct Hermitian cosine
            assert eig_route >= direct - 1e-10


def test_leakage_direction_unit_and_zero_forced():
    scen, pre = _designed(n_clusters=5)
    firsts = [scen.clusters[c][pre.first_users[c]] for c in range(5)]
    powers = np.ones(5)
    for n in range(5):
        g = leakage_direction(
            pre.f_rf, firsts, powers, n, scen.array_gain, scen.ula_bs, weighted=True
        )
        assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-12)
        # the leakage lives where ZF already nulls the own beam
        assert abs(np.vdot(g, pre.f_bb[:, n])) < 1e-9


def test_leakage_direction_weighting_changes_direction():
    scen, pre = _designed(n_clusters=4)
    firsts = [scen.clusters[c][pre.first_users[c]] for c in range(4)]
    powers = np.array([4.0, 0.1, 2.0, 1.0])
    gw = leakage_direction(pre.f_rf, firsts, powers, 2, scen.array_gain, scen.ula_bs, True)
    gu = leakage_direction(pre.f_rf, firsts, powers, 2, scen.array_gain, scen.ula_bs, False)
    assert abs(np.vdot(gw, gu)) < 1.0 - 1e-6


def test_model_effective_channel_composition():
    scen, pre = _designed()
    firsts = [scen.clusters[c][pre.first_users[c]] for c in range(scen.n_clusters)]
    h1 = effective_channel(firsts[0], pre.f_rf, scen.ula_bs, scen.array_gain)
    h1_hat = h1 / np.linalg.norm(h1)
    g = leakage_direction(
        pre.f_rf, firsts, np.ones(scen.n_clusters), 0, scen.array_gain, scen.ula_bs
    )
    v = model_effective_channel(0.8, h1_hat, g)
    assert np.allclose(v, 0.8 * h1_hat + math.sqrt(1 - 0.64) * g, atol=1e-12)
    assert np.allclose(model_effective_channel(1.0, h1_hat, g), h1_hat, atol=1e-12)
    # own-beam projection carries only the aligned part
    assert abs(np.vdot(v, pre.f_bb[:, 0])) == pytest.approx(
        0.8 * abs(np.vdot(h1_hat, pre.f_bb[:, 0])), rel=1e-9
    )


def test_kappa_max_s_linear_in_power_and_empty():
    scen, pre = _designed(n_clusters=4)
    powers = np.array([1.0, 2.0, 0.5, 1.5])
    base = kappa_max_S(pre.f_bb, powers, exclude=1)
    scaled = kappa_max_S(pre.f_bb, 3.0 * powers, exclude=1)
    assert scaled == pytest.approx(3.0 * base, rel=1e-9)
    lone = kappa_max_S(np.ones((1, 1), dtype=complex), np.array([2.0]), exclude=0)
    assert lone == 0.0


@given(st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_kappa_max_s_dominates_any_direction(exclude, g_seed):
    scen, pre = _designed(n_clusters=4)
    powers = np.array([1.0, 2.0, 0.5, 1.5])
    kappa = kappa_max_S(pre.f_bb, powers, exclude=exclude)
    rng = np.random.default_rng(g_seed)
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    g = g / np.linalg.norm(g)
    quad = sum(
        powers[l] * abs(np.vdot(g, pre.f_bb[:, l])) ** 2 for l in range(4) if l != exclude
    )
    assert quad <= kappa * (1.0 + 1e-9) + 1e-12


def test_user_bounds_wires_scalars_together():
    report = user_bounds(
        own_power=2.0,
        earlier_power=1.0,
        rho=0.9,
        c_beta_sq=100.0,
        kappa_max_s=5.0,
        kappa_min_f=0.8,
        k_sum_first=2.0,
        k_sum_user=1.5,
        noise_var=1.0,
        position=2,
    )
    assert report.lb_thm1 == pytest.approx(1.5730393333453367, abs=1e-12)
    assert report.lb_thm2 == pytest.approx(0.5907088042640725, abs=1e-12)
    assert report.gap_ub == pytest.approx(1.9828293000597461, abs=1e-12)
    assert report.gap_ub_applicable
    assert report.kappa_min_f == 0.8
