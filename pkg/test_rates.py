"""
Tests for achievable rates, rate floors and the side-channel scheme.

Rates are recomputed here with explicit inner products.

Usage:
    pytest test_rates.py

Author: DuplexSched Project
"""

import math

import numpy as np
import pytest

from modules.channel import ClusteredNetwork, make_clustered
from modules.rates import (NATS_PER_BIT, RateReport, downlink_rate_floor, downlink_stream_rates,
                           sidechannel_clustered_rates, uplink_interference_at, uplink_rate_floor,
                           uplink_stream_rates)
from modules.scheduler import downlink_projections, schedule_downlink, schedule_uplink, uplink_projections
from utils.errors import SchedulingError
from utils.linalg import sample_gaussian_matrix, sample_haar_unitary


def scheduled_instance(seed, n=12, M=2, eps=0.6):
    rng = np.random.default_rng(seed)
    H_bar = sample_gaussian_matrix(M, n, rng)
    H = sample_gaussian_matrix(n, M, rng)
    G = sample_gaussian_matrix(n, n, rng)
    Phi_bar = sample_haar_unitary(M, rng)
    Phi = sample_haar_unitary(M, rng)
    up_users, up_flags = schedule_uplink(H_bar, Phi_bar, eps)
    g_cols = {j: G[:, j] for j in up_users}
    down_users, down_flags = schedule_downlink(H, g_cols, Phi, up_users, eps)
    return H_bar, H, g_cols, Phi_bar, Phi, up_users, up_flags, down_users, down_flags


# ---------------------------------------------------------------------------
# Stream rates
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_uplink_rates_match_inner_products(seed):
    H_bar, _, _, Phi_bar, _, up_users, _, _, _ = scheduled_instance(seed, M=3)
    P_bar = 4.0
    rates = uplink_stream_rates(H_bar, Phi_bar, up_users, P_bar)
    for m in range(3):
        beam = Phi_bar[:, m]
        signal = abs(np.vdot(beam, H_bar[:, up_users[m]])) ** 2
        interference = sum(abs(np.vdot(beam, H_bar[:, up_users[r]])) ** 2 for r in range(3) if r != m)
        expected = math.log(1 + P_bar * signal / (1 + P_bar * interference))
        assert rates[m] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_downlink_rates_match_inner_products(seed):
    _, H, g_cols, _, Phi, up_users, _, down_users, _ = scheduled_instance(seed, M=3)
    P, P_bar = 6.0, 2.0
    rates = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, P, P_bar)
    for m in range(3):
        h_conj = H[down_users[m], :]
        signal = abs(h_conj @ Phi[:, m]) ** 2
        inter = sum(abs(h_conj @ Phi[:, r]) ** 2 for r in range(3) if r != m)
        uplink = sum(abs(g_cols[j][down_users[m]]) ** 2 for j in up_users)
        expected = math.log(1 + (P / 3) * signal / (1 + (P / 3) * inter + P_bar * uplink))
        assert rates[m] == pytest.approx(expected, abs=1e-12)


def test_rates_reject_bad_schedules():
    H_bar, H, g_cols, Phi_bar, Phi, up_users, _, down_users, _ = scheduled_instance(0)
    with pytest.raises(SchedulingError):
        uplink_stream_rates(H_bar, Phi_bar, [up_users[0], up_users[0]], 1.0)
    with pytest.raises(SchedulingError):
        uplink_stream_rates(H_bar, Phi_bar, up_users[:1], 1.0)
    with pytest.raises(SchedulingError):
        downlink_stream_rates(H, g_cols, Phi, [down_users[0]] * 2, up_users, 1.0, 1.0)
    with pytest.raises(SchedulingError):
        downlink_stream_rates(H, {}, Phi, down_users, up_users, 1.0, 1.0)


def test_uplink_interference_at():
    g_cols = {0: np.array([1.0, 2.0, 0.0]), 2: np.array([1j, 0.0, 3.0])}
    np.testing.assert_allclose(uplink_interference_at(g_cols, [0, 2], [1, 0]), [4.0, 2.0])


def test_rates_are_nonnegative_and_monotone_in_power():
    H_bar, H, g_cols, Phi_bar, Phi, up_users, _, down_users, _ = scheduled_instance(7)
    low_up = uplink_stream_rates(H_bar, Phi_bar, up_users, 1.0)
    high_up = uplink_stream_rates(H_bar, Phi_bar, up_users, 10.0)
    assert np.all(low_up >= 0)
    assert np.all(high_up >= low_up)

    base = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, 2.0, 1.0)
    more_power = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, 20.0, 1.0)
    more_interference = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, 2.0, 10.0)
    assert np.all(more_power >= base)
    assert np.all(more_interference <= base)


# ---------------------------------------------------------------------------
# Rate floors
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("P, P_bar", [(10.0, 10.0), (2.0, 0.5), (50.0, 3.0)])
def test_power_aware_floors_hold_without_fallback(P, P_bar):
    checked = 0
    for seed in range(60):
        eps = 0.5
        H_bar, H, g_cols, Phi_bar, Phi, up_users, up_flags, down_users, down_flags = \
            scheduled_instance(seed, n=20, M=2, eps=eps)
        down = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, P, P_bar)
        gains = downlink_projections(H, Phi)
        for m, k in enumerate(down_users):
            if not down_flags[m]:
                floor = downlink_rate_floor(gains[m, k], P, 2, eps, P_bar=P_bar)
                assert down[m] >= floor - 1e-12
                checked += 1
        if not any(up_flags):
            up = uplink_stream_rates(H_bar, Phi_bar, up_users, P_bar)
            up_gains = uplink_projections(H_bar, Phi_bar)
            for m, k in enumerate(up_users):
                assert up[m] >= uplink_rate_floor(up_gains[m, k], P_bar, 2, eps) - 1e-12
    assert checked > 0


def test_normalized_floor_holds_in_normalized_regime():
    # P <= M and P_bar <= 1
    P, P_bar, eps, M = 2.0, 1.0, 0.5, 2
    for seed in range(60):
        _, H, g_cols, _, Phi, up_users, _, down_users, down_flags = \
            scheduled_instance(seed, n=20, M=M, eps=eps)
        down = downlink_stream_rates(H, g_cols, Phi, down_users, up_users, P, P_bar)
        gains = downlink_projections(H, Phi)
        for m, k in enumerate(down_users):
            if not down_flags[m]:
                assert down[m] >= downlink_rate_floor(gains[m, k], P, M, eps) - 1e-12


def test_floor_values():
    assert downlink_rate_floor(2.0, 4.0, 2, 0.1) == pytest.approx(math.log(1 + 2 * 2 / 1.3))
    assert downlink_rate_floor(2.0, 4.0, 2, 0.1, P_bar=3.0) == pytest.approx(
        math.log(1 + 2 * 2 / (1 + 2 * 0.1 + 3 * 2 * 0.1)))
    assert uplink_rate_floor(1.5, 2.0, 3, 0.2) == pytest.approx(math.log(1 + 3.0 / (1 + 2 * 2 * 0.2)))
    with pytest.raises(ValueError):
        downlink_rate_floor(1.0, 1.0, 2, 0.0)
    with pytest.raises(ValueError):
        uplink_rate_floor(1.0, 1.0, 2, -1.0)


def test_floor_single_stream_has_no_cross_term():
    assert downlink_rate_floor(3.0, 5.0, 1, 0.4) == pytest.approx(math.log(1 + 15.0 / 1.4))
    assert uplink_rate_floor(3.0, 5.0, 1, 0.4) == pytest.approx(math.log(1 + 15.0))


# ---------------------------------------------------------------------------
# Side-channel scheme
# ---------------------------------------------------------------------------

def test_sidechannel_rates():
    net = make_clustered(2, 6, 1.0, 0.7)
    uplink, downlink = sidechannel_clustered_rates(net, 8.0, 4.0)
    assert uplink == pytest.approx(2 * math.log(1 + 2.0))
    assert downlink == pytest.approx(2 * math.log(1 + 2.0))


def test_sidechannel_rates_ignore_g():
    a = sidechannel_clustered_rates(make_clustered(3, 6, 2.0, 0.0), 5.0, 5.0)
    b = sidechannel_clustered_rates(make_clustered(3, 6, 2.0, 9.0), 5.0, 5.0)
    assert a == b


def test_sidechannel_zero_channel():
    net = ClusteredNetwork(M=2, n=2, h=0.0, g=1.0, membership=np.arange(2))
    assert sidechannel_clustered_rates(net, 10.0, 10.0) == (0.0, 0.0)


# ---------------------------------------------------------------------------
# Rate report
# ---------------------------------------------------------------------------

def test_rate_report_sums_and_gaps():
    report = RateReport(np.array([1.0, 2.0]), np.array([0.5, 0.25]), benchmarks=(4.0, 1.0),
                        benchmark_mode="exact")
    assert report.uplink_sum == 3.0
    assert report.downlink_sum == 0.75
    assert report.sum_rate == 3.75
    assert report.gaps == (1.0, 0.25)
    assert report.total_gap == 1.25
    as_dict = report.to_dict()
    assert as_dict['benchmark_mode'] == "exact"
    assert as_dict['sum_rate_bits'] == pytest.approx(3.75 / NATS_PER_BIT)


def test_rate_report_without_benchmarks():
    report = RateReport(np.array([1.0]), np.array([1.0]))
    assert report.gaps is None
    assert report.total_gap is None
    assert 'uplink_gap' not in report.to_dict()
