"""
Achievable full-duplex rates.

Every stream is decoded on its own beam and interference is treated as
noise. Downlink power is split equally over the M beams; each scheduled
uplink user transmits at full power P_bar. Rates are in nats per channel
use.

Author: DuplexSched Project
"""

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from modules.channel import ClusteredNetwork
from utils.errors import SchedulingError


NATS_PER_BIT = math.log(2.0)


@dataclass
class RateReport:
    """Per-stream and sum rates of one trial, with optional benchmarks."""
    uplink_stream_rates: np.ndarray
    downlink_stream_rates: np.ndarray
    benchmarks: Optional[Tuple[float, float]] = None
    benchmark_mode: str = "none"
    extras: dict = field(default_factory=dict)

    @property
    def uplink_sum(self) -> float:
        return float(np.sum(self.uplink_stream_rates))

    @property
    def downlink_sum(self) -> float:
        return float(np.sum(self.downlink_stream_rates))

    @property
    def sum_rate(self) -> float:
        return self.uplink_sum + self.downlink_sum

    @property
    def gaps(self) -> Optional[Tuple[float, float]]:
        """(eta_bar, eta) = (C_MAC-M - R_bar, C_BC - R)."""
        if self.benchmarks is None:
            return None
        mac, bc = self.benchmarks
        return mac - self.uplink_sum, bc - self.downlink_sum

    @property
    def total_gap(self) -> Optional[float]:
        gaps = self.gaps
        return None if gaps is None else gaps[0] + gaps[1]

    def to_dict(self) -> dict:
        report = {
            'uplink_stream_rates': [float(r) for r in self.uplink_stream_rates],
            'downlink_stream_rates': [float(r) for r in self.downlink_stream_rates],
            'uplink_sum': self.uplink_sum,
            'downlink_sum': self.downlink_sum,
            'sum_rate_bits': self.sum_rate / NATS_PER_BIT,
        }
        if self.benchmarks is not None:
            report['benchmark_mode'] = self.benchmark_mode
            report['mac_m_capacity'], report['bc_capacity'] = self.benchmarks
            report['uplink_gap'], report['downlink_gap'] = self.gaps
        report.update(self.extras)
        return report


def uplink_stream_rates(H_bar: np.ndarray, Phi_bar: np.ndarray, uplink_users: Sequence[int],
                        P_bar: float) -> np.ndarray:
    """
    Treat-interference-as-noise rates on the receive beams.

    rate_m = log(1 + P_bar |phi_bar_m* h_bar_{U_m}|^2
                 / (1 + P_bar sum_{r != m} |phi_bar_m* h_bar_{U_r}|^2))

    Args:
        H_bar (np.ndarray): (M, n) uplink channels
        Phi_bar (np.ndarray): (M, M) receive beams
        uplink_users (Sequence[int]): T_bar, one user per stream
        P_bar (float): Per-user power

    Returns:
        np.ndarray: Length-M rates in nats
    """
    M = Phi_bar.shape[1]
    if len(uplink_users) != M or len(set(uplink_users)) != M:
        raise SchedulingError(f"uplink schedule must name {M} distinct users, got {list(uplink_users)}")
    # eff[m, r] = phi_bar_m* h_bar_{U_r}
    power = np.abs(Phi_bar.conj().T @ H_bar[:, list(uplink_users)]) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    return np.log1p(P_bar * signal / (1.0 + P_bar * interference))


def uplink_interference_at(g_cols: Mapping[int, np.ndarray], uplink_users: Sequence[int],
                           downlink_users: Sequence[int]) -> np.ndarray:
    """sum_{j in T_bar} |g_{U_m, j}|^2 for each downlink stream m."""
    total = np.zeros(len(downlink_users))
    for j in uplink_users:
        if j not in g_cols:
            raise SchedulingError(f"missing interference column for uplink user {j}")
        total += np.abs(np.asarray(g_cols[j])[list(downlink_users)]) ** 2
    return total


def downlink_stream_rates(H: np.ndarray, g_cols: Mapping[int, np.ndarray], Phi: np.ndarray,
                          downlink_users: Sequence[int], uplink_users: Sequence[int],
                          P: float, P_bar: float) -> np.ndarray:
    """
    Treat-interference-as-noise rates on the transmit beams.

    rate_m = log(1 + (P/M) |phi_m* h_{U_m}|^2
                 / (1 + (P/M) sum_{r != m} |phi_r* h_{U_m}|^2
                      + P_bar sum_{j in T_bar} |g_{U_m, j}|^2))

    Args:
        H (np.ndarray): (n, M) downlink channels, row k = h_k*
        g_cols (Mapping[int, np.ndarray]): Interference columns for T_bar
        Phi (np.ndarray): (M, M) transmit beams
        downlink_users (Sequence[int]): T, one user per stream
        uplink_users (Sequence[int]): T_bar
        P (float): Total downlink power
        P_bar (float): Per-uplink-user power

    Returns:
        np.ndarray: Length-M rates in nats
    """
    M = Phi.shape[1]
    if len(downlink_users) != M or len(set(downlink_users)) != M:
        raise SchedulingError(f"downlink schedule must name {M} distinct users, got {list(downlink_users)}")
    if len(uplink_users) != M:
        raise SchedulingError(f"uplink schedule must name {M} users, got {list(uplink_users)}")
    # power[m, r] = |h_{U_m}* phi_r|^2
    power = np.abs(H[list(downlink_users), :] @ Phi) ** 2
    signal = np.diag(power)
    inter_stream = power.sum(axis=1) - signal
    uplink_interference = uplink_interference_at(g_cols, uplink_users, downlink_users)
    per_stream = P / M
    sinr = per_stream * signal / (1.0 + per_stream * inter_stream + P_bar * uplink_interference)
    return np.log1p(sinr)


def downlink_rate_floor(max_proj: float, P: float, M: int, eps: float,
                        P_bar: Optional[float] = None) -> float:
    """
    Lower bound on a threshold-feasible downlink stream rate.

    Without P_bar this is log(1 + (P/M) s / (1 + (2M-1) eps)), which bounds
    the achieved rate when the interference powers are normalized
    (P <= M and P_bar <= 1). With P_bar the denominator carries the actual
    powers, 1 + (P/M)(M-1) eps + P_bar M eps, and the bound holds at any
    power.

    Args:
        max_proj (float): |phi_m* h_{U_m}|^2 of the scheduled user
        P (float): Total downlink power
        M (int): Number of streams
        eps (float): Threshold used by the scheduler
        P_bar (float, optional): Uplink power for the power-aware form

    Returns:
        float: Rate floor in nats
    """
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    per_stream = P / M
    if P_bar is None:
        denominator = 1.0 + (2 * M - 1) * eps
    else:
        denominator = 1.0 + per_stream * (M - 1) * eps + P_bar * M * eps
    return math.log1p(per_stream * max_proj / denominator)


def uplink_rate_floor(proj: float, P_bar: float, M: int, eps: float) -> float:
    """log(1 + P_bar s / (1 + (M-1) P_bar eps)) for a threshold-feasible uplink stream."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    return math.log1p(P_bar * proj / (1.0 + (M - 1) * P_bar * eps))


def sidechannel_clustered_rates(net: ClusteredNetwork, P: float, P_bar: float) -> Tuple[float, float]:
    """
    Sum rates of the side-channel replication scheme in a clustered network.

    Each uplink user sends half its power as a copy of its symbol on an
    orthogonal side-channel; downlink users subtract the side-channel
    output, which removes the interference and doubles the noise.

    Args:
        net (ClusteredNetwork): Clustered network (M, h; g drops out)
        P (float): Total downlink power
        P_bar (float): Per-uplink-user power

    Returns:
        tuple: (uplink sum rate, downlink sum rate) in nats
    """
    M, h2 = net.M, net.h ** 2
    uplink = M * math.log1p(h2 * P_bar / 2.0)
    downlink = M * math.log1p(h2 * P / (2.0 * M))
    return uplink, downlink
