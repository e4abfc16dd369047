"""
Opportunistic joint uplink-downlink scheduling.

Random beams are drawn for the uplink (receive) and downlink (transmit)
sides of the base station. For each stream, in order, the scheduler keeps
the users whose leakage into every other beam is at most epsilon (and, on
the downlink, whose interference from each scheduled uplink user is at
most epsilon), then picks the candidate with the largest projection on the
stream's own beam.

Finite-n behaviour:
- Streams are filled in order 0..M-1 and a user is scheduled at most once.
- An empty candidate set falls back to the best unscheduled user and sets
  the stream's fallback flag.
- Ties go to the smallest user index.

Author: DuplexSched Project
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError, SchedulingError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpsilonSchedule:
    """Threshold sequence: c / ln(n) when decaying, a fixed value otherwise."""
    mode: str = "decaying"
    value: float = 1.0

    def __post_init__(self):
        if self.mode not in ("decaying", "constant"):
            raise ConfigError(f"epsilon mode must be 'decaying' or 'constant', got {self.mode!r}")
        if not self.value > 0:
            raise ConfigError(f"epsilon parameter must be positive, got {self.value}")


def epsilon_value(sched: EpsilonSchedule, n: int) -> float:
    """
    Evaluate the threshold for n users.

    Args:
        sched (EpsilonSchedule): Threshold schedule
        n (int): Number of users

    Returns:
        float: decaying(c) -> c / ln(n); constant(eps) -> eps
    """
    if sched.mode == "constant":
        return sched.value
    if n < 2:
        raise ConfigError(f"decaying epsilon needs n >= 2, got n={n}")
    return sched.value / math.log(n)


@dataclass
class Schedule:
    """Scheduled users per stream (0-based) and fallback flags."""
    uplink_users: List[int]
    downlink_users: List[int]
    uplink_fallback_flags: List[bool]
    downlink_fallback_flags: List[bool]
    epsilon_used: float

    @property
    def any_fallback(self) -> bool:
        return any(self.uplink_fallback_flags) or any(self.downlink_fallback_flags)

    @property
    def uplink_fallback_rate(self) -> float:
        return sum(self.uplink_fallback_flags) / len(self.uplink_fallback_flags)

    @property
    def downlink_fallback_rate(self) -> float:
        return sum(self.downlink_fallback_flags) / len(self.downlink_fallback_flags)


def uplink_projections(H_bar: np.ndarray, Phi_bar: np.ndarray) -> np.ndarray:
    """|phi_bar_r* h_bar_k|^2 as an (M, n) array indexed [r, k]."""
    return np.abs(Phi_bar.conj().T @ H_bar) ** 2


def downlink_projections(H: np.ndarray, Phi: np.ndarray) -> np.ndarray:
    """|phi_r* h_k|^2 as an (M, n) array indexed [r, k]; row k of H is h_k*."""
    return (np.abs(H @ Phi) ** 2).T


def _greedy_assign(gains: np.ndarray, eps: float,
                   admissible: Optional[np.ndarray] = None) -> Tuple[List[int], List[bool]]:
    """
    Fill streams 0..M-1 from a projection table.

    Args:
        gains (np.ndarray): (M, n) projections [r, k]
        eps (float): Threshold on cross-beam leakage
        admissible (np.ndarray, optional): Extra per-user eligibility mask

    Returns:
        tuple: (users per stream, fallback flag per stream)
    """
    M, n = gains.shape
    if n < M:
        raise SchedulingError(f"cannot fill {M} streams with {n} distinct users")
    if admissible is None:
        admissible = np.ones(n, dtype=bool)

    scheduled = np.zeros(n, dtype=bool)
    users: List[int] = []
    flags: List[bool] = []
    for m in range(M):
        others = np.delete(gains, m, axis=0)
        candidates = ~scheduled & admissible & np.all(others <= eps, axis=0)
        fallback = not candidates.any()
        pool = ~scheduled if fallback else candidates
        # argmax returns the first maximum, i.e. the smallest index on ties
        k = int(np.argmax(np.where(pool, gains[m], -np.inf)))
        scheduled[k] = True
        users.append(k)
        flags.append(fallback)
    return users, flags


def schedule_uplink(H_bar: np.ndarray, Phi_bar: np.ndarray, eps: float) -> Tuple[List[int], List[bool]]:
    """
    Assign one uplink user to each receive beam.

    Args:
        H_bar (np.ndarray): Uplink channels, shape (M, n), column k = h_bar_k
        Phi_bar (np.ndarray): Unitary receive beams, shape (M, M)
        eps (float): Threshold

    Returns:
        tuple: (T_bar as a list of users, fallback flags)
    """
    gains = uplink_projections(H_bar, Phi_bar)
    return _greedy_assign(gains, eps)


def schedule_downlink(H: np.ndarray, g_cols: Mapping[int, np.ndarray], Phi: np.ndarray,
                      uplink_users: Sequence[int], eps: float) -> Tuple[List[int], List[bool]]:
    """
    Assign one downlink user to each transmit beam.

    Candidates must also see at most eps interference from every scheduled
    uplink user.

    Args:
        H (np.ndarray): Downlink channels, shape (n, M), row k = h_k*
        g_cols (Mapping[int, np.ndarray]): Interference column g_{.j} for each j in T_bar
        Phi (np.ndarray): Unitary transmit beams, shape (M, M)
        uplink_users (Sequence[int]): Scheduled uplink set T_bar
        eps (float): Threshold

    Returns:
        tuple: (T as a list of users, fallback flags)
    """
    gains = downlink_projections(H, Phi)
    admissible = np.ones(H.shape[0], dtype=bool)
    for j in uplink_users:
        if j not in g_cols:
            raise SchedulingError(f"missing interference column for uplink user {j}")
        admissible &= np.abs(g_cols[j]) ** 2 <= eps
    return _greedy_assign(gains, eps, admissible)


def schedule(realization, Phi_bar: np.ndarray, Phi: np.ndarray, eps: float) -> Schedule:
    """
    Run uplink then downlink scheduling on a channel realization.

    Only the interference columns of the scheduled uplink users are
    generated.

    Args:
        realization (ChannelRealization): Link gains
        Phi_bar (np.ndarray): Uplink beams
        Phi (np.ndarray): Downlink beams
        eps (float): Threshold

    Returns:
        Schedule: Both scheduled sets with fallback flags
    """
    up_users, up_flags = schedule_uplink(realization.uplink, Phi_bar, eps)
    g_cols = realization.interference_columns(up_users)
    down_users, down_flags = schedule_downlink(realization.downlink, g_cols, Phi, up_users, eps)

    result = Schedule(
        uplink_users=up_users,
        downlink_users=down_users,
        uplink_fallback_flags=up_flags,
        downlink_fallback_flags=down_flags,
        epsilon_used=eps,
    )
    if result.any_fallback:
        logger.debug("Fallback used: uplink %s, downlink %s", up_flags, down_flags)
    return result
