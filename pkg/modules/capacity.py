"""
Benchmark capacities and bounds.

Homogeneous network:
- MAC-M sum capacity: best size-M user subset, exact by enumeration or the
  max-norm bound.
- BC sum capacity (dirty-paper coding): dual MAC under a sum-power
  constraint, solved by sum-power iterative waterfilling, or the max-norm
  bound.

Clustered network:
- isolated uplink + downlink capacity, the full-duplex upper bound and the
  per-slot objective it comes from, and the SNR exponent parameterization.

All values are in nats.

Author: DuplexSched Project
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from utils.errors import ConfigError, ConvergenceError, NumericalError, SubsetCapError
from utils.linalg import batched_logdet_id_plus_gram, logdet_id_plus_gram

logger = logging.getLogger(__name__)

DEFAULT_SUBSET_CAP = 10 ** 6
DEFAULT_DPC_TOL = 1e-8
DEFAULT_DPC_MAX_ITERS = 10 ** 4
SUBSET_CHUNK = 1 << 16
MIN_STEP = 1e-12


# ---------------------------------------------------------------------------
# Uplink: MAC with at most M active users
# ---------------------------------------------------------------------------

def _subset_chunks(n: int, size: int):
    """Size-`size` subsets of range(n) in lexicographic order, as index arrays."""
    if size == 2:
        rows, cols = np.triu_indices(n, k=1)
        pairs = np.column_stack((rows, cols))
        for start in range(0, len(pairs), SUBSET_CHUNK):
            yield pairs[start:start + SUBSET_CHUNK]
        return
    combos = itertools.combinations(range(n), size)
    while True:
        chunk = list(itertools.islice(combos, SUBSET_CHUNK))
        if not chunk:
            return
        yield np.array(chunk, dtype=int)


def mac_m_best_subset(H_bar: np.ndarray, P_bar: float, M: int,
                      subset_cap: int = DEFAULT_SUBSET_CAP) -> Tuple[float, Tuple[int, ...]]:
    """
    Exact MAC-M sum capacity and the subset attaining it.

    max over |A| = M of log|I + P_bar H_bar_A H_bar_A*|, evaluated through
    the M x M Gram H_bar_A* H_bar_A. Ties keep the lexicographically
    smallest subset.

    Args:
        H_bar (np.ndarray): (M, n) uplink channels
        P_bar (float): Per-user power
        M (int): Maximum number of active users
        subset_cap (int): Largest number of subsets to enumerate

    Returns:
        tuple: (capacity in nats, best subset)
    """
    n = H_bar.shape[1]
    size = min(M, n)
    count = math.comb(n, size)
    if count > subset_cap:
        raise SubsetCapError(count, subset_cap)

    gram = H_bar.conj().T @ H_bar
    best_value = -np.inf
    best_subset: Tuple[int, ...] = ()
    for idx in _subset_chunks(n, size):
        blocks = gram[idx[:, :, None], idx[:, None, :]]
        values = batched_logdet_id_plus_gram(blocks, P_bar)
        i = int(np.argmax(values))
        if values[i] > best_value:
            best_value = float(values[i])
            best_subset = tuple(int(k) for k in idx[i])
    return best_value, best_subset


def mac_m_sum_capacity_exact(H_bar: np.ndarray, P_bar: float, M: int,
                             subset_cap: int = DEFAULT_SUBSET_CAP) -> float:
    """Exact MAC-M sum capacity by subset enumeration; see mac_m_best_subset."""
    return mac_m_best_subset(H_bar, P_bar, M, subset_cap)[0]


def mac_m_capacity_bound(H_bar: np.ndarray, P_bar: float, M: int) -> float:
    """M log(1 + P_bar max_k ||h_bar_k||^2), an upper bound on the MAC-M sum capacity."""
    max_norm = float(np.max(np.sum(np.abs(H_bar) ** 2, axis=0)))
    return M * math.log1p(P_bar * max_norm)


# ---------------------------------------------------------------------------
# Downlink: BC sum capacity via the dual MAC
# ---------------------------------------------------------------------------

def waterfill(gains: np.ndarray, total_power: float) -> Tuple[np.ndarray, float]:
    """
    Waterfilling over parallel channels with unit noise.

    Maximizes sum log(1 + p_k g_k) subject to sum p_k = total_power.

    Args:
        gains (np.ndarray): Nonnegative channel gains
        total_power (float): Power budget

    Returns:
        tuple: (powers, water level)
    """
    gains = np.asarray(gains, dtype=float)
    powers = np.zeros_like(gains)
    active = np.flatnonzero(gains > 0)
    if active.size == 0 or total_power <= 0:
        return powers, 0.0

    floors = 1.0 / gains[active]
    order = np.argsort(floors, kind="stable")
    sorted_floors = floors[order]
    levels = (total_power + np.cumsum(sorted_floors)) / np.arange(1, sorted_floors.size + 1)
    # channels that stay above water form a prefix of the sorted floors
    filled = int(np.flatnonzero(levels > sorted_floors)[-1]) + 1
    level = float(levels[filled - 1])
    powers[active] = np.maximum(level - floors, 0.0)
    return powers, level


@dataclass
class DpcResult:
    """Outcome of sum-power iterative waterfilling."""
    value: float
    powers: np.ndarray
    iterations: int
    duality_gap: float  # optimum - value is at most this
    history: List[float] = field(default_factory=list)


def _dual_mac_objective(A: np.ndarray, q: np.ndarray) -> float:
    return logdet_id_plus_gram(A * np.sqrt(q), 1.0)


def solve_dpc_sum_power(H: np.ndarray, P: float, tol: float = DEFAULT_DPC_TOL,
                        max_iters: int = DEFAULT_DPC_MAX_ITERS) -> DpcResult:
    """
    DPC sum capacity by sum-power iterative waterfilling on the dual MAC.

    Maximizes log|I + sum_k q_k h_k h_k*| over q >= 0, sum q <= P. Each
    iteration waterfills over the effective gains
    h_k* (I + sum_{j != k} q_j h_j h_j*)^{-1} h_k and moves toward the
    waterfilling point with a backtracking step, so the objective never
    decreases. Stops when the objective change between iterations falls
    below tol, or earlier when the Frank-Wolfe duality gap does. The
    change rule can stop while the gap is still well above tol (about
    1e-5 nats for a few hundred users), so the returned value is only
    guaranteed to lie within `duality_gap` of the optimum:
    value <= optimum <= value + duality_gap.

    Args:
        H (np.ndarray): (n, M) downlink channels, row k = h_k*
        P (float): Total power
        tol (float): Convergence tolerance
        max_iters (int): Iteration budget

    Returns:
        DpcResult: Value, powers, iteration count, duality gap and history
    """
    if not P > 0:
        raise ValueError(f"total power must be positive, got {P}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    A = H.conj().T  # column k = h_k
    M, n = A.shape
    q = np.full(n, P / n)
    value = _dual_mac_objective(A, q)
    history = [value]
    identity = np.eye(M, dtype=complex)

    for iteration in range(1, max_iters + 1):
        S = identity + (A * q) @ A.conj().T
        grad = np.real(np.sum(A.conj() * np.linalg.solve(S, A), axis=0))
        duality_gap = float(P * grad.max() - grad @ q)
        if duality_gap <= tol:
            return DpcResult(value, q, iteration - 1, duality_gap, history)

        # remove each user's own contribution (Sherman-Morrison)
        effective = grad / (1.0 - q * grad)
        target, _ = waterfill(effective, P)
        step = 1.0
        while step >= MIN_STEP:
            candidate = q + step * (target - q)
            candidate_value = _dual_mac_objective(A, candidate)
            if candidate_value > value:
                break
            step *= 0.5
        else:
            logger.debug("Waterfilling stalled at machine precision after %d iterations", iteration)
            return DpcResult(value, q, iteration, duality_gap, history)

        change = candidate_value - value
        q, value = candidate, candidate_value
        history.append(value)
        if (change < tol and step == 1.0) or change < tol * 1e-4:
            return DpcResult(value, q, iteration, duality_gap, history)

    raise ConvergenceError("sum-power iterative waterfilling did not converge", value, max_iters)


def bc_sum_capacity_dpc(H: np.ndarray, P: float, tol: float = DEFAULT_DPC_TOL,
                        max_iters: int = DEFAULT_DPC_MAX_ITERS) -> float:
    """DPC sum capacity of the isolated downlink; see solve_dpc_sum_power."""
    return solve_dpc_sum_power(H, P, tol, max_iters).value


def bc_capacity_bound(H: np.ndarray, P: float, M: int) -> float:
    """M log(1 + (P/M) max_k ||h_k||^2), an upper bound on the BC sum capacity."""
    max_norm = float(np.max(np.sum(np.abs(H) ** 2, axis=1)))
    return M * math.log1p(P / M * max_norm)


def benchmark_capacities(H_bar: np.ndarray, H: np.ndarray, P: float, P_bar: float, M: int,
                         subset_cap: int = DEFAULT_SUBSET_CAP, tol: float = DEFAULT_DPC_TOL,
                         max_iters: int = DEFAULT_DPC_MAX_ITERS) -> Tuple[float, float, str]:
    """
    Isolated uplink and downlink benchmarks for one realization.

    The MAC-M benchmark is exact while the subset count stays within
    subset_cap and falls back to the bound otherwise; the BC benchmark is
    always computed exactly.

    Returns:
        tuple: (C_MAC-M, C_BC, 'exact' or 'bound')
    """
    n = H_bar.shape[1]
    if math.comb(n, min(M, n)) <= subset_cap:
        mac, mode = mac_m_sum_capacity_exact(H_bar, P_bar, M, subset_cap), "exact"
    else:
        mac, mode = mac_m_capacity_bound(H_bar, P_bar, M), "bound"
    bc = bc_sum_capacity_dpc(H, P, tol, max_iters)
    return mac, bc, mode


# ---------------------------------------------------------------------------
# Clustered network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusteredBoundInputs:
    """Parameters (M, h, g, P, P_bar) of an (M, h, g)-clustered network."""
    M: int
    h: float
    g: float
    P: float
    P_bar: float

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.h < 0 or self.g < 0:
            raise ConfigError(f"h and g must be nonnegative, got h={self.h}, g={self.g}")
        if not (self.P > 0 and self.P_bar > 0):
            raise ConfigError(f"powers must be positive, got P={self.P}, P_bar={self.P_bar}")


@dataclass(frozen=True)
class SnrParams:
    """SNR = h^2 P / M, SNR^alpha = g^2 P_bar, SNR^beta = h^2 P_bar."""
    snr: float
    alpha: float
    beta: float
    M: int


def clustered_isolated_capacity(inp: ClusteredBoundInputs) -> float:
    """Sum of isolated capacities: M log(1 + h^2 P/M) + M log(1 + h^2 P_bar)."""
    h2 = inp.h ** 2
    return inp.M * math.log1p(h2 * inp.P / inp.M) + inp.M * math.log1p(h2 * inp.P_bar)


def clustered_fd_upper_bound(inp: ClusteredBoundInputs) -> float:
    """Upper bound on any achievable full-duplex sum rate in the clustered network."""
    M, h, g, P, P_bar = inp.M, inp.h, inp.g, inp.P, inp.P_bar
    uplink = M * math.log1p(h ** 2 * P_bar / (1.0 + g ** 2 * P_bar))
    downlink = M * math.log1p(h ** 2 * P / M + g ** 2 * P_bar + 2.0 * g * h * math.sqrt(P_bar * P / M))
    return uplink + downlink


def clustered_time_objective(k: Sequence[int], Pm: Sequence[float], inp: ClusteredBoundInputs) -> float:
    """
    Per-slot objective behind the clustered upper bound.

    sum_m log(1 + h^2 P_m + k_m g^2 P_bar + 2 g h sqrt(k_m P_m P_bar))
          + log(1 + k_m h^2 P_bar / (1 + k_m g^2 P_bar))

    Args:
        k (Sequence[int]): Uplink users scheduled from each cluster, sum <= M
        Pm (Sequence[float]): Downlink power per cluster direction, sum <= P
        inp (ClusteredBoundInputs): Network parameters

    Returns:
        float: Objective in nats
    """
    k = np.asarray(k)
    Pm = np.asarray(Pm, dtype=float)
    if k.shape != (inp.M,) or Pm.shape != (inp.M,):
        raise ConfigError(f"k and Pm must have length M={inp.M}")
    if np.any(k < 0) or np.any(k != np.round(k)):
        raise ConfigError(f"k must be nonnegative integers, got {k.tolist()}")
    if k.sum() > inp.M:
        raise ConfigError(f"at most M={inp.M} uplink users may transmit, got {int(k.sum())}")
    if np.any(Pm < 0) or Pm.sum() > inp.P * (1.0 + 1e-12):
        raise ConfigError(f"Pm must be nonnegative with sum <= P={inp.P}, got {Pm.tolist()}")

    h, g, P_bar = inp.h, inp.g, inp.P_bar
    downlink = np.log1p(h ** 2 * Pm + k * g ** 2 * P_bar + 2.0 * g * h * np.sqrt(k * Pm * P_bar))
    uplink = np.log1p(k * h ** 2 * P_bar / (1.0 + k * g ** 2 * P_bar))
    return float(np.sum(downlink + uplink))


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length `parts` summing to `total`."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cuts + (total + parts - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(parts))


def search_time_objective(inp: ClusteredBoundInputs,
                          grid_points: int = 64) -> Tuple[float, Tuple[int, ...], Tuple[float, ...]]:
    """
    Brute-force maximum of clustered_time_objective.

    k ranges over all allocations with sum <= M; Pm over the power simplex
    sum Pm = P discretized into grid_points - 1 equal steps per
    coordinate.

    Returns:
        tuple: (best value, best k, best Pm)
    """
    steps = grid_points - 1
    best = (-np.inf, (), ())
    allocations = [k for total in range(inp.M + 1) for k in _compositions(total, inp.M)]
    splits = [tuple(inp.P * s / steps for s in c) for c in _compositions(steps, inp.M)]
    for k in allocations:
        for Pm in splits:
            value = clustered_time_objective(k, Pm, inp)
            if value > best[0]:
                best = (value, k, Pm)
    return best


def snr_parameterization(sp: SnrParams) -> ClusteredBoundInputs:
    """
    Clustered parameters for a given SNR and exponents, with h = 1.

    P = M snr, P_bar = snr^beta, g = sqrt(snr^(alpha - beta)).
    """
    if not sp.snr > 0:
        raise ConfigError(f"snr must be positive, got {sp.snr}")
    log_snr = math.log(sp.snr)
    try:
        P_bar = math.exp(sp.beta * log_snr)
        g = math.exp(0.5 * (sp.alpha - sp.beta) * log_snr)
        P = sp.M * sp.snr
    except OverflowError as e:
        raise NumericalError(f"snr={sp.snr} with alpha={sp.alpha}, beta={sp.beta} overflows") from e
    if not (math.isfinite(P) and P_bar > 0 and math.isfinite(P_bar)):
        raise NumericalError(f"snr={sp.snr} with beta={sp.beta} gives an unusable P_bar={P_bar}")
    return ClusteredBoundInputs(M=sp.M, h=1.0, g=g, P=P, P_bar=P_bar)


def corollary_gap(inp: ClusteredBoundInputs) -> float:
    """Isolated capacity minus the full-duplex upper bound (lower bound on eta + eta_bar)."""
    return clustered_isolated_capacity(inp) - clustered_fd_upper_bound(inp)
