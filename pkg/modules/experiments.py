"""
Monte Carlo experiments.

Each experiment returns an ExperimentTable: an ordered schema (column ->
unit), a pandas DataFrame of rows and run metadata. Tables are pure
functions of their inputs and the master seed; trials may run on several
worker processes but are always aggregated in trial order, so the worker
count never changes a single output byte.

Experiments:
- gap-vs-n: rate gap to the isolated benchmarks as the user count grows
- antenna-scaling: per-stream rate when the antenna count grows like log n
- clustered-sweep: isolated capacity vs the full-duplex bound over SNR
- sidechannel-check: side-channel replication scheme vs isolated capacity
- candidate-prob: candidate-set membership frequencies vs closed forms
- extreme-value: tail probabilities of maxima of exponential/gamma variables

Author: DuplexSched Project
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from modules.capacity import (DEFAULT_DPC_MAX_ITERS, DEFAULT_DPC_TOL, DEFAULT_SUBSET_CAP,
                              ClusteredBoundInputs, SnrParams, benchmark_capacities,
                              clustered_fd_upper_bound, clustered_isolated_capacity,
                              corollary_gap, snr_parameterization)
from modules.channel import ClusteredNetwork, NetworkConfig, sample_realization
from modules.rates import (NATS_PER_BIT, RateReport, downlink_stream_rates,
                           sidechannel_clustered_rates, uplink_stream_rates)
from modules.scheduler import (Schedule, downlink_projections, epsilon_value, schedule,
                               uplink_projections)
from utils.config import APP_VERSION
from utils.csv_logger import write_table_csv
from utils.errors import ConfigError
from utils.linalg import sample_gaussian_matrix, sample_haar_unitary
from utils.streams import trial_stream

logger = logging.getLogger(__name__)

MIN_CANDIDATE_DRAWS = 10 ** 4
# Tolerance for "achieved rate <= bound" checks.
BOUND_SLACK = 1e-9


@dataclass
class ExperimentTable:
    """Result table of one experiment."""
    name: str
    schema: Dict[str, str]
    rows: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def columns(self) -> List[str]:
        return list(self.rows.columns)

    def to_csv(self, path) -> None:
        write_table_csv(self.rows, path)


def _make_table(name: str, schema: Dict[str, str], records: List[Dict[str, Any]],
                metadata: Dict[str, Any]) -> ExperimentTable:
    rows = pd.DataFrame.from_records(records, columns=list(schema))
    metadata = dict(metadata)
    metadata.setdefault('version', APP_VERSION)
    return ExperimentTable(name=name, schema=dict(schema), rows=rows, metadata=metadata)


def concat_tables(tables: Sequence[ExperimentTable]) -> ExperimentTable:
    """Stack tables of the same experiment; columns missing from some parts stay empty."""
    if not tables:
        raise ConfigError("nothing to concatenate")
    schema: Dict[str, str] = {}
    for table in tables:
        schema.update(table.schema)
    rows = pd.concat([t.rows for t in tables], ignore_index=True).reindex(columns=list(schema))
    metadata = dict(tables[0].metadata)
    metadata['parts'] = [t.metadata for t in tables]
    return ExperimentTable(name=tables[0].name, schema=schema, rows=rows, metadata=metadata)


def _standard_error(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def _config_echo(config: NetworkConfig) -> Dict[str, Any]:
    echo = asdict(config)
    echo['epsilon'] = f"{config.epsilon.mode}({config.epsilon.value:g})"
    return echo


# ---------------------------------------------------------------------------
# Single trial
# ---------------------------------------------------------------------------

@dataclass
class TrialResult:
    """Everything one trial produced."""
    trial: int
    config: NetworkConfig
    schedule: Schedule
    report: RateReport
    uplink_beams: np.ndarray
    downlink_beams: np.ndarray

    @property
    def epsilon(self) -> float:
        return self.schedule.epsilon_used


def run_trial(config: NetworkConfig, trial: int, subset_cap: int = DEFAULT_SUBSET_CAP,
              tol: float = DEFAULT_DPC_TOL, max_iters: int = DEFAULT_DPC_MAX_ITERS,
              with_benchmarks: bool = True) -> TrialResult:
    """
    One pass of the pipeline: channels, beams, schedule, rates, benchmarks.

    Homogeneous trials are benchmarked against the MAC-M and DPC sum
    capacities. Clustered trials are benchmarked against the isolated
    cluster capacities, and the full-duplex upper bound is attached to the
    report together with a flag telling whether the achieved sum rate
    stays below it.

    Args:
        config (NetworkConfig): Scenario
        trial (int): Trial index; selects the random streams
        subset_cap (int): Largest exact MAC-M enumeration
        tol (float): Waterfilling tolerance
        max_iters (int): Waterfilling iteration budget
        with_benchmarks (bool): Skip the capacity computations when False

    Returns:
        TrialResult: Schedule, rates and beams of the trial
    """
    n, M = config.n, config.M
    realization = sample_realization(config, trial)
    eps = epsilon_value(config.epsilon, n)
    Phi_bar = sample_haar_unitary(M, trial_stream(config.seed, trial, 'uplink_beam', n))
    Phi = sample_haar_unitary(M, trial_stream(config.seed, trial, 'downlink_beam', n))

    sched = schedule(realization, Phi_bar, Phi, eps)
    g_cols = realization.interference_columns(sched.uplink_users)
    uplink = uplink_stream_rates(realization.uplink, Phi_bar, sched.uplink_users, config.P_bar)
    downlink = downlink_stream_rates(realization.downlink, g_cols, Phi, sched.downlink_users,
                                     sched.uplink_users, config.P, config.P_bar)
    report = RateReport(uplink_stream_rates=uplink, downlink_stream_rates=downlink)

    if with_benchmarks and config.model == "clustered":
        h2 = config.h ** 2
        report.benchmarks = (M * math.log1p(h2 * config.P_bar), M * math.log1p(h2 * config.P / M))
        report.benchmark_mode = "clustered"
        bound = clustered_fd_upper_bound(
            ClusteredBoundInputs(M=M, h=config.h, g=config.g, P=config.P, P_bar=config.P_bar))
        report.extras['fd_bound'] = bound
        report.extras['within_fd_bound'] = report.sum_rate <= bound + BOUND_SLACK
    elif with_benchmarks:
        mac, bc, mode = benchmark_capacities(realization.uplink, realization.downlink, config.P,
                                             config.P_bar, M, subset_cap, tol, max_iters)
        report.benchmarks = (mac, bc)
        report.benchmark_mode = mode

    return TrialResult(trial=trial, config=config, schedule=sched, report=report,
                       uplink_beams=Phi_bar, downlink_beams=Phi)


def _map_trials(func: Callable, tasks: List[tuple], workers: int) -> List[Any]:
    """Apply func to every task, in task order, on up to `workers` processes."""
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    processes = min(workers, len(tasks))
    chunksize = max(1, len(tasks) // (4 * processes))
    with Pool(processes=processes) as pool:
        return pool.map(func, tasks, chunksize=chunksize)


def _gap_trial(task: tuple) -> tuple:
    config, trial, subset_cap, tol, max_iters = task
    result = run_trial(config, trial, subset_cap, tol, max_iters)
    report, sched = result.report, result.schedule
    uplink_gap, downlink_gap = report.gaps
    mac, bc = report.benchmarks
    return (uplink_gap, downlink_gap, report.uplink_sum, report.downlink_sum,
            sched.uplink_fallback_rate, sched.downlink_fallback_rate, mac, bc)


def _scaling_trial(task: tuple) -> float:
    config, trial = task
    report = run_trial(config, trial, with_benchmarks=False).report
    return report.sum_rate / (2 * config.M)


def _check_trials(trials: int, n_list: Sequence[int]):
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if len(n_list) == 0:
        raise ConfigError("n_list must not be empty")


# ---------------------------------------------------------------------------
# Homogeneous experiments
# ---------------------------------------------------------------------------

GAP_VS_N_SCHEMA = {
    'n': 'users',
    'M': 'antennas',
    'epsilon': 'threshold',
    'trials': 'count',
    'mac_benchmark': 'exact|bound|clustered',
    'mean_gap_nats': 'nats',
    'mean_gap_bits': 'bits',
    'se_gap': 'nats',
    'min_gap': 'nats',
    'p_exceed': 'probability',
    'se_p_exceed': 'probability',
    'mean_uplink_gap': 'nats',
    'mean_downlink_gap': 'nats',
    'mean_uplink_rate': 'nats',
    'mean_downlink_rate': 'nats',
    'mean_uplink_rate_bits': 'bits',
    'mean_downlink_rate_bits': 'bits',
    'mean_uplink_fallback': 'fraction',
    'mean_downlink_fallback': 'fraction',
    'mean_half_duplex_rate': 'nats',
    'mean_fd_gain': 'ratio',
    'm_loglog_n': 'nats',
}


def run_gap_vs_n(config: NetworkConfig, n_list: Sequence[int], trials: int, delta: float = 1.0,
                 workers: int = 1, subset_cap: int = DEFAULT_SUBSET_CAP,
                 tol: float = DEFAULT_DPC_TOL,
                 max_iters: int = DEFAULT_DPC_MAX_ITERS) -> ExperimentTable:
    """
    Total gap (C_MAC-M - R_bar) + (C_BC - R) as the number of users grows.

    Args:
        config (NetworkConfig): Scenario; n is replaced by each entry of n_list
        n_list (Sequence[int]): User counts
        trials (int): Trials per user count
        delta (float): Gap level for the exceedance probability, in nats
        workers (int): Worker processes
        subset_cap (int): Exact MAC-M is used while C(n, M) <= subset_cap
        tol (float): Waterfilling tolerance
        max_iters (int): Waterfilling iteration budget

    Returns:
        ExperimentTable: One row per n
    """
    _check_trials(trials, n_list)
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    for n in n_list:
        if n < config.M:
            raise ConfigError(f"every n must be >= M={config.M}, got n={n}")

    records = []
    modes = {}
    for n in n_list:
        cfg = config.with_size(n)
        eps = epsilon_value(cfg.epsilon, n)
        if cfg.model == "clustered":
            mode = "clustered"
        elif math.comb(n, cfg.M) <= subset_cap:
            mode = "exact"
        else:
            mode = "bound"
            logger.warning("C(%d, %d) exceeds the subset cap %d; using the MAC-M bound for n=%d",
                           n, cfg.M, subset_cap, n)
        modes[n] = mode

        tasks = [(cfg, t, subset_cap, tol, max_iters) for t in range(trials)]
        out = np.array(_map_trials(_gap_trial, tasks, workers), dtype=float)
        up_gap, down_gap, up_rate, down_rate, up_fb, down_fb, mac, bc = out.T
        gap = up_gap + down_gap
        exceed = gap > delta
        p_exceed = float(np.mean(exceed))
        half_duplex = 0.5 * (mac + bc)

        fallback = float(np.mean(np.concatenate([up_fb, down_fb])))
        if fallback > 0.5:
            logger.warning("n=%d: %.0f%% of streams fell back to the unconstrained choice",
                           n, 100 * fallback)

        records.append({
            'n': n,
            'M': cfg.M,
            'epsilon': eps,
            'trials': trials,
            'mac_benchmark': mode,
            'mean_gap_nats': float(np.mean(gap)),
            'mean_gap_bits': float(np.mean(gap)) / NATS_PER_BIT,
            'se_gap': _standard_error(gap),
            'min_gap': float(np.min(gap)),
            'p_exceed': p_exceed,
            'se_p_exceed': math.sqrt(p_exceed * (1.0 - p_exceed) / trials),
            'mean_uplink_gap': float(np.mean(up_gap)),
            'mean_downlink_gap': float(np.mean(down_gap)),
            'mean_uplink_rate': float(np.mean(up_rate)),
            'mean_downlink_rate': float(np.mean(down_rate)),
            'mean_uplink_rate_bits': float(np.mean(up_rate)) / NATS_PER_BIT,
            'mean_downlink_rate_bits': float(np.mean(down_rate)) / NATS_PER_BIT,
            'mean_uplink_fallback': float(np.mean(up_fb)),
            'mean_downlink_fallback': float(np.mean(down_fb)),
            'mean_half_duplex_rate': float(np.mean(half_duplex)),
            'mean_fd_gain': float(np.mean((up_rate + down_rate) / half_duplex)),
            'm_loglog_n': cfg.M * math.log(math.log(n)) if n >= 2 else float('nan'),
        })
        logger.info("gap-vs-n: n=%d done, mean gap %.4f nats, P(gap > %g) = %.3f",
                    n, records[-1]['mean_gap_nats'], delta, p_exceed)

    metadata = {
        'config': _config_echo(config),
        'seed': config.seed,
        'trials': trials,
        'delta': delta,
        'benchmark_mode': modes,
        'trend_check': 'p_exceed and mean_gap_nats non-increasing in n within one standard error',
        'gap_ratio_last_first': records[-1]['mean_gap_nats'] / records[0]['mean_gap_nats'],
    }
    return _make_table("gap-vs-n", GAP_VS_N_SCHEMA, records, metadata)


ANTENNA_SCALING_SCHEMA = {
    'n': 'users',
    'M': 'antennas',
    'alpha': 'ratio',
    'epsilon': 'threshold',
    'trials': 'count',
    'mean_ratio_nats': 'nats',
    'mean_ratio_bits': 'bits',
    'se_ratio': 'nats',
    'rel_change': 'fraction',
}


def antennas_for(alpha: float, n: int) -> int:
    """M = max(1, round(alpha ln n)), halves rounded up."""
    return max(1, int(math.floor(alpha * math.log(n) + 0.5)))


def run_antenna_scaling(config: NetworkConfig, alpha: float, n_list: Sequence[int], trials: int,
                        workers: int = 1) -> ExperimentTable:
    """
    Per-stream sum rate (R_bar + R) / (2M) with M growing like alpha ln n.

    Needs a constant threshold; the decaying threshold is rejected.

    Returns:
        ExperimentTable: One row per n; rel_change compares each row with the previous one
    """
    if config.epsilon.mode != "constant":
        raise ConfigError("antenna scaling needs a constant epsilon (epsilon_mode='constant')")
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    _check_trials(trials, n_list)

    records = []
    previous: Optional[float] = None
    for n in n_list:
        if n < 2:
            raise ConfigError(f"antenna scaling needs n >= 2, got {n}")
        M = antennas_for(alpha, n)
        if M > n:
            raise ConfigError(f"alpha={alpha} gives M={M} > n={n}")
        cfg = config.with_size(n, M)
        ratios = np.array(_map_trials(_scaling_trial, [(cfg, t) for t in range(trials)], workers))
        mean_ratio = float(np.mean(ratios))
        rel_change = float('nan') if previous is None else abs(mean_ratio - previous) / previous
        previous = mean_ratio
        records.append({
            'n': n,
            'M': M,
            'alpha': alpha,
            'epsilon': epsilon_value(cfg.epsilon, n),
            'trials': trials,
            'mean_ratio_nats': mean_ratio,
            'mean_ratio_bits': mean_ratio / NATS_PER_BIT,
            'se_ratio': _standard_error(ratios),
            'rel_change': rel_change,
        })
        logger.info("antenna-scaling: n=%d, M=%d, ratio %.4f nats", n, M, mean_ratio)

    metadata = {'config': _config_echo(config), 'seed': config.seed, 'trials': trials, 'alpha': alpha,
                'trend_check': 'rel_change between the last two n below 0.15'}
    return _make_table("antenna-scaling", ANTENNA_SCALING_SCHEMA, records, metadata)


# ---------------------------------------------------------------------------
# Clustered network
# ---------------------------------------------------------------------------

CLUSTERED_SWEEP_SCHEMA = {
    'snr': 'linear',
    'M': 'clusters',
    'alpha': 'exponent',
    'beta': 'exponent',
    'h': 'amplitude',
    'g': 'amplitude',
    'P': 'power',
    'P_bar': 'power',
    'isolated_nats': 'nats',
    'fd_bound_nats': 'nats',
    'gap_nats': 'nats',
    'gap_bits': 'bits',
    'gap_ratio': 'ratio',
}


def run_clustered_snr_sweep(alpha: float, beta: float, M: int, snr_list: Sequence[float],
                            force_zero_g: bool = False) -> ExperimentTable:
    """
    Isolated capacity against the full-duplex upper bound over an SNR sweep.

    With two or more points a top_decade_slope column is added: the
    least-squares slope of the gap against M ln SNR over the points with
    SNR >= max SNR / 10 (the last two points when the top decade holds
    only one).

    Args:
        alpha (float): Interference exponent, g^2 P_bar = SNR^alpha
        beta (float): Uplink exponent, h^2 P_bar = SNR^beta
        M (int): Number of clusters
        snr_list (Sequence[float]): Strictly increasing SNR values, each > 1
        force_zero_g (bool): Remove the interference (g = 0)

    Returns:
        ExperimentTable: One row per SNR
    """
    if len(snr_list) == 0:
        raise ConfigError("snr_list must not be empty")
    snrs = np.asarray(snr_list, dtype=float)
    if np.any(snrs <= 1.0):
        raise ConfigError(f"every SNR must be > 1, got {snrs.tolist()}")
    if np.any(np.diff(snrs) <= 0):
        raise ConfigError(f"snr_list must be strictly increasing, got {snrs.tolist()}")
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")

    records = []
    for snr in snrs:
        inp = snr_parameterization(SnrParams(snr=float(snr), alpha=alpha, beta=beta, M=M))
        if force_zero_g:
            inp = replace(inp, g=0.0)
        isolated = clustered_isolated_capacity(inp)
        bound = clustered_fd_upper_bound(inp)
        gap = corollary_gap(inp)
        records.append({
            'snr': float(snr),
            'M': M,
            'alpha': alpha,
            'beta': beta,
            'h': inp.h,
            'g': inp.g,
            'P': inp.P,
            'P_bar': inp.P_bar,
            'isolated_nats': isolated,
            'fd_bound_nats': bound,
            'gap_nats': gap,
            'gap_bits': gap / NATS_PER_BIT,
            'gap_ratio': gap / (M * math.log(snr)),
        })

    schema = dict(CLUSTERED_SWEEP_SCHEMA)
    metadata = {'alpha': alpha, 'beta': beta, 'M': M, 'force_zero_g': force_zero_g}
    if len(records) >= 2:
        top = np.flatnonzero(snrs >= snrs[-1] / 10.0)
        if top.size < 2:
            top = np.arange(len(snrs) - 2, len(snrs))
        x = M * np.log(snrs[top])
        y = np.array([records[i]['gap_nats'] for i in top])
        slope = float(stats.linregress(x, y).slope)
        schema['top_decade_slope'] = 'ratio'
        for record in records:
            record['top_decade_slope'] = slope
        metadata['top_decade_points'] = int(top.size)
        logger.info("clustered-sweep: M=%d, top-decade slope %.4f", M, slope)
    return _make_table("clustered-sweep", schema, records, metadata)


SIDECHANNEL_SCHEMA = {
    'M': 'clusters',
    'h': 'amplitude',
    'P': 'power',
    'P_bar': 'power',
    'isolated_nats': 'nats',
    'scheme_nats': 'nats',
    'difference_nats': 'nats',
    'difference_bits': 'bits',
    'bound_nats': 'nats',
    'within_bound': 'bool',
}


def run_sidechannel_check(M_list: Sequence[int], h: float, P: float, P_bar: float) -> ExperimentTable:
    """
    Side-channel replication scheme against the isolated capacity.

    The difference is at most 2M log 2 nats (2M bits) for every parameter
    choice and approaches it at high power.
    """
    if len(M_list) == 0:
        raise ConfigError("M_list must not be empty")
    records = []
    for M in M_list:
        inp = ClusteredBoundInputs(M=int(M), h=h, g=0.0, P=P, P_bar=P_bar)
        isolated = clustered_isolated_capacity(inp)
        # one user per cluster; g drops out of the scheme
        net = ClusteredNetwork(M=inp.M, n=inp.M, h=inp.h, g=0.0, membership=np.arange(inp.M))
        scheme = sum(sidechannel_clustered_rates(net, P, P_bar))
        difference = isolated - scheme
        bound = 2 * inp.M * NATS_PER_BIT
        records.append({
            'M': inp.M,
            'h': h,
            'P': P,
            'P_bar': P_bar,
            'isolated_nats': isolated,
            'scheme_nats': scheme,
            'difference_nats': difference,
            'difference_bits': difference / NATS_PER_BIT,
            'bound_nats': bound,
            'within_bound': bool(difference <= bound + 1e-12),
        })
    return _make_table("sidechannel-check", SIDECHANNEL_SCHEMA, records,
                       {'h': h, 'P': P, 'P_bar': P_bar})


# ---------------------------------------------------------------------------
# Statistical checks
# ---------------------------------------------------------------------------

CANDIDATE_SCHEMA = {
    'link': 'uplink|downlink',
    'M': 'antennas',
    'epsilon': 'threshold',
    'draws': 'count',
    'empirical': 'probability',
    'analytic': 'probability',
    'std_error': 'probability',
    'z_score': 'sigma',
}


def _z_score(empirical: float, analytic: float, draws: int) -> tuple:
    std_error = math.sqrt(analytic * (1.0 - analytic) / draws)
    if std_error == 0.0:
        z = 0.0 if empirical == analytic else math.copysign(math.inf, empirical - analytic)
    else:
        z = (empirical - analytic) / std_error
    return std_error, z


def run_candidate_prob_check(M: int, epsilon: float, n: int, draws: int, seed: int = 0) -> ExperimentTable:
    """
    Frequency with which a user qualifies for stream 0, against closed forms.

    A user qualifies on the uplink when its projections on the other M-1
    receive beams are all <= epsilon, which has probability
    (1 - e^-eps)^(M-1). A downlink user must also see at most epsilon
    interference from each of the M scheduled uplink users, which gives
    (1 - e^-eps)^(2M-1). Users are drawn in groups of n sharing one pair
    of beams.

    Args:
        M (int): Antennas
        epsilon (float): Threshold
        n (int): Users per beam draw
        draws (int): Number of users, at least 10^4
        seed (int): Master seed

    Returns:
        ExperimentTable: One uplink row and one downlink row
    """
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if draws < MIN_CANDIDATE_DRAWS:
        raise ConfigError(f"draws must be >= {MIN_CANDIDATE_DRAWS}, got {draws}")

    uplink_hits = 0
    downlink_hits = 0
    batches = -(-draws // n)
    for batch in range(batches):
        size = min(n, draws - batch * n)
        rng = trial_stream(seed, batch, 'candidate', n)
        Phi_bar = sample_haar_unitary(M, rng)
        Phi = sample_haar_unitary(M, rng)
        H_bar = sample_gaussian_matrix(M, size, rng)
        H = sample_gaussian_matrix(size, M, rng)
        G = sample_gaussian_matrix(size, M, rng)

        up = uplink_projections(H_bar, Phi_bar)
        down = downlink_projections(H, Phi)
        uplink_hits += int(np.count_nonzero(np.all(up[1:] <= epsilon, axis=0)))
        downlink_member = np.all(down[1:] <= epsilon, axis=0) & np.all(np.abs(G) ** 2 <= epsilon, axis=1)
        downlink_hits += int(np.count_nonzero(downlink_member))

    p = -math.expm1(-epsilon)
    records = []
    for link, hits, exponent in (("uplink", uplink_hits, M - 1), ("downlink", downlink_hits, 2 * M - 1)):
        empirical = hits / draws
        analytic = p ** exponent
        std_error, z = _z_score(empirical, analytic, draws)
        records.append({
            'link': link,
            'M': M,
            'epsilon': epsilon,
            'draws': draws,
            'empirical': empirical,
            'analytic': analytic,
            'std_error': std_error,
            'z_score': z,
        })
    return _make_table("candidate-prob", CANDIDATE_SCHEMA, records, {'seed': seed, 'n': n})


EXTREME_VALUE_SCHEMA = {
    'statistic': 'name',
    'M': 'shape',
    'N': 'count',
    'draws': 'count',
    'threshold': 'value',
    'empirical': 'probability',
    'reference': 'probability',
    'exact': 'probability',
    'std_error': 'probability',
}

# complex entries drawn per chunk of maxima
EV_CHUNK_ELEMENTS = 1 << 20


def _sample_maxima(M: int, N: int, draws: int, seed: int) -> tuple:
    """
    Maxima over N users of |phi* h|^2 and ||h||^2, `draws` times.

    Every h is a CN(0, I_M) channel and phi is the first column of a Haar
    unitary, so the projections are Exp(1) and the squared norms are
    Gamma(M, 1). Channels are drawn in chunks of whole maxima; chunk c
    uses its own stream, so the result depends only on (M, N, draws, seed).

    Returns:
        tuple: (projection maxima, squared-norm maxima), each of length draws
    """
    phi = sample_haar_unitary(M, trial_stream(seed, 0, 'extreme', N, M))[:, 0]
    per_chunk = max(1, EV_CHUNK_ELEMENTS // (N * M))
    projection_max = np.empty(draws)
    norm_max = np.empty(draws)
    for chunk, start in enumerate(range(0, draws, per_chunk)):
        size = min(per_chunk, draws - start)
        h = sample_gaussian_matrix(M, size * N, trial_stream(seed, chunk + 1, 'extreme', N, M))
        projections = np.abs(phi.conj() @ h) ** 2
        norms = np.sum(np.abs(h) ** 2, axis=0)
        projection_max[start:start + size] = projections.reshape(size, N).max(axis=1)
        norm_max[start:start + size] = norms.reshape(size, N).max(axis=1)
    return projection_max, norm_max


def run_extreme_value_check(M: int, N: int, draws: int, seed: int = 0) -> ExperimentTable:
    """
    Tail behaviour of maxima of exponential and gamma variables.

    Both statistics are measured on sampled channels (see _sample_maxima).
    Rows:
    - max_exp_below: P(max of N Exp(1) < ln N - ln ln N), reference 2/N
      (an upper bound), exact (1 - e^-threshold)^N
    - max_gamma_above: P(max of N Gamma(M, 1) > ln N + (M+1) ln ln N),
      reference and exact both 1 - (1 - sf)^N, which vanishes as N grows

    std_error is the binomial standard error at the exact probability.
    Costs draws * N * M complex samples.

    Args:
        M (int): Antennas; the gamma shape
        N (int): Users per maximum, at least 3
        draws (int): Maxima sampled per statistic
        seed (int): Master seed

    Returns:
        ExperimentTable: Two rows
    """
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    if N < 3:
        raise ConfigError(f"N must be >= 3 so that ln ln N > 0, got {N}")
    if draws < 1:
        raise ConfigError(f"draws must be >= 1, got {draws}")

    log_n, loglog_n = math.log(N), math.log(math.log(N))
    projection_max, norm_max = _sample_maxima(M, N, draws, seed)
    records = []

    low = log_n - loglog_n
    exact = math.exp(N * math.log1p(-math.exp(-low)))
    records.append({
        'statistic': 'max_exp_below',
        'M': 1,
        'N': N,
        'draws': draws,
        'threshold': low,
        'empirical': float(np.mean(projection_max < low)),
        'reference': 2.0 / N,
        'exact': exact,
        'std_error': math.sqrt(exact * (1.0 - exact) / draws),
    })

    high = log_n + (M + 1) * loglog_n
    sf = float(stats.gamma.sf(high, M))
    exact = -math.expm1(N * math.log1p(-sf))
    records.append({
        'statistic': 'max_gamma_above',
        'M': M,
        'N': N,
        'draws': draws,
        'threshold': high,
        'empirical': float(np.mean(norm_max > high)),
        'reference': exact,
        'exact': exact,
        'std_error': math.sqrt(exact * (1.0 - exact) / draws),
    })
    logger.info("extreme-value: N=%d, M=%d, %d maxima from sampled channels", N, M, draws)
    return _make_table("extreme-value", EXTREME_VALUE_SCHEMA, records, {'seed': seed})


SINGLE_TRIAL_SCHEMA = {
    'stream': 'index',
    'uplink_user': 'index',
    'downlink_user': 'index',
    'uplink_fallback': 'bool',
    'downlink_fallback': 'bool',
    'uplink_rate_nats': 'nats',
    'downlink_rate_nats': 'nats',
    'uplink_rate_bits': 'bits',
    'downlink_rate_bits': 'bits',
}


def trial_table(result: TrialResult) -> ExperimentTable:
    """Per-stream view of one trial."""
    sched, report = result.schedule, result.report
    records = [{
        'stream': m,
        'uplink_user': sched.uplink_users[m],
        'downlink_user': sched.downlink_users[m],
        'uplink_fallback': sched.uplink_fallback_flags[m],
        'downlink_fallback': sched.downlink_fallback_flags[m],
        'uplink_rate_nats': float(report.uplink_stream_rates[m]),
        'downlink_rate_nats': float(report.downlink_stream_rates[m]),
        'uplink_rate_bits': float(report.uplink_stream_rates[m]) / NATS_PER_BIT,
        'downlink_rate_bits': float(report.downlink_stream_rates[m]) / NATS_PER_BIT,
    } for m in range(result.config.M)]
    metadata = {'config': _config_echo(result.config), 'seed': result.config.seed,
                'trial': result.trial, 'report': report.to_dict()}
    return _make_table("single-trial", SINGLE_TRIAL_SCHEMA, records, metadata)
