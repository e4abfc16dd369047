"""
Channel realizations for the full-duplex cell.

Two models:
- homogeneous: every uplink, downlink and interference gain is i.i.d.
  CN(0, 1) and fixed for the block;
- clustered: M orthogonal clusters, every user in cluster i sees the
  channel h * e_i, and interference magnitude is g inside a cluster and
  0 across clusters.

The n x n interference matrix G is never materialized. Column g_{.j}
(interference from uplink user j at every downlink user) is produced on
demand from its own random stream, so it does not matter which columns a
trial ends up needing.

Author: DuplexSched Project
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from modules.scheduler import EpsilonSchedule
from utils.errors import ConfigError
from utils.linalg import ComplexMatrix, sample_gaussian_matrix
from utils.streams import trial_stream

logger = logging.getLogger(__name__)

MODELS = ("homogeneous", "clustered")


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters shared by every trial."""
    n: int = 16
    M: int = 2
    P: float = 10.0
    P_bar: float = 10.0
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    model: str = "homogeneous"
    h: float = 1.0
    g: float = 1.0
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.M < 1:
            problems.append(f"M must be >= 1, got {self.M}")
        if self.n < self.M:
            problems.append(f"n must be >= M, got n={self.n}, M={self.M}")
        if not self.P > 0:
            problems.append(f"P must be positive, got {self.P}")
        if not self.P_bar > 0:
            problems.append(f"P_bar must be positive, got {self.P_bar}")
        if self.model not in MODELS:
            problems.append(f"model must be one of {MODELS}, got {self.model!r}")
        if self.model == "clustered" and not self.h > 0:
            problems.append(f"clustered model needs h > 0, got {self.h}")
        if self.g < 0:
            problems.append(f"g must be nonnegative, got {self.g}")
        if not 0 <= self.seed < 2 ** 64:
            problems.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if problems:
            raise ConfigError("; ".join(problems))

    def with_size(self, n: int, M: Optional[int] = None) -> "NetworkConfig":
        """Copy with a different user count (and optionally antenna count)."""
        return NetworkConfig(n=n, M=self.M if M is None else M, P=self.P, P_bar=self.P_bar,
                             epsilon=self.epsilon, model=self.model, h=self.h, g=self.g,
                             seed=self.seed)


@dataclass(frozen=True, eq=False)
class ClusteredNetwork:
    """(M, h, g)-clustered network with round-robin membership."""
    M: int
    n: int
    h: float
    g: float
    membership: np.ndarray

    def channel_matrix(self) -> np.ndarray:
        """(M, n) matrix whose column u is h * e_cluster(u); both links share it."""
        matrix = np.zeros((self.M, self.n), dtype=complex)
        matrix[self.membership, np.arange(self.n)] = self.h
        return matrix

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.M)


def make_clustered(M: int, n: int, h: float, g: float) -> ClusteredNetwork:
    """
    Build an (M, h, g)-clustered network.

    User u joins cluster u mod M. Cluster directions are the scaled
    standard basis vectors h * e_i.

    Args:
        M (int): Number of clusters (= antennas)
        n (int): Number of uplink users (= downlink users)
        h (float): Channel norm per cluster
        g (float): Intra-cluster interference magnitude

    Returns:
        ClusteredNetwork: The network
    """
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    if n < M:
        raise ConfigError(f"n must be >= M, got n={n}, M={M}")
    if not h > 0:
        raise ConfigError(f"h must be positive, got {h}")
    if g < 0:
        raise ConfigError(f"g must be nonnegative, got {g}")
    membership = np.arange(n) % M
    return ClusteredNetwork(M=M, n=n, h=float(h), g=float(g), membership=membership)


class ChannelRealization:
    """
    Link gains (H_bar, H, G) of one trial.

    Attributes:
        uplink: (M, n) matrix, column k = h_bar_k
        downlink: (n, M) matrix, row k = h_k*
        model: 'homogeneous' or 'clustered'
    """

    def __init__(self, uplink: ComplexMatrix, downlink: ComplexMatrix, model: str,
                 seed: int, trial: int, network: Optional[ClusteredNetwork] = None):
        self.uplink = uplink
        self.downlink = downlink
        self.model = model
        self.seed = seed
        self.trial = trial
        self.network = network
        self._columns: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.uplink.shape[1]

    @property
    def M(self) -> int:
        return self.uplink.shape[0]

    @property
    def cached_columns(self) -> int:
        return len(self._columns)

    def _generate_column(self, j: int) -> np.ndarray:
        if self.network is not None:
            same = self.network.membership == self.network.membership[j]
            return np.where(same, self.network.g, 0.0).astype(complex)
        rng = trial_stream(self.seed, self.trial, 'interference', self.n, j)
        return sample_gaussian_matrix(self.n, 1, rng)[:, 0]

    def interference_column(self, j: int) -> np.ndarray:
        """Interference from uplink user j at every downlink user, g_{.j}."""
        if not 0 <= j < self.n:
            raise IndexError(f"uplink user index {j} out of range [0, {self.n})")
        column = self._columns.get(j)
        if column is None:
            with self._lock:
                column = self._columns.get(j)
                if column is None:
                    column = self._generate_column(j)
                    column.setflags(write=False)
                    self._columns[j] = column
        return column

    def interference_columns(self, users: Iterable[int]) -> Dict[int, np.ndarray]:
        return {j: self.interference_column(j) for j in users}


def interference_column(real: ChannelRealization, j: int, config: Optional[NetworkConfig] = None) -> np.ndarray:
    """
    Return g_{.j}, generating and caching it on first use.

    Args:
        real (ChannelRealization): Realization owning the cache
        j (int): Uplink user index, 0-based
        config (NetworkConfig, optional): Scenario; must match the realization when given

    Returns:
        np.ndarray: Length-n complex column
    """
    if config is not None and config.n != real.n:
        raise ConfigError(f"config n={config.n} does not match realization n={real.n}")
    return real.interference_column(j)


def sample_homogeneous(config: NetworkConfig, trial: int) -> ChannelRealization:
    """
    Draw H_bar and H i.i.d. CN(0, 1) for one trial.

    The result depends only on (config.seed, trial, n); interference
    columns are left empty until requested.
    """
    if config.model != "homogeneous":
        raise ConfigError(f"sample_homogeneous needs the homogeneous model, got {config.model!r}")
    rng = trial_stream(config.seed, trial, 'channel', config.n)
    uplink = sample_gaussian_matrix(config.M, config.n, rng)
    downlink = sample_gaussian_matrix(config.n, config.M, rng)
    return ChannelRealization(uplink, downlink, "homogeneous", config.seed, trial)


def sample_clustered(config: NetworkConfig, trial: int = 0) -> ChannelRealization:
    """
    Realize an (M, h, g)-clustered network as link gains.

    Deterministic: every user in cluster i has channel h * e_i on both
    links, and interference is g within a cluster (real, nonnegative).
    """
    if config.model != "clustered":
        raise ConfigError(f"sample_clustered needs the clustered model, got {config.model!r}")
    net = make_clustered(config.M, config.n, config.h, config.g)
    uplink = net.channel_matrix()
    downlink = uplink.T.conj().copy()
    logger.debug("Clustered realization: cluster sizes %s", net.cluster_sizes().tolist())
    return ChannelRealization(uplink, downlink, "clustered", config.seed, trial, network=net)


def sample_realization(config: NetworkConfig, trial: int) -> ChannelRealization:
    """Dispatch on config.model."""
    if config.model == "clustered":
        return sample_clustered(config, trial)
    return sample_homogeneous(config, trial)
