"""
Configuration Management System

Flat run configuration for DuplexSched: the network scenario keys plus the
experiment knobs. Files are JSON (or YAML, chosen by suffix); command-line
flags override file values.

Author: DuplexSched Project
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from modules.channel import MODELS, NetworkConfig
from modules.scheduler import EpsilonSchedule
from utils.errors import ConfigError

APP_NAME = "DuplexSched"
APP_VERSION = "1.0.0"


def _to_int(value: Any) -> int:
    """Exact integer conversion; accepts "7", 7, 7.0 and "1e6"."""
    if isinstance(value, bool):
        raise ValueError(f"{value} is not an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    as_float = float(value)
    if not as_float.is_integer():
        raise ValueError(f"{value} is not an integer")
    return int(as_float)


@dataclass
class RunConfig:
    """All settings of one run, as a flat key set."""
    # Network scenario
    n: int = 16
    M: int = 2
    P: float = 10.0
    P_bar: float = 10.0
    epsilon_mode: str = "decaying"
    epsilon: float = 1.0
    model: str = "homogeneous"
    h: float = 1.0
    g: float = 1.0
    seed: int = 0
    trial: int = 0

    # Monte Carlo
    trials: int = 500
    workers: int = 1
    delta: float = 1.0
    n_list: List[int] = field(default_factory=lambda: [16, 64, 256, 1024])

    # Antenna scaling and clustered sweeps
    alpha: float = 0.5
    beta: float = 1.0
    snr_list: List[float] = field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5, 1e6])
    m_list: List[int] = field(default_factory=lambda: [1, 2, 4])
    force_zero_g: bool = False

    # Statistical checks
    draws: int = 100000
    big_n: int = 10000
    ev_draws: int = 2000

    # Solvers
    subset_cap: int = 10 ** 6
    dpc_tol: float = 1e-8
    dpc_max_iters: int = 10 ** 4

    # Output
    out: str = "runs/output"


def validate_run_config(config: RunConfig) -> List[str]:
    """
    Check parameter ranges.

    Returns:
        list: Human-readable problems; empty when the config is valid
    """
    problems = []
    if config.M < 1:
        problems.append(f"M must be >= 1 (got {config.M})")
    if config.n < config.M:
        problems.append(f"n must be >= M (got n={config.n}, M={config.M})")
    if config.P <= 0 or config.P_bar <= 0:
        problems.append(f"P and P_bar must be positive (got P={config.P}, P_bar={config.P_bar})")
    if config.epsilon_mode not in ("decaying", "constant"):
        problems.append(f"epsilon_mode must be 'decaying' or 'constant' (got {config.epsilon_mode!r})")
    if config.epsilon <= 0:
        problems.append(f"epsilon must be positive (got {config.epsilon})")
    if config.model not in MODELS:
        problems.append(f"model must be one of {list(MODELS)} (got {config.model!r})")
    if config.h < 0 or config.g < 0:
        problems.append(f"h and g must be nonnegative (got h={config.h}, g={config.g})")
    if not 0 <= config.seed < 2 ** 64:
        problems.append(f"seed must fit in an unsigned 64-bit integer (got {config.seed})")
    if config.trial < 0:
        problems.append(f"trial must be >= 0 (got {config.trial})")
    if config.trials < 1:
        problems.append(f"trials must be >= 1 (got {config.trials})")
    if config.workers < 1:
        problems.append(f"workers must be >= 1 (got {config.workers})")
    if config.delta <= 0:
        problems.append(f"delta must be positive (got {config.delta})")
    if not config.n_list:
        problems.append("n_list must not be empty")
    if not config.m_list or min(config.m_list) < 1:
        problems.append(f"m_list must hold positive antenna counts (got {config.m_list})")
    if config.draws < 1 or config.ev_draws < 1 or config.big_n < 2:
        problems.append(f"draws and ev_draws must be >= 1 and big_n >= 2 "
                        f"(got {config.draws}, {config.ev_draws}, {config.big_n})")
    if config.subset_cap < 1 or config.dpc_tol <= 0 or config.dpc_max_iters < 1:
        problems.append("solver settings must be positive")
    return problems


class ConfigManager:
    """Loads, overrides and validates a RunConfig."""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None):
        self.config_file = Path(config_file) if config_file else None
        self.config = RunConfig()
        self.file_values: Dict[str, Any] = {}
        if self.config_file is not None:
            self.file_values = self.load_config(self.config_file)
            self.update(self.file_values)
        if overrides:
            self.update(overrides)

    @staticmethod
    def load_config(path: Path) -> Dict[str, Any]:
        """Read a flat JSON or YAML mapping."""
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                if path.suffix.lower() in (".yaml", ".yml"):
                    data = yaml.safe_load(f)
                else:
                    data = json.load(f)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigError(f"malformed config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a mapping of keys to values")
        # a run manifest carries the resolved config under 'config'
        if 'subcommand' in data and isinstance(data.get('config'), dict):
            data = data['config']
        return data

    def update(self, values: Dict[str, Any]):
        """Apply key/value pairs; None values are ignored so unset flags never win."""
        known = {f.name: f for f in fields(RunConfig)}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key: {key!r}")
            if value is None:
                continue
            setattr(self.config, key, self._coerce(key, value, getattr(self.config, key)))

    @staticmethod
    def _coerce(key: str, value: Any, current: Any) -> Any:
        try:
            if isinstance(current, bool):
                if isinstance(value, str):
                    return value.strip().lower() in ("1", "true", "yes", "on")
                return bool(value)
            if isinstance(current, list):
                if isinstance(value, str):
                    value = [v for v in value.split(",") if v.strip()]
                cast = _to_int if current and isinstance(current[0], int) else float
                return [cast(v) for v in value]
            if isinstance(current, int):
                return _to_int(value)
            if isinstance(current, float):
                return float(value)
            return str(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid value for {key!r}: {value!r} ({e})") from e

    def validate(self) -> RunConfig:
        problems = validate_run_config(self.config)
        if problems:
            raise ConfigError("; ".join(problems))
        return self.config

    def network_config(self, n: Optional[int] = None, M: Optional[int] = None) -> NetworkConfig:
        """NetworkConfig for the current settings, optionally resized."""
        c = self.config
        return NetworkConfig(
            n=c.n if n is None else n,
            M=c.M if M is None else M,
            P=c.P,
            P_bar=c.P_bar,
            epsilon=EpsilonSchedule(mode=c.epsilon_mode, value=c.epsilon),
            model=c.model,
            h=c.h,
            g=c.g,
            seed=c.seed,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self.config)

    def get_config_summary(self) -> Dict[str, Any]:
        """Short summary for console output."""
        c = self.config
        return {
            'network': f"n={c.n}, M={c.M}, P={c.P:g}, P_bar={c.P_bar:g}, model={c.model}",
            'epsilon': f"{c.epsilon_mode}({c.epsilon:g})",
            'seed': c.seed,
            'trials': c.trials,
            'workers': c.workers,
        }
