"""
Error types shared by the DuplexSched modules.

The launcher maps each family to its own exit status.

Author: DuplexSched Project
"""


class DuplexSchedError(Exception):
    """Base class for all DuplexSched errors."""


class ConfigError(DuplexSchedError, ValueError):
    """Malformed configuration or parameter out of range."""


class SchedulingError(DuplexSchedError):
    """The scheduler cannot produce a schedule for the given inputs."""


class SubsetCapError(DuplexSchedError):
    """Exact MAC-M enumeration would exceed the subset cap."""

    def __init__(self, subsets: int, cap: int):
        super().__init__(
            f"{subsets} subsets exceed the cap of {cap}; use mac_m_capacity_bound instead"
        )
        self.subsets = subsets
        self.cap = cap


class ConvergenceError(DuplexSchedError, RuntimeError):
    """Iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, last_value: float, iterations: int):
        super().__init__(f"{message} (last value {last_value:.12g} after {iterations} iterations)")
        self.last_value = last_value
        self.iterations = iterations


class NumericalError(DuplexSchedError, ArithmeticError):
    """Numerical corruption: failed factorization, overflow."""
