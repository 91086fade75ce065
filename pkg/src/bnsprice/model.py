"""Risk-neutral model constants and shared time helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["ModelParams", "epsilon_factor"]


@dataclass(frozen=True)
class ModelParams:
    """Risk-neutral constants of the volatility/price dynamics.

    lam   -- mean-reversion rate of the variance process (> 0)
    rho   -- leverage loading of the variance jumps on the log-price (<= 0)
    r     -- risk-free rate (>= 0)
    T     -- pricing horizon (> 0)

    rho <= 0 keeps exp(rho z) <= 1 on positive jumps, so the leverage
    cumulant is finite for every admissible kernel.
    """

    lam: float
    rho: float
    r: float
    T: float

    def __post_init__(self):
        if self.lam <= 0:
            raise DomainError("lam must be > 0")
        if self.rho > 0:
            raise DomainError("rho must be <= 0")
        if self.r < 0:
            raise DomainError("r must be >= 0")
        if self.T <= 0:
            raise DomainError("T must be > 0")


def epsilon_factor(t, lam: float):
    """(1 - exp(-lam * t)) / lam, the integrated decay factor.

    Maps an initial variance v to its contribution v * epsilon_factor(t)
    to the integrated variance; bounded by 1 / lam.
    """
    t = np.asarray(t, dtype=float)
    out = -np.expm1(-lam * t) / lam
    if out.ndim == 0:
        return float(out)
    return out
