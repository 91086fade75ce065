"""Obstacle (payoff) functions with certified Lipschitz constants.

Payoffs act on the log-price x.  Every certified payoff is nonnegative
and Lipschitz in x; the plain call is not Lipschitz in x and is only
available behind an explicit override.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = ["Payoff", "put", "capped_call", "custom"]


@dataclass(frozen=True)
class Payoff:
    """Obstacle h(x) >= 0 with Lipschitz constant lipschitz_k."""

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_k: float
    strike: float = math.nan
    cap: float = math.nan

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def check_lipschitz(self, x_lo: float, x_hi: float, n: int = 2001,
                        slack: float = 1e-12) -> bool:
        """Dense-sampling certificate of the Lipschitz bound on [x_lo, x_hi].

        Checks consecutive-point ratios; for the piecewise payoffs shipped
        here that is equivalent to checking all pairs.
        """
        xs = np.linspace(x_lo, x_hi, n)
        h = self(xs)
        ratios = np.abs(np.diff(h)) / np.diff(xs)
        return bool(np.max(ratios) <= self.lipschitz_k * (1.0 + slack))


def put(strike: float) -> Payoff:
    """American put payoff h(x) = max(strike - exp(x), 0).

    The derivative is -exp(x) on the exercise region exp(x) <= strike,
    so the Lipschitz constant is the strike itself.
    """
    if strike <= 0:
        raise DomainError("strike must be > 0")

    def fn(x):
        return np.maximum(strike - np.exp(x), 0.0)

    return Payoff("put", fn, lipschitz_k=strike, strike=strike)


def capped_call(strike: float, cap: float) -> Payoff:
    """Call capped at ``cap``: h(x) = min(max(exp(x) - strike, 0), cap).

    The cap restores the Lipschitz property lost by the plain call; the
    slope is bounded by exp(x) <= strike + cap on the sloped region.
    """
    if strike <= 0 or cap <= 0:
        raise DomainError("strike and cap must be > 0")

    def fn(x):
        return np.minimum(np.maximum(np.exp(x) - strike, 0.0), cap)

    return Payoff("capped_call", fn, lipschitz_k=strike + cap,
                  strike=strike, cap=cap)


def custom(xs: np.ndarray, hs: np.ndarray) -> Payoff:
    """Tabulated payoff, linearly interpolated and clamped at the ends.

    The Lipschitz constant is read off the table slopes.
    """
    xs = np.asarray(xs, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if xs.ndim != 1 or xs.shape != hs.shape or xs.size < 2:
        raise DomainError("custom payoff needs matching 1-d tables")
    if np.any(np.diff(xs) <= 0):
        raise DomainError("custom payoff abscissae must be increasing")
    if np.any(hs < 0):
        raise DomainError("payoff values must be nonnegative")
    k = float(np.max(np.abs(np.diff(hs) / np.diff(xs))))

    def fn(x):
        return np.interp(x, xs, hs)

    return Payoff("custom", fn, lipschitz_k=k)
