"""Lognormal closed forms used as degenerate-model oracles."""
from __future__ import annotations

import math

from scipy.stats import norm

__all__ = ["bs_put", "bs_put_total_variance"]


def bs_put(spot: float, strike: float, r: float, t: float,
           sigma: float) -> float:
    """European put under geometric Brownian motion."""
    return bs_put_total_variance(spot, strike, r, t, sigma * sigma * t)


def bs_put_total_variance(spot: float, strike: float, r: float, t: float,
                          total_var: float) -> float:
    """European put for a lognormal terminal price with the given total
    log variance; the degenerate-kernel model lands here exactly."""
    disc = math.exp(-r * t)
    if total_var <= 0.0:
        return max(strike * disc - spot, 0.0)
    sq = math.sqrt(total_var)
    d1 = (math.log(spot / strike) + r * t + 0.5 * total_var) / sq
    d2 = d1 - sq
    return strike * disc * norm.cdf(-d2) - spot * norm.cdf(-d1)
