"""Run configuration: INI-style sections, strictly validated.

Sections: kernel, model, payoff, grid, mc, output, runtime and the
optional solver section.  Unknown sections or keys are rejected so a
typo cannot silently fall back to a default.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Optional

from .dynamics import z_horizon_quantile
from .errors import ConfigError
from .kernels import GammaOU, InverseGaussianOU, LevyKernel, NullKernel
from .model import ModelParams
from .payoff import Payoff, capped_call, put
from .solver import Grid, SchemeOptions

__all__ = ["RunConfig", "load_config"]

_KNOWN_KEYS = {
    "kernel": {"kind", "a", "b"},
    "model": {"lambda", "rho", "r", "t", "x0", "v0", "mu", "beta"},
    "payoff": {"kind", "strike", "cap"},
    "grid": {"x_min", "x_max", "n_x", "v_max", "n_v", "n_t", "delta"},
    "mc": {"n_paths", "n_dates", "seed"},
    "output": {"dir"},
    "runtime": {"threads"},
    "solver": {"obstacle", "v_scheme", "xi", "penalty_tolerance",
               "rannacher_steps"},
}


@dataclass
class RunConfig:
    kernel: LevyKernel
    params: ModelParams
    payoff: Payoff
    grid: Grid
    x0: float
    v0: float
    n_paths: int
    n_dates: int
    seed: int
    out_dir: str
    delta: Optional[float] = None      # localized lower v-edge, if any
    threads: int = 1
    scheme: SchemeOptions = field(default_factory=SchemeOptions)
    #: physical-measure drift constants, documentation only: pricing is
    #: entirely under the martingale measure, but they determine the
    #: Girsanov drift of the Brownian motion reported by cmd_simulate
    mu: float = 0.0
    beta: float = 0.0


def _require(parser, section: str, key: str):
    if not parser.has_option(section, key):
        raise ConfigError(f"missing key {section}.{key}")
    return parser.get(section, key)


def _get_float(parser, section, key, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing key {section}.{key}")
        return default
    try:
        return parser.getfloat(section, key)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key} must be a number") from exc


def _get_int(parser, section, key, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing key {section}.{key}")
        return default
    try:
        return parser.getint(section, key)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key} must be an integer") from exc


def _build_kernel(parser) -> LevyKernel:
    kind = _require(parser, "kernel", "kind").strip().lower()
    if kind == "null":
        return NullKernel()
    a = _get_float(parser, "kernel", "a")
    b = _get_float(parser, "kernel", "b")
    if kind == "gamma_ou":
        return GammaOU(a, b)
    if kind == "ig_ou":
        return InverseGaussianOU(a, b)
    raise ConfigError(f"unknown kernel.kind {kind!r}")


def _build_payoff(parser) -> Payoff:
    kind = _require(parser, "payoff", "kind").strip().lower()
    if kind == "put":
        return put(_get_float(parser, "payoff", "strike"))
    if kind == "capped_call":
        return capped_call(_get_float(parser, "payoff", "strike"),
                           _get_float(parser, "payoff", "cap"))
    raise ConfigError(f"unknown payoff.kind {kind!r}")


def load_config(path: str) -> RunConfig:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    kernel = _build_kernel(parser)
    params = ModelParams(
        lam=_get_float(parser, "model", "lambda"),
        rho=_get_float(parser, "model", "rho"),
        r=_get_float(parser, "model", "r"),
        T=_get_float(parser, "model", "t"),
    )
    payoff = _build_payoff(parser)
    x0 = _get_float(parser, "model", "x0")
    v0 = _get_float(parser, "model", "v0")

    delta = None
    if parser.has_option("grid", "delta"):
        delta = _get_float(parser, "grid", "delta")
        if delta <= 0:
            raise ConfigError("grid.delta must be positive when present")
    if parser.has_option("grid", "v_max"):
        v_max = _get_float(parser, "grid", "v_max")
    else:
        # jump headroom: start variance plus the far quantile of the
        # subordinator over the horizon
        v_max = v0 + 1.25 * z_horizon_quantile(kernel, params, 0.999)
        v_max = max(v_max, 4.0 * v0, 0.05)
    grid = Grid(
        x_min=_get_float(parser, "grid", "x_min"),
        x_max=_get_float(parser, "grid", "x_max"),
        n_x=_get_int(parser, "grid", "n_x"),
        v_lo=0.0,
        v_max=v_max,
        n_v=_get_int(parser, "grid", "n_v"),
        n_t=_get_int(parser, "grid", "n_t"),
    )
    if payoff.kind == "put" and not \
            (grid.x_min < math.log(payoff.strike) < grid.x_max):
        raise ConfigError("the strike's log-price must lie inside the x-grid")

    scheme = SchemeOptions(
        obstacle=parser.get("solver", "obstacle", fallback="penalty"),
        v_scheme=parser.get("solver", "v_scheme",
                            fallback="implicit-central"),
        xi=_get_float(parser, "solver", "xi", default=-1.0),
        penalty_tolerance=_get_float(parser, "solver", "penalty_tolerance",
                                     default=1e-6),
        rannacher_steps=_get_int(parser, "solver", "rannacher_steps",
                                 default=2),
    ) if parser.has_section("solver") else SchemeOptions()
    if scheme.xi is not None and scheme.xi < 0:
        scheme = SchemeOptions(**{**scheme.__dict__, "xi": None})

    return RunConfig(
        kernel=kernel,
        params=params,
        payoff=payoff,
        grid=grid,
        x0=x0,
        v0=v0,
        n_paths=_get_int(parser, "mc", "n_paths", default=100000),
        n_dates=_get_int(parser, "mc", "n_dates", default=50),
        seed=_get_int(parser, "mc", "seed", default=1),
        out_dir=parser.get("output", "dir", fallback="."),
        delta=delta,
        threads=_get_int(parser, "runtime", "threads", default=1),
        scheme=scheme,
        mu=_get_float(parser, "model", "mu", default=0.0),
        beta=_get_float(parser, "model", "beta", default=0.0),
    )
