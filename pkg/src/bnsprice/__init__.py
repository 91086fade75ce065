"""American option pricing under an OU-type stochastic volatility model
with a subordinator-driven variance process.

The package pairs a finite-difference solver for the obstacle
integro-PDE with an exact-path Monte Carlo oracle and a suite of
numerical checks derived from the model's structural properties.
"""
from .kernels import (EmmTilt, GammaOU, IDENTITY_TILT, InverseGaussianOU,
                      LevyKernel, NullKernel, validate_conditions)
from .model import ModelParams, epsilon_factor
from .payoff import Payoff, capped_call, custom, put
from .dynamics import (PathSample, sample_path, simulate_bdlp,
                       simulate_paths, z_horizon_quantile)
from .mc import McEstimate, StoppingRule, check_dpp, price_american, \
    price_european
from .quadrature import JumpQuadrature, build_quadrature
from .solver import (Grid, SchemeOptions, ValueSurface, apply_generator,
                     exercise_boundary, solve, solve_localized)
from .config import RunConfig, load_config
from .verify import (CheckReport, check_comparison, check_lipschitz_modulus,
                     check_minimality, check_oracle_agreement, run_suite)

__version__ = "0.1.0"
