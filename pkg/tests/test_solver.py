import math

import numpy as np
import pytest

from bnsprice import (GammaOU, Grid, IDENTITY_TILT, ModelParams, NullKernel,
                      SchemeOptions, epsilon_factor, exercise_boundary, put,
                      solve, solve_localized)
from bnsprice.blackscholes import bs_put_total_variance
from bnsprice.errors import DomainError, StabilityError
from bnsprice.solver import apply_generator
from bnsprice.verify import probe_value


PARAMS = ModelParams(lam=1.0, rho=-0.5, r=0.03, T=1.0)
PUT = put(1.0)
SMALL_GRID = Grid(-1.0, 1.0, 61, 0.0, 0.4, 17, 40)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(1.0, -1.0, 61, 0.0, 0.4, 17, 40)
    with pytest.raises(DomainError):
        Grid(-1.0, 1.0, 2, 0.0, 0.4, 17, 40)
    with pytest.raises(DomainError):
        Grid(-1.0, 1.0, 61, 0.5, 0.4, 17, 40)


def test_european_null_kernel_close_to_closed_form():
    grid = Grid(-1.2, 1.2, 101, 0.0, 0.08, 9, 60)
    surf = solve(grid, PARAMS, NullKernel(), IDENTITY_TILT, PUT,
                 european=True)
    v0 = 0.04
    got = probe_value(surf, 0.0, v0)
    target = bs_put_total_variance(1.0, 1.0, PARAMS.r, PARAMS.T,
                                   v0 * epsilon_factor(PARAMS.T, PARAMS.lam))
    assert got == pytest.approx(target, rel=2e-2)


def test_obstacle_dominance_and_mask():
    surf = solve(SMALL_GRID, PARAMS, GammaOU(1.0, 20.0), IDENTITY_TILT, PUT)
    h = PUT(SMALL_GRID.x_nodes)
    assert np.min(surf.u - h[None, :, None]) > -1e-6
    # deep in the money the obstacle binds at t = 0
    assert surf.exercise_mask[0, 2, 5]


def test_american_exceeds_european():
    k = GammaOU(1.0, 20.0)
    am = solve(SMALL_GRID, PARAMS, k, IDENTITY_TILT, PUT)
    eu = solve(SMALL_GRID, PARAMS, k, IDENTITY_TILT, PUT, european=True)
    assert probe_value(am, 0.0, 0.04) > probe_value(eu, 0.0, 0.04) - 1e-8


def test_penalty_agrees_with_psor():
    grid = Grid(-1.0, 1.0, 41, 0.0, 0.3, 9, 20)
    k = GammaOU(1.0, 20.0)
    pen = solve(grid, PARAMS, k, IDENTITY_TILT, PUT,
                SchemeOptions(obstacle="penalty"))
    sor = solve(grid, PARAMS, k, IDENTITY_TILT, PUT,
                SchemeOptions(obstacle="psor"))
    # the two obstacle treatments agree to discretization level
    assert np.max(np.abs(pen.u - sor.u)) < 2e-3


def test_stability_guard():
    grid = Grid(-1.0, 1.0, 41, 0.0, 1.0, 201, 5)
    with pytest.raises(StabilityError):
        solve(grid, ModelParams(lam=30.0, rho=-0.5, r=0.03, T=1.0),
              GammaOU(1.0, 20.0), IDENTITY_TILT, PUT,
              SchemeOptions(v_scheme="explicit-upwind"))


def test_exercise_boundary_shape():
    surf = solve(SMALL_GRID, PARAMS, GammaOU(1.0, 20.0), IDENTITY_TILT, PUT)
    bdry = exercise_boundary(surf)
    assert bdry.shape == (SMALL_GRID.n_t + 1, SMALL_GRID.n_v)
    # some interior boundary must exist and lie below the strike
    finite = bdry[np.isfinite(bdry)]
    assert finite.size > 0
    assert np.all(finite <= math.log(PUT.strike) + 1e-12)


def test_surface_extrapolation():
    surf = solve(SMALL_GRID, PARAMS, NullKernel(), IDENTITY_TILT, PUT)
    inside = surf.value(np.array([0.0]), np.array([0.04]), 0.0)
    assert np.isfinite(inside[0])
    # beyond x_max a put is worthless; extrapolation should stay near 0
    far = surf.value(np.array([1.5]), np.array([0.04]), 0.0)
    assert abs(far[0]) < 1e-6
    assert not surf.in_range(np.array([1.5]), np.array([0.04]))[0]


def test_localized_requires_positive_edge():
    with pytest.raises(DomainError):
        solve_localized(SMALL_GRID, PARAMS, NullKernel(), IDENTITY_TILT, PUT)


def test_localized_below_full():
    k = GammaOU(1.0, 20.0)
    full = solve(SMALL_GRID, PARAMS, k, IDENTITY_TILT, PUT)
    dv = SMALL_GRID.dv
    loc_grid = Grid(SMALL_GRID.x_min, SMALL_GRID.x_max, SMALL_GRID.n_x,
                    2 * dv, SMALL_GRID.v_max, SMALL_GRID.n_v - 2,
                    SMALL_GRID.n_t)
    loc = solve_localized(loc_grid, PARAMS, k, IDENTITY_TILT, PUT)
    assert np.max(loc.u - full.u[:, :, 2:]) < 1e-5


def test_generator_on_linear_function():
    # psi(x, v) = v annihilates the jump compensator exactly
    k = GammaOU(1.0, 2.0)
    got = apply_generator(lambda x, v: v, (0.0, 0.1), PARAMS, k,
                          IDENTITY_TILT)
    expected = -PARAMS.lam * (0.1 - k.moment(1))
    assert got == pytest.approx(expected, abs=1e-7)
