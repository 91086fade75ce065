import textwrap

import numpy as np
import pytest

from bnsprice import (GammaOU, Grid, IDENTITY_TILT, ModelParams, load_config,
                      put, run_suite, solve)
from bnsprice.errors import GridMismatch
from bnsprice.solver import SchemeOptions
from bnsprice.verify import (check_comparison, check_lipschitz_modulus,
                             check_oracle_agreement, fitted_modulus)


PARAMS = ModelParams(lam=1.0, rho=-0.5, r=0.03, T=1.0)
PUT = put(1.0)


@pytest.fixture(scope="module")
def small_surfaces():
    k = GammaOU(1.0, 20.0)
    fine = solve(Grid(-1.0, 1.0, 61, 0.0, 0.4, 17, 40), PARAMS, k,
                 IDENTITY_TILT, PUT)
    coarse = solve(Grid(-1.0, 1.0, 31, 0.0, 0.4, 9, 20), PARAMS, k,
                   IDENTITY_TILT, PUT)
    return fine, coarse


def test_oracle_agreement_report(small_surfaces):
    fine, coarse = small_surfaces
    mc_value = float(fine.value(np.array([0.0]), np.array([0.04]), 0.0)[0])
    rep = check_oracle_agreement(fine, coarse, mc_value, 1e-4, 0.0, 0.04)
    assert rep.status == "pass"
    assert rep.measured == 0.0
    rep = check_oracle_agreement(fine, coarse, mc_value + 1.0, 1e-4,
                                 0.0, 0.04)
    assert rep.status == "fail"


def test_lipschitz_report(small_surfaces):
    fine, coarse = small_surfaces
    rep = check_lipschitz_modulus(fine, coarse)
    assert rep.status == "pass"
    cx, cv = fitted_modulus(fine)
    assert 0 < cx <= PUT.lipschitz_k * 1.1
    assert cv > 0


def test_comparison_requires_matching_grids(small_surfaces):
    fine, coarse = small_surfaces
    with pytest.raises(GridMismatch):
        check_comparison(fine, coarse, 0.01)


def test_comparison_detects_violation(small_surfaces):
    fine, _ = small_surfaces
    k = GammaOU(1.0, 20.0)
    lifted = solve(fine.grid, PARAMS, k, IDENTITY_TILT, PUT,
                   SchemeOptions(boundary_lift=0.01))
    assert check_comparison(fine, lifted, 0.01).status == "pass"
    # an excessive lift must be flagged
    assert check_comparison(fine, lifted, 0.001).status == "fail"


CFG = textwrap.dedent("""
    [kernel]
    kind = %(kind)s
    %(shape)s

    [model]
    lambda = 1.0
    rho = -0.5
    r = 0.03
    t = 1.0
    x0 = 0.0
    v0 = 0.04

    [payoff]
    kind = put
    strike = 1.0

    [grid]
    x_min = -1.2
    x_max = 1.2
    n_x = 61
    v_max = 0.6
    n_v = 25
    n_t = 40

    [mc]
    n_paths = 10000
    n_dates = 20
    seed = 3
""")


@pytest.mark.slow
def test_run_suite_jump_kernel(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(CFG % {"kind": "gamma_ou", "shape": "a = 1.0\nb = 20.0"})
    reports = run_suite(load_config(str(p)))
    by_name = {r.name: r for r in reports}
    assert all(r.status in ("pass", "n/a") for r in reports), \
        [(r.name, r.measured, r.bound) for r in reports if r.status == "fail"]
    assert by_name["cumulant_quadrature"].status == "pass"
    assert by_name["oracle_agreement"].budget_stat > 0


@pytest.mark.slow
def test_run_suite_null_kernel(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(CFG % {"kind": "null", "shape": ""})
    reports = run_suite(load_config(str(p)))
    by_name = {r.name: r for r in reports}
    # jump-specific checks degrade to not-applicable, nothing fails
    assert by_name["cumulant_quadrature"].status == "n/a"
    assert by_name["kernel_conditions"].status == "n/a"
    assert all(r.status in ("pass", "n/a") for r in reports), \
        [(r.name, r.measured, r.bound) for r in reports if r.status == "fail"]
