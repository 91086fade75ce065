"""Acceptance suite: one test per criterion, each printing a single
PASS/FAIL line (visible with pytest -s; pytest -v shows the same verdict
through the test outcome)."""
import math

import numpy as np
import pytest

from bnsprice import (GammaOU, Grid, IDENTITY_TILT, ModelParams, NullKernel,
                      apply_generator, epsilon_factor, price_american,
                      price_european, put, simulate_paths, solve,
                      solve_localized)
from bnsprice.blackscholes import bs_put_total_variance
from bnsprice.mc import check_dpp
from bnsprice.solver import SchemeOptions
from bnsprice.verify import (check_comparison, fitted_modulus, probe_value,
                             richardson_increment)

pytestmark = pytest.mark.slow

PUT = put(1.0)
PARAMS = ModelParams(lam=1.0, rho=-0.5, r=0.03, T=1.0)
X0, V0 = 0.0, 0.04

# the reference American configuration shared by several criteria
KERNEL = GammaOU(1.0, 20.0)
FINE_GRID = Grid(-1.2, 1.2, 201, 0.0, 0.75, 101, 200)
COARSE_GRID = Grid(-1.2, 1.2, 101, 0.0, 0.75, 51, 100)


def report(n, ok, detail):
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def fine_surface():
    return solve(FINE_GRID, PARAMS, KERNEL, IDENTITY_TILT, PUT)


@pytest.fixture(scope="module")
def coarse_surface():
    return solve(COARSE_GRID, PARAMS, KERNEL, IDENTITY_TILT, PUT)


def test_criterion_01_degenerate_closed_form():
    grid = Grid(-1.2, 1.2, 201, 0.0, 0.08, 11, 200)
    surf = solve(grid, PARAMS, NullKernel(), IDENTITY_TILT, PUT,
                 european=True)
    target = bs_put_total_variance(1.0, 1.0, PARAMS.r, PARAMS.T,
                                   V0 * epsilon_factor(PARAMS.T, PARAMS.lam))
    rel = abs(probe_value(surf, X0, V0) - target) / target
    est = price_european(X0, V0, PARAMS, NullKernel(), IDENTITY_TILT, PUT,
                         100000, 101)
    mc_gap = abs(est.value - target)
    ok = rel <= 5e-3 and mc_gap <= 3 * est.std_error
    report(1, ok, f"grid rel err {rel:.2e} (<= 5e-3), "
                  f"mc gap {mc_gap:.2e} vs 3 s.e. {3 * est.std_error:.2e}")


def test_criterion_02_cumulant_consistency():
    k = GammaOU(1.0, 2.0)
    worst_q = max(abs(k.cumulant(t) - k.cumulant_quadrature(t))
                  for t in (-2.0, -1.0, -0.5, 0.5, 1.0, 1.9))
    n = 100000
    _, _, _, Z = simulate_paths(k, ModelParams(1.0, -0.5, 0.03, 1.0),
                                0.0, 0.0, np.array([0.0, 1.0]), n, 102)
    worst_mc = -math.inf
    for t in (-2.0, -1.0, -0.5, 0.5, 1.0):
        s = np.exp(t * Z[:, 1])
        se = s.std(ddof=1) / math.sqrt(n)
        worst_mc = max(worst_mc,
                       abs(math.log(s.mean()) - k.cumulant(t))
                       - 3 * se / s.mean())
    ok = worst_q <= 1e-9 and worst_mc <= 0.0
    report(2, ok, f"quadrature gap {worst_q:.2e} (<= 1e-9), "
                  f"mc excess over 3 s.e. {worst_mc:.2e} (<= 0)")


def test_criterion_03_path_identity():
    times = np.linspace(0.0, 1.0, 101)
    V, Vs, _, Z = simulate_paths(GammaOU(1.0, 2.0), PARAMS, X0, V0, times,
                                 10000, 103)
    res = float(np.max(np.abs(PARAMS.lam * Vs - (V0 - V + Z))))
    report(3, res <= 1e-10, f"max identity residual {res:.2e} (<= 1e-10)")


def test_criterion_04_martingale():
    n = 200000
    _, _, X, _ = simulate_paths(GammaOU(1.0, 2.0), PARAMS, X0, V0,
                                np.array([0.0, 1.0]), n, 104)
    s = np.exp(-PARAMS.r * PARAMS.T + X[:, 1])
    se = s.std(ddof=1) / math.sqrt(n)
    gap = abs(s.mean() - math.exp(X0))
    report(4, gap <= 3 * se,
           f"|mean - 1| = {gap:.2e} vs 3 s.e. {3 * se:.2e}")


def test_criterion_05_obstacle_dominance(fine_surface):
    h = PUT(FINE_GRID.x_nodes)
    worst = float(np.min(fine_surface.u - h[None, :, None]))
    report(5, worst >= -1e-6, f"min(u - h) = {worst:.2e} (>= -1e-6)")


def test_criterion_06_oracle_agreement(fine_surface, coarse_surface):
    grid_val = probe_value(fine_surface, X0, V0)
    # three-grid ladder gives the observed order and with it the
    # Richardson error estimate for the fine solution
    coarser = solve(Grid(-1.2, 1.2, 51, 0.0, 0.75, 26, 50), PARAMS, KERNEL,
                    IDENTITY_TILT, PUT)
    inc_cm = probe_value(coarse_surface, X0, V0) \
        - probe_value(coarser, X0, V0)
    inc_fc = grid_val - probe_value(coarse_surface, X0, V0)
    order = math.log2(abs(inc_cm / inc_fc))
    grid_err = abs(inc_fc) / (2.0 ** order - 1.0)
    est, _ = price_american(X0, V0, PARAMS, KERNEL, IDENTITY_TILT, PUT,
                            200000, 100, 106, control_variate=True)
    gap = abs(grid_val - est.value)
    budget = 3 * est.std_error + grid_err
    ok = gap <= budget and budget <= 0.01 * grid_val
    report(6, ok, f"|ipde - lsmc| = {gap:.2e} vs budget {budget:.2e} "
                  f"(3 s.e. {3 * est.std_error:.2e} + grid {grid_err:.2e}, "
                  f"order {order:.2f}); "
                  f"budget/value = {budget / grid_val:.4f} (<= 0.01)")


def test_criterion_07_comparison_principle():
    grid = Grid(-1.2, 1.2, 101, 0.0, 0.75, 51, 100)
    base = solve(grid, PARAMS, KERNEL, IDENTITY_TILT, PUT)
    lifted = solve(grid, PARAMS, KERNEL, IDENTITY_TILT, PUT,
                   SchemeOptions(boundary_lift=0.01))
    rep = check_comparison(base, lifted, 0.01, tolerance=1e-6)
    report(7, rep.status == "pass",
           f"worst excess over eps e^(r(T-t)) = {rep.measured:.2e} "
           f"(<= 1e-6)")


def test_criterion_08_localization():
    # the monotone (upwind) v-scheme is the right tool for ordering
    # statements; dv = 0.0025 so every delta sits on a v-node
    opts = SchemeOptions(v_scheme="implicit-upwind")
    grid = Grid(-1.0, 1.0, 101, 0.0, 0.25, 101, 100)
    full = solve(grid, PARAMS, KERNEL, IDENTITY_TILT, PUT, opts)
    # two-grid tolerance: resolution uncertainty of u itself over the
    # widest comparison region
    half = solve(Grid(-1.0, 1.0, 51, 0.0, 0.25, 51, 50), PARAMS, KERNEL,
                 IDENTITY_TILT, PUT, opts)
    region = grid.v_nodes > 0.0025 * math.exp(PARAMS.lam * PARAMS.T)
    xg, vg = np.meshgrid(grid.x_nodes, grid.v_nodes[region], indexing="ij")
    two_grid = max(
        float(np.max(np.abs(
            full.u[m][:, region]
            - half._bilinear(half.u[m // 2], xg, vg))))
        for m in range(0, grid.n_t + 1, 2))
    tol = 1e-5
    worst_dom = -math.inf
    worst_agree = -math.inf
    probes = []
    for delta in (0.01, 0.005, 0.0025):
        j0 = int(round(delta / grid.dv))
        loc_grid = Grid(grid.x_min, grid.x_max, grid.n_x, delta,
                        grid.v_max, grid.n_v - j0, grid.n_t)
        loc = solve_localized(loc_grid, PARAMS, KERNEL, IDENTITY_TILT, PUT,
                              opts)
        worst_dom = max(worst_dom, float(np.max(loc.u - full.u[:, :, j0:])))
        v_safe = delta * math.exp(PARAMS.lam * PARAMS.T)
        j_safe = j0 + int(math.ceil((v_safe - delta) / grid.dv)) + 1
        worst_agree = max(worst_agree, float(np.max(np.abs(
            loc.u[:, :, j_safe - j0:] - full.u[:, :, j_safe:]))))
        probes.append(probe_value(loc, X0, 0.04))
    monotone = all(b >= a - tol for a, b in zip(probes, probes[1:]))
    ok = worst_dom <= tol and worst_agree <= two_grid and monotone
    report(8, ok, f"max(u_delta - u) = {worst_dom:.2e} (<= {tol:g}), "
                  f"agreement gap {worst_agree:.2e} vs two-grid tolerance "
                  f"{two_grid:.2e}, probes {[f'{p:.6f}' for p in probes]} "
                  f"monotone={monotone}")


def test_criterion_09_continuity_modulus(fine_surface, coarse_surface):
    cx_f, cv_f = fitted_modulus(fine_surface)
    cx_c, cv_c = fitted_modulus(coarse_surface)
    c_f, c_c = max(cx_f, cv_f), max(cx_c, cv_c)
    drift = abs(c_f - c_c) / c_c
    report(9, drift <= 0.2,
           f"modulus {c_c:.4f} -> {c_f:.4f}, drift {drift:.1%} (<= 20%)")


def test_criterion_10_dpp_residual(fine_surface):
    eps = 0.05 * PUT.strike
    worst = -math.inf
    details = []
    for i, (px, pv) in enumerate([(0.0, 0.04), (-0.1, 0.04), (0.0, 0.08)]):
        res = check_dpp(fine_surface, KERNEL, PARAMS, px, pv, 0.0, eps,
                        20000, 110 + i)
        excess = abs(res.residual) - 3 * res.std_error
        worst = max(worst, excess)
        details.append(f"({px:g},{pv:g}): {res.residual:.2e}"
                       f"+-{res.std_error:.2e}")
    report(10, worst <= 0.0,
           "residuals " + ", ".join(details) + f"; worst excess {worst:.2e}")


def test_criterion_11_generator_sanity():
    k = GammaOU(1.0, 2.0)
    lam, rho, r = PARAMS.lam, PARAMS.rho, PARAMS.r
    mu1, mu2 = k.moment(1), k.moment(2)
    kap = k.cumulant(rho)
    x0, v0 = 0.1, 0.2
    c_x = r - 0.5 * v0 - lam * kap + lam * rho * mu1
    cases = [
        (lambda x, v: 1.0, 0.0),
        (lambda x, v: x, c_x),
        (lambda x, v: v, -lam * (v0 - mu1)),
        (lambda x, v: x * x, 2 * x0 * c_x + v0 + lam * rho ** 2 * mu2),
    ]
    worst = -math.inf
    for psi, target in cases:
        errs = [abs(apply_generator(psi, (x0, v0), PARAMS, k, IDENTITY_TILT,
                                    h_x=h, h_v=h) - target)
                for h in (1e-3, 5e-4)]
        scale = 1e-6 * max(1.0, abs(target))
        # the finer step must be at least as accurate, both within budget
        worst = max(worst, errs[1] - max(errs[0], scale),
                    errs[1] - scale)
    report(11, worst <= 0.0,
           f"worst excess over first-order budget {worst:.2e} (<= 0)")


def test_criterion_12_no_early_exercise_at_zero_rate():
    params0 = ModelParams(PARAMS.lam, PARAMS.rho, 0.0, PARAMS.T)
    grid = Grid(-1.2, 1.2, 101, 0.0, 0.6, 51, 100)
    am = solve(grid, params0, KERNEL, IDENTITY_TILT, PUT)
    eu = solve(grid, params0, KERNEL, IDENTITY_TILT, PUT, european=True)
    gap = abs(probe_value(am, X0, V0) - probe_value(eu, X0, V0))
    coarse = solve(Grid(-1.2, 1.2, 51, 0.0, 0.6, 26, 50), params0, KERNEL,
                   IDENTITY_TILT, PUT)
    budget = richardson_increment(am, coarse, X0, V0) + 1e-5
    # the obstacle must not bind where the continuation premium is even
    # resolvable: deep in the money the European premium itself is below
    # the bind tolerance, so restrict to nodes with a measurable premium
    h = PUT(grid.x_nodes)
    resolvable = (eu.u - h[None, :, None]) > 1e-6
    interior = am.exercise_mask[:-1, 5:-5, 1:] & resolvable[:-1, 5:-5, 1:]
    ok = gap <= budget and not interior.any()
    report(12, ok, f"|american - european| = {gap:.2e} vs budget "
                   f"{budget:.2e}; interior binds: {int(interior.sum())}")
