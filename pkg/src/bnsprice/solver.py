"""Finite-difference solver for the obstacle integro-PDE.

Backward IMEX march from the terminal payoff: x-diffusion and x-drift
are implicit (tridiagonal per v-slice), the nonlocal jump term is
explicit, and the v-advection is either explicit first-order upwind or
an implicit (unconditionally stable) split step.  The obstacle is
enforced each step by a penalty update with a certified post-check;
projected SOR sweeps are available for cross-validation.

Displaced jump evaluations u(x + rho z, v + z) use bilinear
interpolation on the grid and linear extrapolation outside it, which is
consistent with the linear growth of the value function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import quad as _scipy_quad
from scipy.linalg import solve_banded

from .errors import (BoundaryNotFound, DomainError, NonConvergence,
                     StabilityError)
from .kernels import EmmTilt, IDENTITY_TILT, LevyKernel
from .model import ModelParams
from .payoff import Payoff
from .quadrature import JumpQuadrature, build_quadrature

__all__ = [
    "Grid",
    "SchemeOptions",
    "ValueSurface",
    "solve",
    "solve_localized",
    "exercise_boundary",
    "apply_generator",
    "generator_apply",
]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [x_min, x_max] x [v_lo, v_max] x [0, T]."""

    x_min: float
    x_max: float
    n_x: int
    v_lo: float
    v_max: float
    n_v: int
    n_t: int

    def __post_init__(self):
        if self.n_x < 4 or self.n_v < 4:
            raise DomainError("need at least 4 nodes per space direction")
        if self.n_t < 1:
            raise DomainError("need at least one time step")
        if not (self.x_min < self.x_max):
            raise DomainError("x_min must be below x_max")
        if not (0.0 <= self.v_lo < self.v_max):
            raise DomainError("need 0 <= v_lo < v_max")

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def v_nodes(self) -> np.ndarray:
        return np.linspace(self.v_lo, self.v_max, self.n_v)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_lo) / (self.n_v - 1)


@dataclass(frozen=True)
class SchemeOptions:
    """Numerical knobs of the time march."""

    obstacle: str = "penalty"            # "penalty" | "psor" | "none"
    penalty_param: Optional[float] = None  # default 1e6 * max(1, r)
    penalty_tolerance: float = 1e-6
    v_scheme: str = "implicit-central"   # | "explicit-upwind" | "implicit-upwind"
    rannacher_steps: int = 2
    stability_factor: float = 1.0
    xi: Optional[float] = None           # small-jump cutoff; kernel default
    tail_tol: float = 1e-8
    psor_omega: float = 1.4
    psor_tol: float = 1e-9
    psor_max_sweeps: int = 2000
    boundary_lift: float = 0.0           # raises terminal and edge data
    bind_tolerance: float = 1e-6

    def __post_init__(self):
        if self.obstacle not in ("penalty", "psor", "none"):
            raise DomainError(f"unknown obstacle mode {self.obstacle!r}")
        if self.v_scheme not in ("implicit-central", "explicit-upwind",
                                 "implicit-upwind"):
            raise DomainError(f"unknown v_scheme {self.v_scheme!r}")


class ValueSurface:
    """Solved value function on the grid, all time levels retained.

    ``u`` has shape (n_t + 1, n_x, n_v) with level m at time m * T / n_t.
    Queries off the (x, v) range use linear extrapolation; the time
    coordinate is clamped to [0, T].
    """

    def __init__(self, grid: Grid, params: ModelParams, payoff: Payoff,
                 u: np.ndarray, exercise_mask: np.ndarray,
                 diagnostics: dict):
        self.grid = grid
        self.params = params
        self.payoff = payoff
        self.u = u
        self.exercise_mask = exercise_mask
        self.diagnostics = diagnostics
        self.t_nodes = np.linspace(0.0, params.T, grid.n_t + 1)

    def _bilinear(self, level: np.ndarray, x, v):
        g = self.grid
        fx = (np.asarray(x, dtype=float) - g.x_min) / g.dx
        fv = (np.asarray(v, dtype=float) - g.v_lo) / g.dv
        i0 = np.clip(np.floor(fx).astype(int), 0, g.n_x - 2)
        j0 = np.clip(np.floor(fv).astype(int), 0, g.n_v - 2)
        wx = fx - i0   # outside [0, 1] beyond the grid: linear extrapolation
        wv = fv - j0
        return ((1 - wx) * (1 - wv) * level[i0, j0]
                + wx * (1 - wv) * level[i0 + 1, j0]
                + (1 - wx) * wv * level[i0, j0 + 1]
                + wx * wv * level[i0 + 1, j0 + 1])

    def value(self, x, v, t: float):
        """Trilinear evaluation of u(x, v, t)."""
        ft = np.clip(t / self.params.T, 0.0, 1.0) * self.grid.n_t
        m0 = int(min(math.floor(ft), self.grid.n_t - 1))
        wt = ft - m0
        lo = self._bilinear(self.u[m0], x, v)
        if wt == 0.0:
            return lo
        hi = self._bilinear(self.u[m0 + 1], x, v)
        return (1 - wt) * lo + wt * hi

    def in_range(self, x, v):
        g = self.grid
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return ((x >= g.x_min) & (x <= g.x_max)
                & (v >= g.v_lo) & (v <= g.v_max))


# -- jump-term machinery ----------------------------------------------------


def _pad_linear(U: np.ndarray, px: int, pv: int) -> np.ndarray:
    """Pad on the low-x and high-v sides by linear extrapolation."""
    nx, nv = U.shape
    out = np.empty((nx + px, nv + pv))
    out[px:, :nv] = U
    if px:
        steps = np.arange(px, 0, -1)[:, None]
        out[:px, :nv] = U[0] + steps * (U[0] - U[1])
    if pv:
        steps = np.arange(1, pv + 1)[None, :]
        col = out[:, nv - 1][:, None]
        slope = (out[:, nv - 1] - out[:, nv - 2])[:, None]
        out[:, nv:] = col + steps * slope
    return out


class _JumpOperator:
    """Precomputed displaced-evaluation stencil for one grid/kernel pair."""

    def __init__(self, grid: Grid, quad: JumpQuadrature, rho: float):
        self.grid = grid
        self.quad = quad
        self.rho = rho
        if quad.is_empty:
            self.px = self.pv = 0
            self.shifts = []
            return
        dx, dv = grid.dx, grid.dv
        sx = rho * quad.nodes / dx     # <= 0
        sv = quad.nodes / dv           # >= 0
        self.px = int(-math.floor(sx.min())) if sx.size else 0
        self.pv = int(math.floor(sv.max())) + 1 if sv.size else 0
        self.shifts = []
        for w, a, b in zip(quad.weights, sx, sv):
            f = int(math.floor(a))
            g = int(math.floor(b))
            self.shifts.append((w, f, a - f, g, b - g))
        # off-grid mass fraction per v-slice (targets above v_max)
        v = grid.v_nodes
        self.offgrid_fraction = np.array([
            quad.weights[quad.nodes > grid.v_max - vj].sum()
            / max(quad.mass, 1e-300) for vj in v])

    def __call__(self, U: np.ndarray) -> np.ndarray:
        """Integral of [U(x + rho z, v + z) - U - (rho z U_x + z U_v)] W(dz)
        over the direct range, plus the small-jump Taylor part."""
        q = self.quad
        if q.is_empty:
            return np.zeros_like(U)
        g = self.grid
        nx, nv = U.shape
        dx, dv = g.dx, g.dv
        Up = _pad_linear(U, self.px, self.pv)
        ux = np.gradient(U, dx, axis=0)
        uv = np.gradient(U, dv, axis=1)
        out = -q.mass * U - q.m1 * (self.rho * ux + uv)
        px = self.px
        for w, f, wx, gg, wv in self.shifts:
            i0 = px + f
            acc = (1 - wx) * (1 - wv) * Up[i0:i0 + nx, gg:gg + nv]
            if wx:
                acc += wx * (1 - wv) * Up[i0 + 1:i0 + 1 + nx, gg:gg + nv]
            if wv:
                acc += (1 - wx) * wv * Up[i0:i0 + nx, gg + 1:gg + 1 + nv]
            if wx and wv:
                acc += wx * wv * Up[i0 + 1:i0 + 1 + nx, gg + 1:gg + 1 + nv]
            out += w * acc
        if q.small_m2 > 0.0:
            uxx = (np.gradient(ux, dx, axis=0))
            uxv = np.gradient(ux, dv, axis=1)
            uvv = np.gradient(uv, dv, axis=1)
            out += 0.5 * q.small_m2 * (self.rho ** 2 * uxx
                                       + 2.0 * self.rho * uxv + uvv)
        return out


def _tilted_quadrature(quad: JumpQuadrature, kernel: LevyKernel,
                       tilt: EmmTilt) -> JumpQuadrature:
    """Reweight a certified quadrature by the tilt multiplier y(z)."""
    if tilt.is_identity:
        return quad
    w = quad.weights * tilt(quad.nodes)
    sm1, _ = _scipy_quad(lambda z: z * tilt(z) * kernel.density(z),
                         0.0, quad.xi) if quad.xi > 0 else (0.0, 0.0)
    sm2, _ = _scipy_quad(lambda z: z * z * tilt(z) * kernel.density(z),
                         0.0, quad.xi) if quad.xi > 0 else (0.0, 0.0)
    return replace(quad, weights=w, mass=float(w.sum()),
                   m1=float((w * quad.nodes).sum()),
                   small_m1=sm1, small_m2=sm2)


def _tilted_mu1(kernel: LevyKernel, tilt: EmmTilt,
                quad: JumpQuadrature) -> float:
    if tilt.is_identity:
        return kernel.moment(1)
    # direct-range and small-jump parts; certified tail is negligible
    return quad.m1 + quad.small_m1


# -- advection and tridiagonal helpers --------------------------------------


def _upwind_advection(U: np.ndarray, a: np.ndarray, dv: float) -> np.ndarray:
    """a(v) * U_v by first-order upwind differencing along v."""
    nv = U.shape[1]
    fwd = np.empty_like(U)
    fwd[:, :-1] = (U[:, 1:] - U[:, :-1]) / dv
    fwd[:, -1] = fwd[:, -2]
    bwd = np.empty_like(U)
    bwd[:, 1:] = (U[:, 1:] - U[:, :-1]) / dv
    bwd[:, 0] = bwd[:, 1]
    return np.where(a[None, :] > 0, a[None, :] * fwd, a[None, :] * bwd)


def _x_band(v: float, adv: float, dt_inv: float, r: float, dx: float,
            n: int) -> np.ndarray:
    """Banded matrix of the implicit x-step at one v-slice.

    Central differencing for the drift unless the cell Peclet number
    calls for upwinding (keeps the matrix an M-matrix when diffusion is
    weak)."""
    diff = 0.5 * v
    band = np.zeros((3, n))
    band[1, :] = dt_inv + r
    if 2.0 * diff >= abs(adv) * dx:
        lo = -diff / dx ** 2 + adv / (2.0 * dx)
        up = -diff / dx ** 2 - adv / (2.0 * dx)
        di = 2.0 * diff / dx ** 2
    elif adv > 0:
        lo = -diff / dx ** 2
        up = -diff / dx ** 2 - adv / dx
        di = 2.0 * diff / dx ** 2 + adv / dx
    else:
        lo = -diff / dx ** 2 + adv / dx
        up = -diff / dx ** 2
        di = 2.0 * diff / dx ** 2 - adv / dx
    band[0, 2:] = up      # superdiagonal entries for rows 1..n-2
    band[1, 1:-1] += di
    band[2, :-2] = lo     # subdiagonal
    # Dirichlet rows at both x-ends
    band[1, 0] = 1.0
    band[1, -1] = 1.0
    band[0, 1] = 0.0
    band[2, -2] = 0.0
    return band


def _psor_slice(band: np.ndarray, rhs: np.ndarray, h: np.ndarray,
                u0: np.ndarray, omega: float, tol: float,
                max_sweeps: int) -> np.ndarray:
    """Projected SOR sweeps for one tridiagonal obstacle problem."""
    n = rhs.size
    up = band[0]
    di = band[1]
    lo = band[2]
    u = np.maximum(u0.copy(), h)
    for sweep in range(max_sweeps):
        err = 0.0
        for i in range(n):
            s = rhs[i]
            if i > 0:
                s -= lo[i - 1] * u[i - 1]
            if i < n - 1:
                s -= up[i + 1] * u[i + 1]
            new = max((1 - omega) * u[i] + omega * s / di[i], h[i])
            err = max(err, abs(new - u[i]))
            u[i] = new
        if err < tol:
            return u
    raise NonConvergence(
        f"projected SOR did not converge in {max_sweeps} sweeps")


# -- the solver -------------------------------------------------------------


def solve(grid: Grid, params: ModelParams, kernel: LevyKernel,
          tilt: EmmTilt, payoff: Payoff,
          options: Optional[SchemeOptions] = None,
          quadrature: Optional[JumpQuadrature] = None,
          european: bool = False) -> ValueSurface:
    """Backward IMEX march for the obstacle problem (or, with
    ``european=True`` / obstacle "none", the unconstrained terminal-value
    problem used by the closed-form cross-checks)."""
    opts = options or SchemeOptions()
    if european:
        opts = replace(opts, obstacle="none")
    lam, rho, r, T = params.lam, params.rho, params.r, params.T
    x = grid.x_nodes
    v = grid.v_nodes
    dx, dv, nx, nv = grid.dx, grid.dv, grid.n_x, grid.n_v
    n_t = grid.n_t
    dt = T / n_t

    quad_ = quadrature or build_quadrature(kernel, xi=opts.xi,
                                           tail_tol=opts.tail_tol)
    quad_ = _tilted_quadrature(quad_, kernel, tilt)
    mu1 = _tilted_mu1(kernel, tilt, quad_)
    kappa_rho = kernel.tilted_cumulant(tilt, rho)
    jump_op = _JumpOperator(grid, quad_, rho)

    adv_v = -lam * (v - mu1)            # v-advection coefficient
    c_x = r - 0.5 * v - lam * kappa_rho + lam * rho * mu1

    explicit_bound = lam * quad_.mass
    if opts.v_scheme == "explicit-upwind":
        explicit_bound += float(np.max(np.abs(adv_v))) / dv
    if quad_.small_m2 > 0.0:
        explicit_bound += 0.5 * lam * quad_.small_m2 * (
            4.0 * rho ** 2 / dx ** 2 + 4.0 / dv ** 2
            + 4.0 * abs(rho) / (dx * dv))
    if dt * explicit_bound > opts.stability_factor:
        raise StabilityError(
            f"explicit-part bound {dt * explicit_bound:.3g} exceeds "
            f"{opts.stability_factor}; reduce the time step")

    h = payoff(x)
    lift = opts.boundary_lift
    h_term = h + lift
    rho_pen = opts.penalty_param
    if rho_pen is None:
        rho_pen = 1e6 * max(1.0, r)

    clamp_low_v = not european           # value equals payoff at the v-edge
    u = np.empty((n_t + 1, nx, nv))
    mask = np.zeros((n_t + 1, nx, nv), dtype=bool)
    u[n_t] = h_term[:, None]
    mask[n_t] = (h > 0.0)[:, None]

    # Dirichlet data at the x-ends, per remaining time to maturity
    def bc_values(s):
        if european and payoff.kind == "put":
            lo_bc = max(payoff.strike * math.exp(-r * s)
                        - math.exp(grid.x_min), 0.0)
            hi_bc = 0.0
        else:
            lo_bc = h[0]
            hi_bc = h[-1]
        return lo_bc + lift, hi_bc + lift

    # banded matrices of the implicit v-advection split step
    vband = None
    if opts.v_scheme in ("implicit-central", "implicit-upwind"):
        vband = np.zeros((3, nv))
        vband[1, :] = 1.0
        for j in range(1, nv - 1):
            a = adv_v[j] * dt
            if opts.v_scheme == "implicit-central" and 0 < j < nv - 1:
                vband[0, j + 1] += -a / (2.0 * dv)   # coef of u_{j+1}
                vband[2, j - 1] += a / (2.0 * dv)    # coef of u_{j-1}
            elif adv_v[j] > 0:
                vband[0, j + 1] += -a / dv
                vband[1, j] += a / dv
            else:
                vband[2, j - 1] += a / dv
                vband[1, j] += -a / dv
        j = nv - 1                        # one-sided at the top edge
        a = adv_v[j] * dt
        if adv_v[j] <= 0:
            vband[2, j - 1] += a / dv
            vband[1, j] += -a / dv

    xbands = {}

    def step(u_old, s_new, dt_step):
        dt_inv = 1.0 / dt_step
        expl = lam * jump_op(u_old)
        if opts.v_scheme == "explicit-upwind":
            expl += _upwind_advection(u_old, adv_v, dv)
        rhs_all = u_old * dt_inv + expl
        lo_bc, hi_bc = bc_values(s_new)
        u_new = np.empty_like(u_old)
        j_start = 1 if clamp_low_v else 0
        for j in range(j_start, nv):
            key = (j, dt_step)
            if key not in xbands:
                xbands[key] = _x_band(v[j], c_x[j], dt_inv, r, dx, nx)
            band = xbands[key]
            rhs = rhs_all[:, j].copy()
            rhs[0] = lo_bc
            rhs[-1] = hi_bc
            if opts.obstacle == "psor":
                u_new[:, j] = _psor_slice(band, rhs, h, u_old[:, j],
                                          opts.psor_omega, opts.psor_tol,
                                          opts.psor_max_sweeps)
            else:
                u_new[:, j] = solve_banded((1, 1), band, rhs)
        if clamp_low_v:
            u_new[:, 0] = h + lift
        if vband is not None:
            scale = dt_step / dt          # bands were built for dt
            vb = vband.copy()
            vb[0] *= scale
            vb[2] *= scale
            vb[1] = 1.0 + (vband[1] - 1.0) * scale
            u_new = solve_banded((1, 1), vb, u_new.T).T
            u_new[0, :] = lo_bc
            u_new[-1, :] = hi_bc
            if clamp_low_v:
                u_new[:, 0] = h + lift
        if opts.obstacle == "penalty":
            c = dt_step * rho_pen
            hh = h[:, None]
            low = u_new < hh
            u_new = np.where(low, (u_new + c * hh) / (1.0 + c), u_new)
        elif opts.obstacle == "psor":
            u_new = np.maximum(u_new, h[:, None])
        return u_new

    for m in range(n_t - 1, -1, -1):
        s_new = T - m * dt               # time to maturity of the new level
        u_old = u[m + 1]
        if n_t - 1 - m < opts.rannacher_steps:
            half = step(u_old, s_new - 0.5 * dt, 0.5 * dt)
            u_new = step(half, s_new, 0.5 * dt)
        else:
            u_new = step(u_old, s_new, dt)
        u[m] = u_new
        if opts.obstacle != "none":
            mask[m] = (h[:, None] - u_new) >= -opts.bind_tolerance
            mask[m] &= h[:, None] > 0.0

    penalty_gap = float(np.max(h[:, None] - u[:-1])) \
        if opts.obstacle != "none" else 0.0
    if opts.obstacle == "penalty" and penalty_gap > opts.penalty_tolerance:
        raise NonConvergence(
            f"penalty post-check failed: max(h - u) = {penalty_gap:.3e}")
    diagnostics = {
        "penalty_gap": penalty_gap,
        "offgrid_mass_fraction": jump_op.offgrid_fraction
        if not quad_.is_empty else np.zeros(nv),
        "quad_mass": quad_.mass,
        "quad_tail": quad_.tail_mass,
        "explicit_bound": dt * explicit_bound,
    }
    return ValueSurface(grid, params, payoff, u, mask, diagnostics)


def solve_localized(grid: Grid, params: ModelParams, kernel: LevyKernel,
                    tilt: EmmTilt, payoff: Payoff,
                    options: Optional[SchemeOptions] = None,
                    quadrature: Optional[JumpQuadrature] = None
                    ) -> ValueSurface:
    """Solve on the localized domain v >= delta with the value clamped to
    the payoff at the lower edge; the full solution is recovered for
    v > delta * exp(lam T) as delta decreases."""
    if grid.v_lo <= 0.0:
        raise DomainError("localized solve needs a positive lower v-edge")
    return solve(grid, params, kernel, tilt, payoff, options, quadrature)


def exercise_boundary(surface: ValueSurface, strict: bool = False
                      ) -> np.ndarray:
    """Critical log-price per (t, v): the largest x where the obstacle
    binds, with linear interpolation of the premium between nodes.

    Entries are NaN where the obstacle never binds at that (t, v).  With
    ``strict`` a surface whose interior never binds raises
    BoundaryNotFound."""
    g = surface.grid
    x = g.x_nodes
    h = surface.payoff(x)
    out = np.full((g.n_t + 1, g.n_v), np.nan)
    for m in range(g.n_t + 1):
        gap = surface.u[m] - h[:, None]
        bound = surface.exercise_mask[m]
        for j in range(g.n_v):
            idx = np.flatnonzero(bound[:, j])
            if idx.size == 0:
                continue
            i = idx[-1]
            if i >= g.n_x - 1:
                out[m, j] = x[-1]
                continue
            g0, g1 = gap[i, j], gap[i + 1, j]
            if g1 > g0:
                out[m, j] = x[i] + g.dx * max(0.0, -g0) / (g1 - g0) \
                    if g1 != g0 else x[i]
            else:
                out[m, j] = x[i]
    if strict and np.all(np.isnan(out[:-1])):
        raise BoundaryNotFound("the obstacle never binds before maturity")
    return out


# -- generator evaluation ---------------------------------------------------


def generator_apply(U: np.ndarray, grid: Grid, params: ModelParams,
                    kernel: LevyKernel, tilt: EmmTilt = IDENTITY_TILT,
                    quadrature: Optional[JumpQuadrature] = None,
                    xi: Optional[float] = None) -> np.ndarray:
    """Discrete generator applied to a grid function, all terms explicit
    (central differences; upwind for the v-advection)."""
    lam, rho, r = params.lam, params.rho, params.r
    quad_ = quadrature or build_quadrature(kernel, xi=xi)
    quad_ = _tilted_quadrature(quad_, kernel, tilt)
    mu1 = _tilted_mu1(kernel, tilt, quad_)
    kappa_rho = kernel.tilted_cumulant(tilt, rho)
    v = grid.v_nodes
    dx, dv = grid.dx, grid.dv
    c_x = r - 0.5 * v - lam * kappa_rho + lam * rho * mu1
    ux = np.gradient(U, dx, axis=0)
    uxx = np.empty_like(U)
    uxx[1:-1] = (U[2:] - 2 * U[1:-1] + U[:-2]) / dx ** 2
    uxx[0] = uxx[1]
    uxx[-1] = uxx[-2]
    adv = _upwind_advection(U, -lam * (v - mu1), dv)
    jump = _JumpOperator(grid, quad_, rho)(U)
    return c_x[None, :] * ux + adv + 0.5 * v[None, :] * uxx + lam * jump


def apply_generator(psi: Union[Callable, np.ndarray], point, params: ModelParams,
                    kernel: LevyKernel, tilt: EmmTilt = IDENTITY_TILT,
                    quadrature: Optional[JumpQuadrature] = None,
                    grid: Optional[Grid] = None,
                    h_x: float = 1e-4, h_v: float = 1e-4) -> float:
    """Evaluate the generator on a test function at one (x, v) point.

    Callables are differentiated by central differences with steps
    (h_x, h_v) and evaluated exactly at the displaced jump targets;
    grid arrays go through the discrete operator and are read at the
    nearest node.
    """
    x0, v0 = float(point[0]), float(point[1])
    if isinstance(psi, np.ndarray):
        if grid is None:
            raise DomainError("grid required for array test functions")
        full = generator_apply(psi, grid, params, kernel, tilt, quadrature)
        i = int(round((x0 - grid.x_min) / grid.dx))
        j = int(round((v0 - grid.v_lo) / grid.dv))
        return float(full[i, j])

    lam, rho, r = params.lam, params.rho, params.r
    quad_ = quadrature or build_quadrature(kernel)
    quad_ = _tilted_quadrature(quad_, kernel, tilt)
    mu1 = _tilted_mu1(kernel, tilt, quad_)
    kappa_rho = kernel.tilted_cumulant(tilt, rho)

    f = lambda a, b: float(psi(a, b))
    fx = (f(x0 + h_x, v0) - f(x0 - h_x, v0)) / (2 * h_x)
    fv = (f(x0, v0 + h_v) - f(x0, v0 - h_v)) / (2 * h_v)
    fxx = (f(x0 + h_x, v0) - 2 * f(x0, v0) + f(x0 - h_x, v0)) / h_x ** 2
    base = f(x0, v0)
    jump = 0.0
    if not quad_.is_empty:
        disp = np.array([f(x0 + rho * z, v0 + z) for z in quad_.nodes])
        jump = float((quad_.weights * disp).sum()) - quad_.mass * base \
            - quad_.m1 * (rho * fx + fv)
        if quad_.small_m2 > 0.0:
            fvv = (f(x0, v0 + h_v) - 2 * base + f(x0, v0 - h_v)) / h_v ** 2
            fxv = (f(x0 + h_x, v0 + h_v) - f(x0 + h_x, v0 - h_v)
                   - f(x0 - h_x, v0 + h_v) + f(x0 - h_x, v0 - h_v)) \
                / (4 * h_x * h_v)
            jump += 0.5 * quad_.small_m2 * (rho ** 2 * fxx
                                            + 2 * rho * fxv + fvv)
    c_x = r - 0.5 * v0 - lam * kappa_rho + lam * rho * mu1
    return (c_x * fx - lam * (v0 - mu1) * fv + 0.5 * v0 * fxx + lam * jump)
