"""Certified quadrature for the nonlocal jump term of the generator.

The jump integral is split at a small cutoff xi: on (0, xi] a
second-order Taylor expansion reduces the integrand to second-moment
terms; on [xi, z_max] Gauss-Legendre panels integrate the kernel
directly; beyond z_max the tail mass is certified below a tolerance.
For finite-activity kernels xi = 0 and only the direct part remains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import IntegrationError
from .kernels import LevyKernel, NullKernel

__all__ = ["JumpQuadrature", "build_quadrature"]

#: default tolerance on the neglected tail mass of (1 + z) W(dz)
DEFAULT_TAIL_TOL = 1e-8

#: required accuracy of the node/weight reproduction of mass and mean
MOMENT_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class JumpQuadrature:
    """Nodes/weights for the direct part plus small-jump moments."""

    xi: float
    z_max: float
    nodes: np.ndarray
    weights: np.ndarray
    mass: float          # integral of W over [xi, z_max]
    m1: float            # integral of z W(dz) over [xi, z_max]
    small_m1: float      # integral of z W(dz) over (0, xi]
    small_m2: float      # integral of z^2 W(dz) over (0, xi]
    tail_mass: float     # certified bound on int_{z_max}^inf (1+z) W(dz)

    @property
    def is_empty(self) -> bool:
        return self.nodes.size == 0


def _tail_integral(kernel: LevyKernel, z: float) -> float:
    hi = kernel.quad_cutoff(0.0, 1e-16)
    if z >= hi:
        return 0.0
    val, _ = quad(lambda s: (1.0 + s) * kernel.density(s), z, hi,
                  epsabs=1e-16, epsrel=1e-10, limit=400)
    return val


def _panel_edges(xi: float, z_max: float, n_panels: int) -> np.ndarray:
    if xi > 0:
        return np.geomspace(xi, z_max, n_panels + 1)
    # smooth at the origin: geometric refinement toward zero with a
    # closing panel [0, z_max * 2^-n]
    edges = z_max * 2.0 ** -np.arange(n_panels, -1, -1.0)
    return np.concatenate(([0.0], edges))


def build_quadrature(kernel: LevyKernel, xi: float = None,
                     tail_tol: float = DEFAULT_TAIL_TOL,
                     n_panels: int = 16, order: int = 8) -> JumpQuadrature:
    """Construct and certify a quadrature for the given kernel.

    xi defaults to 0 for finite-activity kernels and 1e-3 otherwise.
    Raises IntegrationError if, even after one refinement, the weights
    fail to reproduce the mass and first moment to the matching
    tolerance.
    """
    if isinstance(kernel, NullKernel) or kernel.jump_rate(1.0) == 0.0 \
            and kernel.moment(1) == 0.0:
        z = np.empty(0)
        return JumpQuadrature(0.0, 0.0, z, z, 0.0, 0.0, 0.0, 0.0, 0.0)
    if xi is None:
        xi = 0.0 if kernel.finite_activity else 1e-3

    # truncation point by doubling until the certified tail is small
    z_max = 1.0
    while _tail_integral(kernel, z_max) >= tail_tol:
        z_max *= 2.0
        if z_max > 1e9:
            raise IntegrationError("tail mass does not decay; bad kernel")
    tail = _tail_integral(kernel, z_max)

    target_mass = kernel.partial_moment(0, max(xi, 0.0), z_max) \
        if xi > 0 else kernel.partial_moment(0, 0.0, z_max)
    target_m1 = kernel.partial_moment(1, xi, z_max)

    for panels in (n_panels, 4 * n_panels):
        edges = _panel_edges(xi, z_max, panels)
        gl_x, gl_w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * gl_x[None, :]).ravel()
        weights = (half[:, None] * gl_w[None, :]).ravel() \
            * kernel.density(nodes)
        mass = float(weights.sum())
        m1 = float((weights * nodes).sum())
        if (abs(mass - target_mass) <= MOMENT_MATCH_TOL * max(1.0, target_mass)
                and abs(m1 - target_m1) <= MOMENT_MATCH_TOL * max(1.0, target_m1)):
            break
    else:
        raise IntegrationError(
            "quadrature failed the moment-matched certification")

    small_m1 = kernel.partial_moment(1, 0.0, xi) if xi > 0 else 0.0
    small_m2 = kernel.partial_moment(2, 0.0, xi) if xi > 0 else 0.0
    return JumpQuadrature(xi, z_max, nodes, weights, mass, m1,
                          small_m1, small_m2, tail)
