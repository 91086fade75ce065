import pytest

from bnsprice import GammaOU, InverseGaussianOU, NullKernel, build_quadrature


def test_gamma_quadrature_moments():
    k = GammaOU(1.0, 2.0)
    q = build_quadrature(k)
    assert q.xi == 0.0
    # nodes/weights reproduce the truncated mass and first moment
    assert q.mass == pytest.approx(k.partial_moment(0, 0.0, q.z_max),
                                   rel=1e-9)
    assert q.m1 == pytest.approx(k.partial_moment(1, 0.0, q.z_max),
                                 rel=1e-9)
    assert q.tail_mass < 1e-8
    # nearly all of mu_1 is captured
    assert q.m1 == pytest.approx(k.moment(1), abs=1e-8)


def test_inverse_gaussian_split():
    k = InverseGaussianOU(1.0, 2.0)
    q = build_quadrature(k)
    assert q.xi == pytest.approx(1e-3)
    assert q.small_m1 > 0
    assert q.small_m2 > 0
    assert q.small_m1 == pytest.approx(k.partial_moment(1, 0.0, q.xi),
                                       rel=1e-8)
    # split parts recombine into the full first moment
    assert q.small_m1 + q.m1 == pytest.approx(k.moment(1), abs=1e-7)


def test_explicit_cutoff():
    k = InverseGaussianOU(1.0, 2.0)
    q = build_quadrature(k, xi=1e-2)
    assert q.nodes.min() >= 1e-2
    assert q.small_m2 == pytest.approx(k.partial_moment(2, 0.0, 1e-2),
                                       rel=1e-8)


def test_null_kernel_empty():
    q = build_quadrature(NullKernel())
    assert q.is_empty
    assert q.mass == 0.0
