import math

import numpy as np
import pytest
from scipy import integrate, stats

from jacobi_ldp import levy, semigroup as sg
from jacobi_ldp.params import ConvergenceError, DomainError, JacobiParams, SeriesControl

P = JacobiParams(0.5, 0.8)


def test_stationary_density_is_shifted_beta():
    y = np.linspace(-0.95, 0.95, 9)
    ref = stats.beta(P.beta + 1, P.alpha + 1).pdf((1 + y) / 2) / 2
    np.testing.assert_allclose(sg.stationary_density(y, P), ref, rtol=1e-13)
    with pytest.raises(DomainError):
        sg.stationary_density(1.0, P)


def test_integrate_against_weight():
    assert sg.integrate_against_weight(lambda y: 1.0, P) == pytest.approx(1.0, abs=1e-12)
    mean = (P.beta - P.alpha) / (P.alpha + P.beta + 2)
    assert sg.integrate_against_weight(lambda y: y, P) == pytest.approx(mean, abs=1e-12)


def test_kernel_point_validation():
    with pytest.raises(DomainError):
        sg.KernelPoint(0.0, 0.1, 0.2)
    with pytest.raises(DomainError):
        sg.KernelPoint(1.0, 1.0, 0.2)


def test_spectral_relaxes_to_stationary():
    pt = sg.KernelPoint(25.0, 0.6, -0.3)
    assert sg.density_spectral(pt, P) == pytest.approx(sg.stationary_density(-0.3, P), rel=1e-12)


def test_spectral_truncation_guard():
    with pytest.raises(ConvergenceError):
        sg.density_spectral(sg.KernelPoint(1e-4, 0.1, 0.2), P, SeriesControl(max_terms=20))


def test_spectral_mean_decay():
    # E[Y_t | x] - mean decays like exp(-lambda_1 t)
    x, t = 0.4, 0.7
    m = integrate.quad(lambda y: y * sg.density_spectral(sg.KernelPoint(t, x, y), P), -1, 1,
                       epsabs=1e-12, limit=200)[0]
    mean = (P.beta - P.alpha) / (P.alpha + P.beta + 2)
    assert m - mean == pytest.approx((x - mean) * math.exp(-P.eigenvalue(1) * t), rel=1e-8)


@pytest.mark.parametrize("x,y", [(0.1, 0.3), (-0.7, 0.5), (0.8, 0.85), (0.0, -0.6)])
def test_density_routes_agree(x, y):
    for t in (0.6, 1.5):
        pt = sg.KernelPoint(t, x, y)
        ref = sg.density_spectral(pt, P)
        assert sg.density_convolution(pt, P) == pytest.approx(ref, rel=1e-7)
    u = JacobiParams(0.5, 0.5)
    pt = sg.KernelPoint(1.0, x, y)
    assert sg.density_ultraspherical(pt, 0.5) == pytest.approx(sg.density_spectral(pt, u), rel=1e-7)


def test_convolution_route_domain():
    with pytest.raises(DomainError):
        sg.density_convolution(sg.KernelPoint(1.0, 0.1, 0.1), JacobiParams(-0.8, -0.6))
    with pytest.raises(DomainError):
        sg.density_ultraspherical(sg.KernelPoint(1.0, 0.1, 0.1), -0.6)


def test_poisson_methods_agree():
    u = JacobiParams(0.3, 0.3)
    for r, x, y in [(0.2, 0.1, 0.4), (0.3, -0.5, 0.6), (0.15, 0.8, -0.3)]:
        d = sg.poisson_kernel(r, x, y, u, method="direct")
        assert sg.poisson_kernel(r, x, y, u, method="bailey") == pytest.approx(d, rel=1e-10)
        assert sg.poisson_kernel(r, x, y, u, method="f4") == pytest.approx(d, rel=1e-10)
    # near r = 1 the F4 arguments approach the edge of the region; the 2F1 reduction still works
    u_, v_ = sg.f4_arguments(0.9, 0.9, 0.9)
    assert math.sqrt(u_) + math.sqrt(v_) < 1
    assert sg.poisson_kernel(0.9, 0.9, 0.9, u, method="bailey") == pytest.approx(
        sg.poisson_kernel(0.9, 0.9, 0.9, u, method="direct"), rel=1e-9)
    with pytest.raises(DomainError):
        sg.poisson_kernel(0.3, 0.1, 0.1, P, method="bailey")
    with pytest.raises(ValueError):
        sg.poisson_kernel(0.3, 0.1, 0.1, P, method="nope")


def test_subordinated_kernel_is_poisson_kernel():
    x, y, t = 0.2, -0.4, 0.9
    ref = sg.stationary_density(y, P) * sg.poisson_kernel(math.exp(-t), x, y, P, method="direct")
    assert sg.subordinated_kernel(t, x, y, P) == pytest.approx(ref, rel=1e-10)


def test_subordinated_kernel_by_quadrature_over_clock():
    # integrate the transition density against the inverse Gaussian clock law
    x, y, t = 0.3, 0.1, 1.0
    ig = levy.IGParams(mu=math.sqrt(2) * P.gamma, delta=2 ** -0.5, t=t)
    f = lambda s: sg.density_spectral(sg.KernelPoint(s, x, y), P) * levy.ig_density(s, ig)
    val = integrate.quad(f, 0.01, 60, points=[0.1, 1.0], epsabs=1e-13, limit=200)[0]
    assert val == pytest.approx(sg.subordinated_kernel(t, x, y, P), rel=1e-7)


def test_from_zero_density():
    al = 0.7
    u = JacobiParams(al, al)
    for t in (0.5, 2.0):
        tot = integrate.quad(lambda y: sg.density_from_zero(t, y, al), -1, 1, epsabs=1e-12)[0]
        assert tot == pytest.approx(1.0, abs=1e-8)
        for y in (-0.5, 0.0, 0.9):
            # the Y process runs at half speed
            assert sg.density_from_zero(t, y, al) == pytest.approx(
                sg.density_spectral(sg.KernelPoint(t / 2, 0.0, y), u), rel=1e-8)
    with pytest.raises(DomainError):
        sg.from_zero_coefficients(1.0, -0.6)
