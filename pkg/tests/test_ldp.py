import math

import numpy as np
import pytest
from scipy import integrate, optimize

from jacobi_ldp import ldp
from jacobi_ldp import semigroup as sg
from jacobi_ldp.ldp import CgfCase, RateBranch
from jacobi_ldp.params import DomainError, JacobiParams

B = -3.0


def _brute_rate(x, b):
    """-inf Lambda(phi, x) over the tilts on the side of x, on a dense grid then polished."""
    dom = ldp.domain(x, b)
    if x > b:
        lo, hi = 0.0, dom.interval[1]
    else:
        lo, hi = -200.0, 0.0
    grid = np.linspace(lo, hi, 20001)
    vals = np.array([ldp.Lambda(p, x, b) for p in grid])
    k = int(np.argmin(vals))
    a, c = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda p: ldp.Lambda(p, x, b), bounds=(a, c), method="bounded",
                                   options={"xatol": 1e-13})
    return -min(float(res.fun), float(vals[k]))


@pytest.mark.parametrize("x", [-6.0, -4.0, -3.5, -2.5, -2.0, -1.6, -1.4, -1.2, -1.05])
def test_rate_is_legendre_transform(x):
    assert ldp.rate_J(x, B).value == pytest.approx(_brute_rate(x, B), rel=1e-9, abs=1e-12)


def test_rate_basic_shape():
    assert ldp.rate_J(B, B).value == 0.0
    xs = np.linspace(-8, -1.01, 300)
    vals = np.array([ldp.rate_J(x, B).value for x in xs])
    assert np.all(vals >= 0)
    k = int(np.argmin(np.abs(xs - B)))
    assert np.all(np.diff(vals[:k]) < 0) and np.all(np.diff(vals[k + 1:]) > 0)


def test_rate_branches_join_smoothly():
    for b in (-1.5, -3.0, -7.0):
        x = ldp.x0(b)
        assert 3 * x * x + (4 + 2 * b) * x - b * b == pytest.approx(0.0, abs=1e-10)
        assert x < -1
        q = -(x - b) ** 2 / (4 * (x + 1))
        lin = x + 2 + math.sqrt((b - x) ** 2 + 4 * (x + 1))
        assert q == pytest.approx(lin, rel=1e-12)
        # one-sided derivatives of the two branches
        left = -(x - b) / (2 * (x + 1)) + (x - b) ** 2 / (4 * (x + 1) ** 2)
        right = 1 + (x - b + 2) / math.sqrt((b - x) ** 2 + 4 * (x + 1))
        assert left == pytest.approx(right, rel=1e-10)
        assert ldp.rate_J(x - 1e-9, b).branch is RateBranch.QUADRATIC
        assert ldp.rate_J(x + 1e-9, b).branch is RateBranch.LINEAR_TAIL


def test_rate_via_cgf_matches_closed_form():
    for x in (-2.5, -2.0, -1.4, -1.1):
        assert ldp.rate_via_cgf(x, B) == pytest.approx(ldp.rate_J(x, B).value, rel=1e-7)
    with pytest.raises(DomainError):
        ldp.rate_via_cgf(-4.0, B)


def test_duality():
    for nu in (0.5, 2.0, 5.0):
        b = -(nu + 1)
        assert ldp.x1(nu) == pytest.approx(-(ldp.x0(b) + 1), rel=1e-12)
        for x in np.linspace(-3, 8, 23):
            if x == 0.0:
                continue
            assert ldp.rate_I(x, nu).value == pytest.approx(ldp.rate_J(-(x + 1), b).value, rel=1e-12, abs=1e-14)
    with pytest.raises(DomainError):
        ldp.rate_I(0.0, 0.0)


def test_lambda_properties():
    for x in (-2.0, -1.3, 0.5):
        assert ldp.Lambda(0.0, x, B) == 0.0
        # mean of S/t: (x - b) / (2 (b + 1))
        assert ldp.Lambda_prime(0.0, x, B) == pytest.approx((x - B) / (2 * (B + 1)), rel=1e-14)
        for p in (-0.7, 0.3):
            h = 1e-6
            fd = (ldp.Lambda(p + h, x, B) - ldp.Lambda(p - h, x, B)) / (2 * h)
            assert ldp.Lambda_prime(p, x, B) == pytest.approx(fd, rel=1e-7)
    with pytest.raises(DomainError):
        ldp.Lambda(0.0, -2.0, -0.5)


def test_domain_cases():
    thr = ldp.case_threshold(B)
    assert thr == -1.5
    assert ldp.domain(-2.0, B).case is CgfCase.I
    assert ldp.domain(thr, B).case is CgfCase.I
    d2, d3 = ldp.domain(-1.2, B), ldp.domain(0.5, B)
    assert d2.case is CgfCase.II and d3.case is CgfCase.III
    for d in (d2, d3):
        assert not d.steep
        assert ldp.G(d.phi1, d.x, B) == pytest.approx(0.0, abs=1e-10)
        lo, hi = d.interval
        assert lo < 0 < hi
        assert ldp.G(0.5 * (lo + hi), d.x, B) < 0
    dm = ldp.domain(-1.2, B)
    assert dm.phi1 == pytest.approx(5.36204993518133, rel=1e-12) and dm.phi0 == pytest.approx(10.0)
    assert 1.0 in dm and 11.0 not in dm
    with pytest.raises(DomainError):
        ldp.domain(-1.0, B)


def test_phi_m_tilts_onto_x():
    for x in (-6.0, -2.0, -1.2):
        assert ldp.b_of_phi(ldp.phi_m(x, B), x, B) == pytest.approx(x, rel=1e-12)


def test_nonsteep_rate_on_toy_cgf():
    cgf = lambda p: 0.5 * p * p
    assert ldp.nonsteep_rate(cgf, 1.0, 0.5, 0.0, 1.0) == pytest.approx(0.125, rel=1e-9)
    assert ldp.nonsteep_rate(cgf, 1.0, 2.0, 0.0, 1.0) == pytest.approx(1.5)
    assert ldp.nonsteep_rate(cgf, 1.0, -1.0, 0.0, 1.0) == 0.0
    with pytest.raises(ldp.AssumptionError):
        ldp.nonsteep_rate(lambda p: math.sin(6 * p), 1.0, 0.5, 0.0, math.inf)


def _lambda_t_spectral(phi, x, b, t):
    # independent route: eigen-expansion of the tilted Y (half speed) from 0
    bp = ldp.b_of_phi(phi, x, b)
    e = 0.5 * (phi + b - bp)
    al = -bp - 1
    P = JacobiParams(al, al)
    f = lambda y: sg.density_spectral(sg.KernelPoint(t / 2, 0.0, y), P) * (1 - y * y) ** (-e)
    val = integrate.quad(f, -1, 1, epsabs=0, epsrel=1e-11, limit=200)[0]
    return ldp.Lambda(phi, x, b) + math.log(val) / t


@pytest.mark.parametrize("phi,t", [(1.0, 5.0), (0.5, 2.0), (-0.8, 3.0)])
def test_lambda_t_routes(phi, t):
    q = ldp.lambda_t_numeric(phi, -2.0, B, t)
    s = ldp.lambda_t_numeric(phi, -2.0, B, t, method="series")
    assert q == pytest.approx(s, rel=1e-10)
    assert q == pytest.approx(_lambda_t_spectral(phi, -2.0, B, t), rel=1e-8)


def test_lambda_t_converges():
    phi, x = 1.0, -2.0
    lam = ldp.Lambda(phi, x, B)
    gaps = [abs(ldp.lambda_t_numeric(phi, x, B, t) - lam) for t in (5, 10, 20, 40)]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    corr = 40 * (ldp.lambda_t_numeric(phi, x, B, 40.0) - lam)
    assert corr == pytest.approx(math.log(ldp.lambda_t_limit_expectation(phi, x, B)), rel=1e-6)
    assert ldp.lambda_t_numeric(0.0, x, B, 3.0) == 0.0
    with pytest.raises(ValueError):
        ldp.lambda_t_numeric(phi, x, B, 3.0, method="nope")
