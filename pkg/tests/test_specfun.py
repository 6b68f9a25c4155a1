import math

import numpy as np
import pytest
from scipy import special

from jacobi_ldp import specfun
from jacobi_ldp.params import ConvergenceError, DomainError, JacobiParams, SeriesControl

PAIRS = [(0.5, 0.8), (0.0, 0.0), (-0.5, 1.5), (2.0, -0.7)]


def test_pochhammer_examples():
    assert specfun.pochhammer(3.3, 0) == 1
    assert specfun.pochhammer(1, 6) == math.factorial(6)
    assert specfun.pochhammer(0.5, 2) == 0.75
    assert specfun.pochhammer(2.5, 80) == pytest.approx(math.exp(math.lgamma(82.5) - math.lgamma(2.5)), rel=1e-12)


@pytest.mark.parametrize("al,be", PAIRS)
def test_jacobi_against_scipy(al, be):
    params = JacobiParams(al, be)
    xs = np.linspace(-1, 1, 17)
    vals = specfun.jacobi_all(25, params, xs)
    for n in range(26):
        np.testing.assert_allclose(vals[n], special.eval_jacobi(n, al, be, xs), rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("al,be", PAIRS)
def test_jacobi_special_values(al, be):
    params = JacobiParams(al, be)
    for n in range(12):
        assert specfun.jacobi_poly(n, params, 1.0) == pytest.approx(specfun.pochhammer(al + 1, n) / math.factorial(n))
    x = 0.37
    assert specfun.jacobi_poly(0, params, x) == 1.0
    assert specfun.jacobi_poly(1, params, x) == pytest.approx((al + 1) - (al + be + 2) * (1 - x) / 2)


def test_jacobi_domain():
    with pytest.raises(DomainError):
        specfun.jacobi_poly(3, JacobiParams(0, 0), 1.2)


def test_hypergeometric_oracle_exact_and_float():
    params = JacobiParams(0.5, 0.8)
    for n in range(8):
        for x in (-0.6, 0.1, 0.9):
            e = specfun.jacobi_poly_hypergeometric(n, params, x, exact=True)
            f = specfun.jacobi_poly_hypergeometric(n, params, x)
            assert f == pytest.approx(e, rel=1e-9, abs=1e-11)


def test_homogeneous_matches_scaled_polynomial():
    params = JacobiParams(0.4, 1.1)
    u, w = 1.3, 0.7
    hom = specfun.jacobi_homogeneous(15, params, u, w)
    ref = [w ** n * special.eval_jacobi(n, 0.4, 1.1, u / w) for n in range(16)]
    np.testing.assert_allclose(hom, ref, rtol=1e-11)
    # finite at w = 0: only the leading coefficient survives
    hom0 = specfun.jacobi_homogeneous(6, params, 1.0, 0.0)
    lead = [math.exp(math.lgamma(2 * n + 2.5) - math.lgamma(n + 2.5)) / (2 ** n * math.factorial(n))
            for n in range(7)]
    np.testing.assert_allclose(hom0, lead, rtol=1e-12)


def test_norm_examples():
    p0 = JacobiParams(0, 0)
    assert specfun.jacobi_norm(0, p0) == 1.0
    assert specfun.jacobi_norm(1, p0) == pytest.approx(1 / 3)


def test_hyp2F1_examples():
    assert specfun.hyp2F1(0.3, 0.4, 0.7, 0.0) == 1.0
    assert specfun.hyp2F1(1, 1, 1, 0.5) == pytest.approx(2.0)
    for a, b, c, z in [(0.9, 0.7, 1.3, 0.2), (1.25, 1.75, 1.3, 0.81), (-0.5, 2.2, 3.1, -0.9)]:
        assert specfun.hyp2F1(a, b, c, z) == pytest.approx(special.hyp2f1(a, b, c, z), rel=1e-12)


def test_hyp2F1_terminating_is_jacobi():
    params = JacobiParams(0.5, 0.8)
    # low degrees only: the alternating float sum cancels badly past n ~ 10
    for n in range(9):
        x = -0.3
        v = specfun.pochhammer(1.5, n) / math.factorial(n) * specfun.hyp2F1(-n, n + 2.3, 1.5, (1 - x) / 2)
        assert v == pytest.approx(specfun.jacobi_poly(n, params, x), rel=1e-10, abs=1e-12)


def test_recurrence_matches_exact_rational_oracle():
    params = JacobiParams(0.5, 0.8)
    for n in (14, 20):
        for x in (-0.3, 0.55):
            assert specfun.jacobi_poly(n, params, x) == pytest.approx(
                specfun.jacobi_poly_hypergeometric(n, params, x, exact=True), rel=1e-12, abs=1e-14)


def test_hyp2F1_errors():
    with pytest.raises(DomainError):
        specfun.hyp2F1(0.5, 0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.hyp2F1(0.5, 0.5, -2.0, 0.3)
    # terminating series stops before the pole
    assert specfun.hyp2F1(-1, 1, -2, 0.5) == pytest.approx(1 + 0.25)


def test_hyp0F1():
    assert specfun.hyp0F1(1.7, 0) == 1.0
    for c, z in [(1.5, 0.3), (1.2, -2.5), (0.3, 4.0)]:
        assert specfun.hyp0F1(c, z) == pytest.approx(special.hyp0f1(c, z), rel=1e-12)
    with pytest.raises(DomainError):
        specfun.hyp0F1(-1.0, 0.2)


def test_product_formula_degenerates_at_r_one():
    # at r = 1 the first factor is 0F1(c; 0) = 1 and P_n(1) = (c)_n / n!
    c, d, w = 1.5, 1.2, 0.3
    params = JacobiParams(c - 1, d - 1)
    rhs = sum(specfun.jacobi_poly(n, params, 1.0) * w ** n / (specfun.pochhammer(c, n) * specfun.pochhammer(d, n))
              for n in range(40))
    assert specfun.hyp0F1(d, w) == pytest.approx(rhs, rel=1e-13)


def _f4_brute(a, b, c, d, u, v, K=120):
    tot = 0.0
    for m in range(K):
        for n in range(K):
            tot += math.exp(math.lgamma(a + m + n) - math.lgamma(a) + math.lgamma(b + m + n) - math.lgamma(b)
                            - math.lgamma(c + m) + math.lgamma(c) - math.lgamma(d + n) + math.lgamma(d)
                            - math.lgamma(m + 1) - math.lgamma(n + 1)) * u ** m * v ** n
    return tot


def test_f4_region_flag():
    assert specfun.F4ConvergenceRegion(0.2, 0.2).converges
    assert not specfun.F4ConvergenceRegion(0.25, 0.25).converges


def test_f4_against_rectangular_sum():
    rng = np.random.default_rng(3)
    for _ in range(5):
        a, b, c, d = rng.uniform(0.3, 2.0, 4)
        su, sv = rng.uniform(0.05, 0.45, 2)
        u, v = su ** 2 * rng.choice([-1, 1]), sv ** 2
        assert specfun.appell_F4(a, b, c, d, u, v) == pytest.approx(_f4_brute(a, b, c, d, u, v), rel=1e-10)


def test_f4_reduces_and_refuses():
    assert specfun.appell_F4(0.9, 0.7, 1.3, 2.0, 0.0, 0.0) == 1.0
    assert specfun.appell_F4(0.9, 0.7, 1.3, 2.0, 0.2, 0.0) == pytest.approx(specfun.hyp2F1(0.9, 0.7, 1.3, 0.2), rel=1e-13)
    with pytest.raises(DomainError):
        specfun.appell_F4(1, 1, 1, 1, 0.3, 0.3)
    with pytest.raises(ConvergenceError):
        specfun.appell_F4(1, 1, 1, 1, 0.24, 0.24, SeriesControl(max_terms=5))


def test_bailey_identity():
    b, c, u, v = 1.5, 2.5, 0.1, 0.15
    w = 1 - u - v
    lhs = specfun.appell_F4(b, c, b, b, u, v)
    assert lhs == pytest.approx(w ** -c * special.hyp2f1(c / 2, (c + 1) / 2, b, 4 * u * v / w ** 2), rel=1e-12)


def test_theta():
    assert specfun.theta(50) - 1 < 2 * math.exp(-50 * math.pi) * 1.0001
    direct1 = 1 + 2 * sum(math.exp(-math.pi * l * l) for l in range(1, 12))
    assert specfun.theta(1.0) == pytest.approx(direct1, rel=1e-15)
    for x in (0.1, 0.37, 1.0, 2.9):
        assert abs(specfun.theta(x) - specfun.theta(1 / x) / math.sqrt(x)) < 1e-12
    with pytest.raises(DomainError):
        specfun.theta(0.0)


def test_orthogonality_by_adaptive_quadrature():
    from jacobi_ldp.semigroup import integrate_against_weight
    params = JacobiParams(-0.5, 1.5)
    for m in range(6):
        for n in range(m, 6):
            val = integrate_against_weight(lambda y: specfun.jacobi_poly(m, params, y) * specfun.jacobi_poly(n, params, y),
                                           params)
            ref = specfun.jacobi_norm(n, params) if m == n else 0.0
            assert val == pytest.approx(ref, abs=1e-10)
