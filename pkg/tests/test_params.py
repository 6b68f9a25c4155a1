import pytest
from hypothesis import given, strategies as st

from jacobi_ldp.params import (DomainError, JacobiParams, SeriesControl, from_alpha_beta, from_bc, from_dd,
                               from_pq)

ab = st.floats(min_value=-0.999, max_value=50, allow_nan=False)


def test_dictionary_at_origin():
    p = from_alpha_beta(0, 0)
    assert (p.p, p.q, p.b, p.c, p.d, p.dprime, p.gamma, p.a) == (-2, 0, -1, 0, 2, 2, 0.5, 2)


def test_dictionary_at_one():
    p = from_alpha_beta(1, 1)
    assert (p.d, p.dprime, p.gamma) == (4, 4, 1.5)


def test_from_bc_origin():
    assert from_bc(-1, 0) == JacobiParams(0.0, 0.0)


@pytest.mark.parametrize("bad", [(-1, 0), (0, -1), (-1.5, 0.2)])
def test_rejects_out_of_range(bad):
    with pytest.raises(DomainError):
        from_alpha_beta(*bad)


def test_from_pq_domain_error():
    with pytest.raises(DomainError):
        from_pq(0.0, 0.0)


@given(ab, ab)
def test_round_trips(al, be):
    p = JacobiParams(al, be)
    for q in (from_dd(p.d, p.dprime), from_pq(p.p, p.q), from_bc(p.b, p.c)):
        assert q.alpha == pytest.approx(al, rel=1e-12, abs=1e-12)
        assert q.beta == pytest.approx(be, rel=1e-12, abs=1e-12)


@given(ab, ab)
def test_dimension_identities(al, be):
    p = JacobiParams(al, be)
    assert p.d == pytest.approx(p.q - p.p, abs=1e-12)
    assert p.dprime == pytest.approx(-(p.p + p.q), abs=1e-12)


def test_ultraspherical_drift_threshold():
    # b <= -1 exactly when alpha >= 0 for alpha == beta
    for al in (-0.5, -0.1, 0.0, 0.3, 2.0):
        assert (JacobiParams(al, al).b <= -1) == (al >= 0)


def test_eigenvalue_completed_square():
    p = JacobiParams(0.3, 1.7)
    for n in range(51):
        assert p.eigenvalue(n) == pytest.approx((n + p.gamma) ** 2 - p.gamma ** 2, rel=1e-13, abs=1e-12)


def test_series_control_validation():
    with pytest.raises(ValueError):
        SeriesControl(max_terms=0)
    with pytest.raises(ValueError):
        SeriesControl(abs_tol=1.5)
