import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prescient import mathcore as mc

# reference values from 40-digit mpmath series, quadrature and bisection
ERLANG_SF = [
    (1, 0.5, 0.6065306597126334),
    (4, 3.0, 0.6472318887822313),
    (8, 19.626, 0.001000118262228173),
    (16, 4.0, 0.9999951073892801),
    (64, 80.0, 0.029048874802733247),
]
ERLANG_PDF = [(4, 3.0, 0.22404180765538775), (8, 10.0, 0.09007922571921598)]
MARCUM = [
    (1, 2.0, 2.0, 0.6035009606119933),
    (8, 1.0, 6.0, 0.005547931315880443),
    (8, 4.47, 6.26, 0.35196991360173263),
    (4, 0.5, 1.0, 0.9984351141320116),
    (16, 3.0, 4.0, 0.99936416313258),
]
# (n, P_f, x) with e^-x sum_{r<n} x^r/r! = P_f
SERIES_ROOTS = [
    (4, 1e-3, 13.062240779188071),
    (8, 1e-3, 19.62617739538424),
    (16, 1e-3, 31.243609528544248),
    (4, 1e-4, 15.91381400063116),
    (8, 1e-4, 22.96244952555677),
    (16, 1e-4, 35.28562378767124),
    (8, 0.1, 11.770914461548056),
]


@pytest.mark.parametrize("n,y,expected", ERLANG_SF)
def test_erlang_sf_matches_high_precision(n, y, expected):
    assert mc.erlang_sf(n, y) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n,y,expected", ERLANG_PDF)
def test_erlang_pdf_matches_high_precision(n, y, expected):
    assert mc.erlang_pdf(n, y) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("M,a,b,expected", MARCUM)
def test_marcum_q_matches_quadrature(M, a, b, expected):
    assert mc.marcum_q(M, a, b) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("n,p,x", SERIES_ROOTS)
def test_survival_inverse_matches_bisection(n, p, x):
    assert 0.5 * mc.chisq_survival_inverse(2 * n, p) == pytest.approx(x, rel=1e-10)


def test_gaussian_q_values():
    assert mc.gaussian_q(1.5) == pytest.approx(0.06680720126885807, rel=1e-14)
    assert mc.gaussian_q(0.0) == pytest.approx(0.5)


def test_marcum_reduces_to_erlang_at_zero_noncentrality():
    for n in (1, 4, 8):
        for b in (0.5, 2.0, 5.0):
            assert mc.marcum_q(n, 0.0, b) == pytest.approx(mc.erlang_sf(n, b * b / 2), rel=1e-12)


def test_chisq_survival_rejects_odd_dof():
    with pytest.raises(ValueError):
        mc.chisq_survival(3, 1.0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 64), y1=st.floats(0, 200), y2=st.floats(0, 200))
def test_erlang_sf_monotone_decreasing(n, y1, y2):
    lo, hi = sorted((y1, y2))
    assert mc.erlang_sf(n, lo) >= mc.erlang_sf(n, hi) - 1e-15
    assert 0.0 <= mc.erlang_sf(n, hi) <= 1.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 32), p=st.floats(1e-8, 0.999))
def test_survival_inverse_roundtrip(n, p):
    x = mc.chisq_survival_inverse(2 * n, p)
    assert mc.chisq_survival(2 * n, x) == pytest.approx(p, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(M=st.integers(1, 16), a=st.floats(0, 8), b1=st.floats(0, 12), b2=st.floats(0, 12))
def test_marcum_bounded_and_decreasing_in_b(M, a, b1, b2):
    lo, hi = sorted((b1, b2))
    q_lo, q_hi = mc.marcum_q(M, a, lo), mc.marcum_q(M, a, hi)
    assert 0.0 <= q_hi <= q_lo + 1e-12 <= 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(M=st.integers(1, 16), a1=st.floats(0, 8), a2=st.floats(0, 8), b=st.floats(0.1, 12))
def test_marcum_increasing_in_a(M, a1, a2, b):
    lo, hi = sorted((a1, a2))
    assert mc.marcum_q(M, hi, b) >= mc.marcum_q(M, lo, b) - 1e-12


def test_hermitian_eig_descending_and_reconstructs(rng):
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    H = A @ A.conj().T
    eig = mc.hermitian_eig(H)
    assert np.all(np.diff(eig.eigenvalues) <= 0)
    np.testing.assert_allclose(eig.reconstruct(), H, atol=1e-10)
    assert mc.is_hermitian(H)
    assert not mc.is_hermitian(A)


def test_hermitian_eig_rejects_non_hermitian(rng):
    with pytest.raises(ValueError):
        mc.hermitian_eig(rng.standard_normal((3, 3)) + 1j * np.eye(3))


def test_nullspace_basis_orthonormal(rng):
    M = rng.standard_normal((2, 5)) + 1j * rng.standard_normal((2, 5))
    B = mc.nullspace_basis(M)
    assert B.shape == (5, 3)
    np.testing.assert_allclose(M @ B, 0, atol=1e-12)
    np.testing.assert_allclose(B.conj().T @ B, np.eye(3), atol=1e-12)


def test_nullspace_basis_full_rank_is_empty(rng):
    M = rng.standard_normal((4, 4))
    assert mc.nullspace_basis(M).shape == (4, 0)
