import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cournot_delay.linearization import (
    QuasiPolyCoeffs,
    closed_form_coeffs,
    coeffs_from_lti,
    dq_dlambda,
    dq_dtau,
    eval_quasipoly,
    hurwitz_quartic,
    numeric_coeffs,
    numeric_linearize,
    stability_at_zero_delay,
    stability_at_zero_delay_roots,
)
from cournot_delay.model import ModelParams
from cournot_delay.verify import coefficient_gap, random_params


def test_closed_form_matches_finite_differences_on_random_draws():
    rng = np.random.default_rng(2024)
    gaps = [coefficient_gap(closed_form_coeffs(p), numeric_coeffs(p))
            for p in (random_params(rng) for _ in range(100))]
    assert max(gaps) < 1e-5


@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0, 6.0, 10.0, 1000.0])
def test_closed_form_matches_finite_differences_on_baseline(mu):
    p = ModelParams(mu=mu)
    assert coefficient_gap(closed_form_coeffs(p), numeric_coeffs(p)) < 1e-6


def test_delay_matrix_only_couples_leader_output_into_firm_two():
    lti = numeric_linearize(ModelParams(mu=3.0))
    B = lti.B
    mask = np.zeros((4, 4), dtype=bool)
    mask[1, 0] = mask[3, 0] = True
    assert np.all(B[~mask] == 0.0)
    assert np.all(B[mask] != 0.0)
    # firm 1 does not react to firm 2's declared revenue, and vice versa
    assert lti.A[0, 3] == 0.0 and lti.A[2, 3] == 0.0
    assert lti.A[1, 2] == 0.0 and lti.A[3, 2] == 0.0


@pytest.mark.parametrize("mu,tau", [(10.0, 4.8), (0.5, 2.0), (6.0, 64.7), (1.0, 0.3)])
def test_quasipolynomial_is_characteristic_determinant(mu, tau):
    lti = numeric_linearize(ModelParams(mu=mu))
    co = coeffs_from_lti(lti)
    rng = np.random.default_rng(5)
    for lam in rng.normal(size=6) * 0.5 + 1j * rng.normal(size=6):
        M = lti.A + cmath.exp(-lam * tau) * lti.B - lam * np.eye(4)
        det = np.linalg.det(M)
        assert eval_quasipoly(co, lam, tau) == pytest.approx(det, rel=1e-10, abs=1e-14)


def test_conjugate_symmetry_and_zero_delay_reduction():
    co = closed_form_coeffs(ModelParams(mu=10.0))
    lam = np.array([0.3 + 0.7j, -1.2 + 0.1j, 2j])
    np.testing.assert_allclose(eval_quasipoly(co, lam.conj(), 3.0), np.conj(eval_quasipoly(co, lam, 3.0)))
    np.testing.assert_allclose(eval_quasipoly(co, lam, 0.0), np.polyval(co.zero_delay_poly(), lam), rtol=1e-13)


def test_analytic_derivatives_match_differences():
    co = closed_form_coeffs(ModelParams(mu=10.0))
    lam, tau, h = 0.2 + 0.4j, 4.0, 1e-6
    fd_lam = (eval_quasipoly(co, lam + h, tau) - eval_quasipoly(co, lam - h, tau)) / (2 * h)
    fd_tau = (eval_quasipoly(co, lam, tau + h) - eval_quasipoly(co, lam, tau - h)) / (2 * h)
    assert dq_dlambda(co, lam, tau) == pytest.approx(fd_lam, rel=1e-7)
    assert dq_dtau(co, lam, tau) == pytest.approx(fd_tau, rel=1e-7)


def test_alpha1_slope_in_cost_ratio():
    # alpha1 is affine in mu with slope -2 k1 c1^2 / (1 - sigma)
    p = dict(sigma=0.1, s=40.0, q1=0.5, q2=0.5, c1=0.1)
    a = closed_form_coeffs(ModelParams(mu=2.0, **p)).alpha1
    b = closed_form_coeffs(ModelParams(mu=5.0, **p)).alpha1
    assert (b - a) / 3.0 == pytest.approx(-2 * 0.01 / 0.9, rel=1e-12)


def test_symmetric_firms_decouple():
    co = closed_form_coeffs(ModelParams(mu=1.0))
    assert co.b == 0.0 and co.d == 0.0


def test_hurwitz_known_quartics():
    assert hurwitz_quartic(np.poly([-1, -2, -3, -4]))
    assert not hurwitz_quartic(np.poly([1, -2, -3, -4]))
    assert not hurwitz_quartic(np.poly([0.1j, -0.1j, -3, -4]))
    assert not hurwitz_quartic([1, 0, 5, 0, 4])


root_part = st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3)


@settings(max_examples=200, deadline=None)
@given(re=st.tuples(root_part, root_part), im=st.tuples(st.floats(0, 3), st.floats(0, 3)))
def test_hurwitz_agrees_with_roots(re, im):
    roots = [complex(re[0], im[0]), complex(re[0], -im[0]), complex(re[1], im[1]), complex(re[1], -im[1])]
    poly = np.real(np.poly(roots))
    assert hurwitz_quartic(poly) == (max(re) < 0)


@pytest.mark.parametrize("mu", [0.01, 0.5, 1.0, 3.8, 6.0, 10.0, 100.0])
def test_baseline_is_stable_without_delay(mu):
    co = closed_form_coeffs(ModelParams(mu=mu))
    assert stability_at_zero_delay(co)
    assert stability_at_zero_delay_roots(co)


def test_quasipoly_coeffs_polynomials():
    co = QuasiPolyCoeffs(2.0, -3.0, 1.0, -1.0, 0.5, 0.25, -1.0, 2.0)
    np.testing.assert_allclose(co.delay_poly(), np.polymul([0.5, -0.25], [-1.0, -2.0]))
