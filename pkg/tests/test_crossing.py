import math

import numpy as np
import pytest

from cournot_delay import crossing
from cournot_delay.crossing import (
    NearMultipleRootError,
    StabilityClass,
    build_crossing_poly,
    classify,
    crossing_delays,
    crossing_poly_direct,
    locate_class_flip,
    n1_n2_q,
    positive_u_roots,
    independence_band,
)
from cournot_delay.linearization import closed_form_coeffs, eval_quasipoly, quasipoly_scale
from cournot_delay.model import ModelParams
from cournot_delay.verify import CRITICAL_DELAYS, random_params

BASELINE = dict(sigma=0.1, s=40.0, q1=0.5, q2=0.5, c1=0.1)


def a0_exact(mu):
    # symbolic expansion of the constant coefficient at the baseline parameters
    return -((mu - 1) ** 4) * (mu + 1) ** 10 * (mu * mu - 6 * mu + 1) / 16815125390625


def a12_exact(mu):
    return (9 * mu * mu - 20 * mu - 9) ** 2 * (9 * mu * mu + 20 * mu - 9) ** 2 / 430467210000


def test_crossing_poly_equals_direct_form():
    rng = np.random.default_rng(99)
    for _ in range(40):
        co = closed_form_coeffs(random_params(rng))
        poly = build_crossing_poly(co)
        w = np.exp(rng.uniform(math.log(1e-3), math.log(1e2), 20))
        rel = np.abs(poly(w) - crossing_poly_direct(co, w)) / poly.scale(w)
        assert rel.max() < 1e-10


@pytest.mark.parametrize("mu", [0.05, 0.5, 2.0, 6.0, 10.0, 100.0])
def test_extreme_coefficients_against_symbolic_expansion(mu):
    poly = build_crossing_poly(closed_form_coeffs(ModelParams(mu=mu, **BASELINE)))
    assert poly.a0 == pytest.approx(a0_exact(mu), rel=1e-9)
    assert poly.a12 == pytest.approx(a12_exact(mu), rel=1e-12)


def test_equal_firms_degenerate_low_coefficients():
    rng = np.random.default_rng(3)
    for _ in range(50):
        poly = build_crossing_poly(closed_form_coeffs(random_params(rng, equal_firms=True)))
        big = max(abs(v) for v in poly)
        assert abs(poly.a0) <= 1e-15 * big and abs(poly.a2) <= 1e-15 * big
        assert all(v > 0 for v in poly[2:])


@pytest.mark.parametrize("mu,tau", sorted(CRITICAL_DELAYS.items()))
def test_critical_delays(mu, tau):
    report = classify(ModelParams(mu=mu))
    assert report.stability_class is StabilityClass.DELAY_DEPENDENT
    tol = 1e-2 if mu < 1 else 1e-3
    assert report.critical_delay == pytest.approx(tau, rel=tol)
    assert report.critical_crossing().transversal


def test_mu10_crossing_frequency():
    crit = classify(ModelParams(mu=10.0)).critical_crossing()
    assert crit.omega == pytest.approx(0.378876583624, rel=1e-10)
    assert crit.transversality == pytest.approx(0.01717, rel=1e-3)


@pytest.mark.parametrize("mu", [0.01, 0.14, 6.0, 10.0, 1000.0])
def test_delay_branches_and_residuals(mu):
    report = classify(ModelParams(mu=mu), n_branches=4)
    co = report.coeffs
    for cr in report.crossings:
        np.testing.assert_allclose(np.diff(cr.delays), 2 * math.pi / cr.omega, rtol=1e-12)
        n1, n2, q = n1_n2_q(co, cr.omega)
        assert (n1 / q) ** 2 + (n2 / q) ** 2 == pytest.approx(1.0, abs=1e-10)
        for tau in cr.delays:
            lam = 1j * cr.omega
            scale = quasipoly_scale(co, lam, tau)
            assert abs(eval_quasipoly(co, lam, tau)) / scale < 1e-8


@pytest.mark.parametrize("mu", [0.1716, 0.5, 1.0, 2.5, 3.8, 5.8284, *independence_band()])
def test_delay_independent_band(mu):
    report = classify(ModelParams(mu=mu))
    assert report.stability_class is StabilityClass.DELAY_INDEPENDENT
    assert report.critical_delay is None


def test_band_boundaries_by_bisection():
    lo_true, hi_true = independence_band()
    assert lo_true == pytest.approx(3 - 2 * math.sqrt(2))
    lo = locate_class_flip(lambda m: ModelParams(mu=m), 0.1, 0.5)
    hi = locate_class_flip(lambda m: ModelParams(mu=m), 3.8, 6.5)
    assert abs(lo - lo_true) < 1e-6 and abs(hi - hi_true) < 1e-6


def test_coefficients_nonnegative_inside_band():
    lo, hi = independence_band()
    for mu in np.linspace(lo, hi, 201):
        poly = build_crossing_poly(closed_form_coeffs(ModelParams(mu=float(mu))))
        big = max(abs(v) for v in poly)
        assert min(poly) >= -1e-14 * big


def test_positive_root_isolation_simple_and_repeated():
    roots, suspects = positive_u_roots(np.poly([3.0, 0.5, -2.0])[::-1])
    np.testing.assert_allclose(sorted(roots), [0.5, 3.0], rtol=1e-12)
    assert suspects == []
    roots, suspects = positive_u_roots(np.poly([2.0, 2.0, -1.0])[::-1])
    assert roots == [] and suspects


def test_near_multiple_roots_are_flagged():
    poly = crossing.CrossingPoly(*np.poly([4.0, 4.0, -1.0, -2.0, -3.0, -5.0])[::-1])
    with pytest.raises(NearMultipleRootError):
        crossing.positive_roots(poly)


def test_crossing_delays_reject_non_crossing_frequency():
    co = closed_form_coeffs(ModelParams(mu=10.0))
    with pytest.raises(crossing.NumericalError):
        crossing_delays(co, 0.5)


def test_unstable_at_zero_delay_is_reported():
    # a strong delayed feedback with no damping makes the undelayed quartic unstable
    co = crossing.QuasiPolyCoeffs(1.0, 0.5, 1.0, -1.0, 1.0, 0.0, 1.0, 0.0)
    assert crossing.classify_coeffs(co).stability_class is StabilityClass.UNSTABLE_AT_ZERO
