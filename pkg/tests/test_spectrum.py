import numpy as np
import pytest

from cournot_delay.crossing import classify
from cournot_delay.linearization import QuasiPolyCoeffs, closed_form_coeffs
from cournot_delay.model import ModelParams
from cournot_delay.spectrum import (
    Region,
    SpectrumError,
    map_roots,
    rightmost_root,
    winding_number,
)

TAU_STAR_10 = 4.809451548


@pytest.fixture(scope="module")
def co10():
    return closed_form_coeffs(ModelParams(mu=10.0))


def test_zero_delay_roots_match_quartic(co10):
    result = map_roots(co10, 0.0, Region(-7.0, 1.0, -5.0, 5.0))
    expected = np.sort_complex(np.roots(co10.zero_delay_poly()))
    assert result.winding_count == 4
    np.testing.assert_allclose(np.sort_complex(np.array(result.roots)), expected, rtol=1e-9)
    assert all(z.real < 0 for z in result.roots)


def test_narrow_region_counts_only_enclosed_roots(co10):
    # -5.97 lies outside; the argument principle and the map must agree on three
    result = map_roots(co10, 0.0, Region(-3.0, 1.0, -5.0, 5.0))
    assert len(result.roots) == result.winding_count == 3


def test_vanishing_delay_term_gives_quartic_roots():
    co = QuasiPolyCoeffs(2.0, -3.0, 5.0, -1.0, 0.0, 0.0, 0.0, 0.0)
    result = map_roots(co, 7.0, Region(-4.0, 1.0, -4.0, 4.0))
    expected = np.sort_complex(np.concatenate([np.roots([1, 3, 2]), np.roots([1, 1, 5])]))
    np.testing.assert_allclose(np.sort_complex(np.array(result.roots)), expected, rtol=1e-10)


def test_rightmost_at_zero_delay(co10):
    roots = np.roots(co10.zero_delay_poly())
    best = roots[np.argmax(roots.real)]
    z = rightmost_root(co10, 0.0)
    assert z.real == pytest.approx(best.real, abs=1e-9)
    assert z.imag == pytest.approx(abs(best.imag), abs=1e-9)


def test_imaginary_axis_pair_at_critical_delay(co10):
    result = map_roots(co10, 4.8094515, Region(-0.5, 0.5, -1.0, 1.0))
    pair = [z for z in result.roots if abs(z.real) < 1e-5]
    assert len(pair) == 2
    assert abs(pair[0] - pair[1].conjugate()) < 1e-8
    omega0 = classify(ModelParams(mu=10.0)).critical_crossing().omega
    assert abs(pair[1].imag) == pytest.approx(omega0, rel=1e-6)
    assert result.winding_count == len(result.roots)


def test_stability_switch_across_critical_delay(co10):
    assert rightmost_root(co10, 3.0).real < 0
    assert rightmost_root(co10, TAU_STAR_10 - 0.1).real < 0
    assert rightmost_root(co10, TAU_STAR_10 + 0.1).real > 0
    assert rightmost_root(co10, 5.0).real > 0


def test_transversality_matches_root_velocity(co10):
    crit = classify(ModelParams(mu=10.0)).critical_crossing()
    h = 0.01
    slope = (rightmost_root(co10, crit.tau0 + h).real - rightmost_root(co10, crit.tau0 - h).real) / (2 * h)
    assert np.sign(slope) == np.sign(crit.transversality)
    assert slope == pytest.approx(crit.transversality, rel=0.02)


@pytest.mark.parametrize("tau", [10.0, 100.0])
def test_delay_independent_case_stays_stable(tau):
    co = closed_form_coeffs(ModelParams(mu=3.8))
    assert rightmost_root(co, tau).real < 0


def test_roots_are_accurate(co10):
    result = map_roots(co10, 3.0, Region(-1.0, 0.5, -3.0, 3.0))
    assert result.roots
    assert max(result.residuals) < 1e-10


def test_bad_inputs(co10):
    with pytest.raises(ValueError):
        Region(1.0, 0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        map_roots(co10, -1.0, Region(-1.0, 1.0, -1.0, 1.0))


def test_root_on_boundary_is_reported():
    co = QuasiPolyCoeffs(2.0, -3.0, 5.0, -1.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(SpectrumError):
        winding_number(co, 0.0, Region(-1.0, 1.0, -1.0, 1.0, 16, 16))
