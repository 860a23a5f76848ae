"""Golden-value checklist behind ``cournot-delay verify``."""

from __future__ import annotations

import math
import time
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import crossing, dde, linearization, spectrum
from .model import ModelParams, equilibrium

EQUILIBRIUM_TABLE = {
    0.1716: (1.12, 6.5, 0.12, 0.82),
    0.5: (2.0, 4.0, 0.30, 0.64),
    1.0: (2.25, 2.25, 0.47, 0.47),
    1.5: (2.16, 1.44, 0.57, 0.37),
    2.0: (2.0, 1.0, 0.64, 0.30),
    2.5: (1.18, 0.73, 0.68, 0.26),
    3.0: (1.68, 0.56, 0.72, 0.22),
    3.5: (1.55, 0.44, 0.75, 0.19),
    4.0: (1.44, 0.36, 0.77, 0.17),
    4.5: (1.33, 0.29, 0.79, 0.15),
    5.0: (1.25, 0.25, 0.80, 0.14),
    5.8284: (1.12, 0.19, 0.82, 0.12),
}

CRITICAL_DELAYS = {
    0.0: 246.4898206,
    0.01: 257.6637089,
    0.04: 299.1040366,
    0.08: 385.7162877,
    0.1: 455.8218422,
    0.14: 770.9037092,
    6.0: 64.72944712,
    10.0: 4.809451548,
    100.0: 0.060011892,
    1000.0: 0.000579951,
}


def rounds_to(computed: float, printed: float, decimals: int = 2) -> bool:
    """Whether ``computed`` rounded half-up to ``decimals`` places equals ``printed``."""
    quantum = Decimal(1).scaleb(-decimals)
    rounded = Decimal(repr(computed)).quantize(quantum, rounding=ROUND_HALF_UP)
    return rounded == Decimal(repr(printed)).quantize(quantum)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def check_equilibrium_table() -> tuple[bool, str]:
    bad = []
    for mu, row in EQUILIBRIUM_TABLE.items():
        eq = equilibrium(ModelParams(mu=mu))
        for name, got, want in zip(("x1", "x2", "z1", "z2"), eq, row):
            if not rounds_to(got, want):
                bad.append(f"mu={mu} {name}: {got:.4f} vs {want}")
    exact = equilibrium(ModelParams(mu=1.0))
    exact_ok = np.allclose(exact, (2.25, 2.25, 0.475, 0.475), rtol=0, atol=1e-12)
    ok = not bad and exact_ok
    return ok, "all rows match" if ok else "; ".join(bad) or "mu=1 closed form mismatch"


def check_critical_delays() -> tuple[bool, str]:
    worst = []
    ok = True
    for mu, want in CRITICAL_DELAYS.items():
        if mu == 0.0:
            continue
        tol = 1e-3 if mu >= 6 else 1e-2
        got = crossing.classify(ModelParams(mu=mu)).critical_delay
        rel = abs(got - want) / want if got is not None else math.inf
        ok &= rel < tol
        worst.append(f"mu={mu}:{rel:.1e}")
    return ok, " ".join(worst)


def check_band_boundary() -> tuple[bool, str]:
    lo_true, hi_true = crossing.independence_band()
    lo = crossing.locate_class_flip(lambda m: ModelParams(mu=m), 0.1, 0.5)
    hi = crossing.locate_class_flip(lambda m: ModelParams(mu=m), 3.8, 6.5)
    ends = [crossing.classify(ModelParams(mu=m)).stability_class for m in (lo_true, hi_true)]
    ok = (abs(lo - lo_true) < 1e-6 and abs(hi - hi_true) < 1e-6
          and all(c is crossing.StabilityClass.DELAY_INDEPENDENT for c in ends))
    return ok, f"flips at {lo:.10f}, {hi:.10f}; endpoints {[str(c) for c in ends]}"


def random_params(rng: np.random.Generator, mu: float | None = None, equal_firms: bool = False) -> ModelParams:
    """Draw parameters from a moderate box inside the admissible domain."""
    sigma = rng.uniform(0.02, 0.6)
    s = rng.uniform(1.0, 60.0)
    q1 = rng.uniform(0.1, 0.9)
    k = rng.uniform(0.2, 3.0, size=4)
    c1 = math.exp(rng.uniform(math.log(0.02), math.log(2.0)))
    if equal_firms:
        return ModelParams(sigma=sigma, s=s, q1=q1, q2=q1, k1=k[0], k2=k[0], k3=k[0], k4=k[0], c1=c1, mu=1.0)
    q2 = rng.uniform(0.1, 0.9)
    if mu is None:
        mu = math.exp(rng.uniform(math.log(0.05), math.log(20.0)))
    return ModelParams(sigma=sigma, s=s, q1=q1, q2=q2, k1=k[0], k2=k[1], k3=k[2], k4=k[3], c1=c1, mu=mu)


def check_equal_firm_degeneracy(draws: int = 50, seed: int = 7) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    positive = True
    for _ in range(draws):
        poly = crossing.build_crossing_poly(linearization.closed_form_coeffs(random_params(rng, equal_firms=True)))
        big = max(abs(v) for v in poly)
        worst = max(worst, abs(poly.a0) / big, abs(poly.a2) / big)
        positive &= all(v > 0 for v in poly[2:])
    ok = worst < 1e-15 and positive
    return ok, f"max |a0|,|a2| relative {worst:.1e}; a4..a12 positive: {positive}"


def coefficient_gap(x: linearization.QuasiPolyCoeffs, y: linearization.QuasiPolyCoeffs) -> float:
    """Largest relative disagreement between two coefficient sets.

    Each coefficient is compared against the larger magnitude among
    coefficients of the same physical dimension (rate or rate squared), which
    keeps entries that pass through zero from inflating the ratio.
    """
    rate = ("alpha1", "beta1", "a", "c")
    rate2 = ("alpha0", "beta0", "b", "d")
    worst = 0.0
    for group in (rate, rate2):
        xs = np.array([getattr(x, n) for n in group])
        ys = np.array([getattr(y, n) for n in group])
        for xi, yi in zip(xs, ys):
            scale = max(abs(xi), abs(yi), 1e-3 * np.max(np.abs(xs)))
            worst = max(worst, abs(xi - yi) / scale)
    return worst


def check_oracle_equivalence(draws: int = 100, seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_coeff = 0.0
    worst_poly = 0.0
    for _ in range(draws):
        params = random_params(rng)
        closed = linearization.closed_form_coeffs(params)
        numeric = linearization.numeric_coeffs(params)
        worst_coeff = max(worst_coeff, coefficient_gap(closed, numeric))
        poly = crossing.build_crossing_poly(closed)
        omegas = np.exp(rng.uniform(math.log(1e-3), math.log(1e2), 20))
        direct = crossing.crossing_poly_direct(closed, omegas)
        scale = poly.scale(omegas)
        worst_poly = max(worst_poly, float(np.max(np.abs(poly(omegas) - direct) / scale)))
    ok = worst_coeff < 1e-5 and worst_poly < 1e-10
    return ok, f"coeff gap {worst_coeff:.1e}; crossing-poly identity {worst_poly:.1e}"


def crossing_consistency_residuals(mus=(0.01, 0.04, 0.08, 0.1, 0.14, 6.0, 10.0, 100.0, 1000.0)):
    worst_q = 0.0
    worst_trig = 0.0
    for mu in mus:
        report = crossing.classify(ModelParams(mu=mu))
        co = report.coeffs
        for cr in report.crossings:
            n1, n2, q = crossing.n1_n2_q(co, cr.omega)
            worst_trig = max(worst_trig, abs((n1 / q) ** 2 + (n2 / q) ** 2 - 1.0))
            for tau in cr.delays:
                lam = 1j * cr.omega
                scale = linearization.quasipoly_scale(co, lam, tau)
                worst_q = max(worst_q, abs(linearization.eval_quasipoly(co, lam, tau)) / scale)
    return worst_q, worst_trig


def check_crossing_consistency() -> tuple[bool, str]:
    worst_q, worst_trig = crossing_consistency_residuals()
    return worst_q < 1e-8 and worst_trig < 1e-10, f"|q| {worst_q:.1e}; trig {worst_trig:.1e}"


SPECTRUM_TAU0_REGION = spectrum.Region(-7.0, 1.0, -5.0, 5.0)
SPECTRUM_AXIS_REGION = spectrum.Region(-0.5, 0.5, -1.0, 1.0)


def check_spectrum() -> tuple[bool, str]:
    co = linearization.closed_form_coeffs(ModelParams(mu=10.0))
    r0 = spectrum.map_roots(co, 0.0, SPECTRUM_TAU0_REGION)
    ok0 = len(r0.roots) == 4 and all(z.real < 0 for z in r0.roots) and r0.winding_count == 4
    right3 = spectrum.rightmost_root(co, 3.0)
    axis = spectrum.map_roots(co, 4.8094515, SPECTRUM_AXIS_REGION)
    pair = [z for z in axis.roots if abs(z.real) < 1e-5]
    ok_axis = len(pair) == 2 and abs(pair[0] - pair[1].conjugate()) < 1e-8 and axis.winding_count == len(axis.roots)
    right5 = spectrum.rightmost_root(co, 5.0)
    ok = ok0 and right3.real < 0 and ok_axis and right5.real > 0
    return ok, (f"tau=0: {len(r0.roots)} roots; tau=3 Re={right3.real:.3e}; "
                f"axis pair Re={[f'{z.real:.1e}' for z in pair]}; tau=5 Re={right5.real:.3e}")


def check_dynamics(step: float = 0.05) -> tuple[bool, str]:
    params = ModelParams(mu=10.0)
    eq = np.array(equilibrium(params))
    t3 = dde.integrate(params, dde.SimConfig.perturbed(params, 3.0))
    _, tail3 = t3.tail()
    dist3 = float(np.max(np.abs(tail3 - eq)))
    t5 = dde.integrate(params, dde.SimConfig.perturbed(params, 5.0))
    omega0 = crossing.classify(params).crossings[0].omega
    try:
        period = dde.period_estimate(t5)
    except dde.InsufficientPeaksError:
        period = math.nan
    period_err = abs(period - 2 * math.pi / omega0) / (2 * math.pi / omega0)
    tail_t, tail5 = t5.tail()
    _, amps = dde.peak_amplitudes(tail_t, tail5[:, 1])
    growth = amps[-1] / amps[-2] if amps.size >= 2 else math.nan
    flip = dde.locate_verdict_flip(params, 3.0, 5.0, step=step)
    flip_err = abs(flip - CRITICAL_DELAYS[10.0]) / CRITICAL_DELAYS[10.0]
    ok = (t3.verdict is dde.Verdict.CONVERGED and dist3 < 1e-4
          and t5.verdict is dde.Verdict.OSCILLATING and period_err < 0.05 and flip_err < 0.02)
    return ok, (f"tau=3 {t3.verdict} (dist {dist3:.1e}); tau=5 {t5.verdict} "
                f"(last peak ratio {growth:.3f}, period err {period_err:.1%}); flip at {flip:.4f} ({flip_err:.2%})")


def rk4_error_ratio(tau: float = 3.0, t_end: float = 6.0, steps=(0.05, 0.025, 0.0125)) -> float:
    params = ModelParams(mu=10.0)
    finals = [dde.integrate_raw(params, dde.SimConfig.perturbed(params, tau, t_end=t_end, step=h))[1][-1]
              for h in steps]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    return float(e1 / e2)


def ode_reference_gap(t_end: float = 10.0, step: float = 0.01) -> float:
    from scipy.integrate import solve_ivp

    from .model import rhs

    params = ModelParams(mu=10.0)
    cfg = dde.SimConfig.perturbed(params, 0.0, t_end=t_end, step=step)
    ours = dde.integrate_raw(params, cfg)[1][-1]
    ref = solve_ivp(lambda t, x: rhs(params, x, x[0]), (0.0, t_end), np.array(cfg.history),
                    method="DOP853", rtol=1e-13, atol=1e-14)
    return float(np.max(np.abs(ours - ref.y[:, -1])))


def check_integrator_quality() -> tuple[bool, str]:
    ratio = rk4_error_ratio()
    gap = ode_reference_gap()
    return 12.0 <= ratio <= 20.0 and gap < 1e-8, f"halving ratio {ratio:.2f}; ODE gap {gap:.1e}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]], bool]] = [
    ("equilibrium-table", check_equilibrium_table, True),
    ("critical-delays", check_critical_delays, True),
    ("band-boundary", check_band_boundary, True),
    ("equal-firm-degeneracy", check_equal_firm_degeneracy, True),
    ("oracle-equivalence", check_oracle_equivalence, True),
    ("crossing-consistency", check_crossing_consistency, True),
    ("spectrum-reproduction", check_spectrum, True),
    ("dynamics-reproduction", check_dynamics, False),
    ("integrator-quality", check_integrator_quality, True),
]


def run_checks(quick: bool = False, names=None) -> list[CheckResult]:
    results = []
    for name, fn, in_quick in CHECKS:
        if quick and not in_quick:
            continue
        if names and name not in names:
            continue
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as err:  # a crashing check is a failed check
            ok, detail = False, f"{type(err).__name__}: {err}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return results
