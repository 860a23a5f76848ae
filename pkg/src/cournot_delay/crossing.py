"""Imaginary-axis crossings of the quasi-polynomial as the delay grows.

``lam = i*w`` is a root for some delay exactly when
``|p1(iw) p2(iw)| = |(a iw - b)(c iw - d)|``; squaring gives the even
polynomial ``P(w) = N1(w)**2 + N2(w)**2 - Q(w)**2`` of degree 12. Its positive
roots are the crossing frequencies; the phase of ``p1 p2 / ((a iw - b)(c iw - d))``
then fixes the crossing delays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linearization import (
    QuasiPolyCoeffs,
    closed_form_coeffs,
    dq_dlambda,
    dq_dtau,
    eval_quasipoly,
    quasipoly_scale,
    stability_at_zero_delay,
)
from .model import ModelParams

DEFAULT_TOL = 1e-9
EPS = float(np.finfo(float).eps)
NEAR_MULTIPLE_GAP = 1e-8
DELAY_RESIDUAL = 1e-8


class NumericalError(ArithmeticError):
    """A computed quantity failed its residual or conditioning check."""


class NearMultipleRootError(NumericalError):
    """Sign-change bracketing cannot separate a (nearly) repeated root."""

    def __init__(self, message, roots, suspects):
        super().__init__(message)
        self.roots = roots
        self.suspects = suspects


class StabilityClass(str, enum.Enum):
    DELAY_INDEPENDENT = "DelayIndependent"
    DELAY_DEPENDENT = "DelayDependent"
    UNSTABLE_AT_ZERO = "UnstableAtZero"

    def __str__(self):
        return self.value


class CrossingPoly(NamedTuple):
    """Even coefficients ``(a0, a2, ..., a12)`` of ``P(w) = sum a_2k w**2k``."""

    a0: float
    a2: float
    a4: float
    a6: float
    a8: float
    a10: float
    a12: float

    def u_poly(self) -> np.ndarray:
        """Coefficients in ``u = w**2``, lowest power first."""
        return np.array(self, dtype=float)

    def __call__(self, omega):
        return np.polynomial.polynomial.polyval(np.square(omega), self.u_poly())

    def scale(self, omega):
        """Sum of the absolute values of the terms at ``omega``."""
        return np.polynomial.polynomial.polyval(np.square(omega), np.abs(self.u_poly()))


@dataclass
class Crossing:
    omega: float
    delays: list[float]
    transversality: float | None = None
    near_multiple: bool = False

    @property
    def tau0(self) -> float:
        return self.delays[0]

    @property
    def transversal(self) -> bool | None:
        if self.transversality is None:
            return None
        return self.transversality > 0.0


@dataclass
class CrossingReport:
    stability_class: StabilityClass
    crossings: list[Crossing] = field(default_factory=list)
    critical_delay: float | None = None
    coeffs: QuasiPolyCoeffs | None = None

    @property
    def crossing_frequencies(self) -> list[float]:
        return [c.omega for c in self.crossings]

    def critical_crossing(self) -> Crossing | None:
        if self.critical_delay is None:
            return None
        return min((c for c in self.crossings if c.delays), key=lambda c: c.tau0)


# ---------------------------------------------------------------------------
# crossing polynomial

def phi_theta(coeffs: QuasiPolyCoeffs, omega):
    """Real and imaginary parts of ``p1(iw) p2(iw)``."""
    al0, al1, be0, be1 = coeffs[:4]
    w2 = np.square(omega)
    phi = w2 * w2 - (al1 * be1 + al0 + be0) * w2 + al0 * be0
    theta = omega * w2 * (al1 + be1) - (al0 * be1 + al1 * be0) * omega
    return phi, theta


def n1_n2_q(coeffs: QuasiPolyCoeffs, omega):
    """``N1, N2, Q`` with ``cos(w tau) = N1/Q`` and ``sin(w tau) = N2/Q`` on a crossing."""
    a, b, c, d = coeffs[4:]
    phi, theta = phi_theta(coeffs, omega)
    w2 = np.square(omega)
    real_part = a * c * w2 - b * d
    cross = a * d + b * c
    n1 = -phi * real_part - theta * omega * cross
    n2 = -phi * cross * omega + theta * real_part
    q = (c * c * w2 + d * d) * (a * a * w2 + b * b)
    return n1, n2, q


def build_crossing_poly(coeffs: QuasiPolyCoeffs) -> CrossingPoly:
    al0, al1, be0, be1, a, b, c, d = coeffs
    a2_, b2_, c2_, d2_ = a * a, b * b, c * c, d * d
    s1 = al1**2 + be1**2 - 2.0 * (al0 + be0)
    s2 = al0**2 + be0**2 + (2.0 * al0 - al1**2) * (2.0 * be0 - be1**2)
    s3 = al0**2 * (be1**2 - 2.0 * be0) + (al1**2 - 2.0 * al0) * be0**2
    mix = a2_ * d2_ + b2_ * c2_
    ac2 = a2_ * c2_
    bd2 = b2_ * d2_

    a12 = ac2
    a10 = (s1 * c2_ + d2_) * a2_ + b2_ * c2_
    a8 = s1 * mix + s2 * ac2 + bd2 - ac2 * ac2
    a6 = (
        mix * s2
        + s1 * bd2
        - 2.0 * a2_ * a2_ * c2_ * d2_
        - 2.0 * b2_ * c2_ * c2_ * a2_
        + (al0**2 * be1**2 + al1**2 * be0**2 - 2.0 * (al0**2 * be0 + al0 * be0**2)) * ac2
    )
    a4 = (
        (al0**2 * be0**2 - 4.0 * bd2) * ac2
        + s2 * bd2
        + s3 * mix
        - a2_ * a2_ * d2_ * d2_
        - b2_ * b2_ * c2_ * c2_
    )
    a2 = s3 * bd2 - mix * (2.0 * bd2 - al0**2 * be0**2)
    # a0 = bd^2 (al0 be0 - bd)(al0 be0 + bd); one factor vanishes exactly on the
    # delay-independence boundary, so rounding residue there is snapped to zero
    noise = 4.0 * EPS * (abs(al0 * be0) + abs(b * d))
    minus, plus = al0 * be0 - b * d, al0 * be0 + b * d
    a0 = bd2 * (minus if abs(minus) > noise else 0.0) * (plus if abs(plus) > noise else 0.0)
    return CrossingPoly(a0, a2, a4, a6, a8, a10, a12)


def crossing_poly_direct(coeffs: QuasiPolyCoeffs, omega):
    """``N1**2 + N2**2 - Q**2`` evaluated without expanding into monomials."""
    n1, n2, q = n1_n2_q(coeffs, omega)
    return n1 * n1 + n2 * n2 - q * q


# ---------------------------------------------------------------------------
# positive real roots

def _bisect(f, lo, hi, flo):
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo) <= 1e-15 * hi:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid


def positive_u_roots(u_coeffs, grid_per_decade: int = 200):
    """Positive real roots of a real polynomial (coefficients lowest first).

    Returns ``(roots, suspects)``: ``roots`` are isolated by sign changes on a
    geometric grid between coefficient-based root bounds and refined by
    bisection; ``suspects`` are positive near-real eigenvalues of the companion
    matrix that no bracket explains (even-multiplicity or nearly repeated
    roots).
    """
    c = np.trim_zeros(np.asarray(u_coeffs, dtype=float), "b")
    if c.size <= 1:
        return [], []
    c = c / np.max(np.abs(c))
    # zero roots are not positive; deflate them
    nz = np.flatnonzero(c)
    c = c[nz[0]:]
    if c.size <= 1:
        return [], []
    lead, const = c[-1], c[0]
    upper = 1.0 + np.max(np.abs(c[:-1] / lead))
    lower = abs(const) / (abs(const) + np.max(np.abs(c[1:])))
    poly = np.polynomial.Polynomial(c)

    decades = max(np.log10(upper / lower), 1.0)
    n = int(grid_per_decade * decades) + 2
    grid = np.geomspace(lower * (1 - 1e-12), upper * (1 + 1e-12), n)
    vals = poly(grid)
    roots = []
    for i in range(n - 1):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0:
            roots.append(grid[i])
        elif f0 * f1 < 0.0:
            roots.append(_bisect(poly, grid[i], grid[i + 1], f0))
    if vals[-1] == 0.0:
        roots.append(grid[-1])

    # deflation cross-check against the companion-matrix eigenvalues
    eig = poly.roots()
    suspects = []
    for r in eig:
        if r.real <= 0.0 or abs(r.imag) > 1e-6 * abs(r):
            continue
        if not any(abs(r.real - x) <= 1e-6 * x for x in roots):
            suspects.append(float(r.real))
    for x, y in zip(roots, roots[1:]):
        if y - x <= NEAR_MULTIPLE_GAP * y:
            suspects.extend([x, y])
    return [float(r) for r in roots], sorted(suspects)


def positive_roots(poly: CrossingPoly, tol: float = DEFAULT_TOL) -> list[float]:
    """Simple positive roots ``w0`` of ``P``, ascending.

    Raises :class:`NearMultipleRootError` when a repeated or nearly repeated
    root is detected; the exception carries both the clean roots and the
    suspects (as frequencies).
    """
    u_roots, suspects = positive_u_roots(poly.u_poly())
    omegas = [math.sqrt(u) for u in u_roots]
    for w in omegas:
        res = abs(poly(w)) / poly.scale(w)
        if not res < tol:
            raise NumericalError(f"crossing polynomial residual {res:.3g} at w={w:.6g} exceeds {tol}")
    if suspects:
        raise NearMultipleRootError(
            "nearly repeated positive root(s) of the crossing polynomial",
            omegas,
            [math.sqrt(u) for u in suspects],
        )
    return omegas


# ---------------------------------------------------------------------------
# delays, transversality, classification

def crossing_angle(coeffs: QuasiPolyCoeffs, omega0: float) -> float:
    """Angle ``theta`` in ``[0, 2 pi)`` with ``cos theta ~ N1`` and ``sin theta ~ N2``."""
    n1, n2, q = n1_n2_q(coeffs, omega0)
    if math.hypot(n1, n2) <= 1e-300 or q <= 0.0:
        raise NumericalError(f"crossing angle undefined at w={omega0:.6g}")
    return math.atan2(n2, n1) % (2.0 * math.pi)


def crossing_delays(coeffs: QuasiPolyCoeffs, omega0: float, n_branches: int = 3) -> list[float]:
    """First ``n_branches`` positive delays at which ``i*omega0`` is a root."""
    theta = crossing_angle(coeffs, omega0)
    period = 2.0 * math.pi / omega0
    tau0 = theta / omega0
    if tau0 <= 0.0:
        tau0 += period
    delays = [tau0 + k * period for k in range(n_branches)]
    lam = 1j * omega0
    for tau in delays:
        scale = quasipoly_scale(coeffs, lam, tau)
        res = abs(eval_quasipoly(coeffs, lam, tau)) / scale
        if not res < DELAY_RESIDUAL:
            raise NumericalError(
                f"|q(i w0, tau)| / scale = {res:.3g} at w0={omega0:.6g}, tau={tau:.6g}"
            )
    return delays


def transversality(coeffs: QuasiPolyCoeffs, omega0: float, tau0: float) -> float:
    """``Re(d lam / d tau)`` at the root ``i*omega0`` of ``q(., tau0)``."""
    lam = 1j * omega0
    dl = dq_dlambda(coeffs, lam, tau0)
    if abs(dl) * omega0 <= 1e-12 * quasipoly_scale(coeffs, lam, tau0):
        raise NumericalError(f"dq/dlambda vanishes at i*{omega0:.6g}: root is not simple")
    return float((-dq_dtau(coeffs, lam, tau0) / dl).real)


def classify_coeffs(coeffs: QuasiPolyCoeffs, n_branches: int = 3, tol: float = DEFAULT_TOL) -> CrossingReport:
    """Delay-stability classification from the quasi-polynomial coefficients alone."""
    if not stability_at_zero_delay(coeffs):
        return CrossingReport(StabilityClass.UNSTABLE_AT_ZERO, coeffs=coeffs)
    poly = build_crossing_poly(coeffs)
    crossings = []
    try:
        omegas = positive_roots(poly, tol)
    except NearMultipleRootError as err:
        omegas = err.roots
        crossings.extend(Crossing(w, [], None, near_multiple=True) for w in err.suspects)
    for w in omegas:
        delays = crossing_delays(coeffs, w, n_branches)
        crossings.append(Crossing(w, delays, transversality(coeffs, w, delays[0])))
    crossings.sort(key=lambda c: c.omega)
    if not crossings:
        return CrossingReport(StabilityClass.DELAY_INDEPENDENT, coeffs=coeffs)
    timed = [c.tau0 for c in crossings if c.delays]
    tau_star = min(timed) if timed else None
    return CrossingReport(StabilityClass.DELAY_DEPENDENT, crossings, tau_star, coeffs)


def classify(params: ModelParams, n_branches: int = 3, tol: float = DEFAULT_TOL) -> CrossingReport:
    return classify_coeffs(closed_form_coeffs(params), n_branches, tol)


def critical_delay(params: ModelParams) -> float | None:
    return classify(params).critical_delay


def independence_band() -> tuple[float, float]:
    """Band of cost ratios for which the baseline-form model is delay-independent."""
    r = 2.0 * math.sqrt(2.0)
    return 3.0 - r, 3.0 + r


def locate_class_flip(make_params, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Bisect ``mu`` on ``[lo, hi]`` for the change in crossing-root existence.

    ``make_params(mu)`` builds the parameter set. The endpoints must classify
    differently.
    """
    def has_roots(mu):
        return bool(positive_u_roots(build_crossing_poly(closed_form_coeffs(make_params(mu))).u_poly())[0])

    flo = has_roots(lo)
    if flo == has_roots(hi):
        raise ValueError("classification does not change on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_roots(mid) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
