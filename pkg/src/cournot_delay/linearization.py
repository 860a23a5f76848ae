"""Delay linearization of the duopoly and its characteristic quasi-polynomial.

Around the equilibrium the dynamics reduce to ``x' = A x + B x(t - tau)`` and
the characteristic function factors as

    q(lam, tau) = p1(lam) * p2(lam) - exp(-lam*tau) * (a*lam - b) * (c*lam - d)

with ``p1 = lam**2 - alpha1*lam + alpha0`` and ``p2 = lam**2 - beta1*lam + beta0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .model import ModelParams, ParameterError, equilibrium, rhs_tuple

FD_REL_STEP = 1e-6


class QuasiPolyCoeffs(NamedTuple):
    alpha0: float
    alpha1: float
    beta0: float
    beta1: float
    a: float
    b: float
    c: float
    d: float

    def p1(self) -> np.ndarray:
        """Coefficients of p1, highest power first."""
        return np.array([1.0, -self.alpha1, self.alpha0])

    def p2(self) -> np.ndarray:
        return np.array([1.0, -self.beta1, self.beta0])

    def delay_poly(self) -> np.ndarray:
        """Coefficients of ``(a*lam - b)*(c*lam - d)``, highest power first."""
        a, b, c, d = self.a, self.b, self.c, self.d
        return np.array([a * c, -(a * d + b * c), b * d])

    def zero_delay_poly(self) -> np.ndarray:
        """Quartic ``q(lam, 0)``, highest power first."""
        quart = np.polymul(self.p1(), self.p2())
        quart[2:] -= self.delay_poly()
        return quart


@dataclass(frozen=True)
class DelayLTI:
    A: np.ndarray
    B: np.ndarray
    tau: float = 0.0


def closed_form_coeffs(params: ModelParams) -> QuasiPolyCoeffs:
    """Quasi-polynomial coefficients as explicit functions of the parameters.

    ``d`` carries the sign obtained by differentiating the model directly:
    ``d = k2*k4*c1**2*s*q2*sigma*(mu**2 - 1)/(1 - sigma)``.
    """
    p = params
    sig, s, q1, q2 = p.sigma, p.s, p.q1, p.q2
    k1, k2, k3, k4 = p.k1, p.k2, p.k3, p.k4
    c1, mu = p.c1, p.mu
    if not sig < 1.0:
        raise ParameterError("sigma must be below 1")
    om = 1.0 - sig
    cc = c1 * c1

    alpha0 = 2.0 * k1 * k3 * cc * s * q1 * sig * (mu + 1.0) / om
    alpha1 = (
        -s * k3 * q1 * sig**2 * (sig - 2.0)
        - (k1 * (q1 * s - 2.0 * (mu + 1.0)) * cc + s * q1 * k3) * sig
        - 2.0 * cc * k1 * (mu + 1.0)
    ) / om**2
    beta0 = 2.0 * k2 * k4 * cc * mu * s * q2 * sig * (mu + 1.0) / om
    beta1 = (
        (-k2 * mu * (mu * q2 * s - 2.0 * (mu + 1.0)) * cc - s * q2 * k4) * sig
        - 2.0 * cc * k2 * mu * (mu + 1.0)
        - s * k4 * q2 * sig**2 * (sig - 2.0)
    ) / om**2
    a = k1 * ((mu * q1 * s - mu**2 + 1.0) * sig + mu**2 - 1.0) * cc / om**2
    b = -k1 * k3 * cc * s * q1 * sig * (mu - 1.0) * (mu + 1.0) / om
    c = k2 * ((mu * q2 * s + mu**2 - 1.0) * sig - mu**2 + 1.0) * cc / om**2
    d = k2 * k4 * cc * s * q2 * sig * (mu - 1.0) * (mu + 1.0) / om
    return QuasiPolyCoeffs(alpha0, alpha1, beta0, beta1, a, b, c, d)


def _fd_steps(params: ModelParams, eq) -> list[float]:
    # outputs scale with aggregate output y*, declared revenues are shares of order one
    y = eq[0] + eq[1]
    return [
        FD_REL_STEP * max(abs(eq[0]), y),
        FD_REL_STEP * max(abs(eq[1]), y),
        FD_REL_STEP * max(abs(eq[2]), 1.0),
        FD_REL_STEP * max(abs(eq[3]), 1.0),
    ]


def numeric_linearize(params: ModelParams, tau: float = 0.0) -> DelayLTI:
    """Jacobians of the right-hand side at equilibrium by central differences."""
    eq = list(equilibrium(params))
    steps = _fd_steps(params, eq)
    A = np.zeros((4, 4))
    for j, h in enumerate(steps):
        up, dn = list(eq), list(eq)
        up[j] += h
        dn[j] -= h
        # the delayed copy of x1 stays at equilibrium while x1 itself moves
        fu = rhs_tuple(params, *up, eq[0])
        fd = rhs_tuple(params, *dn, eq[0])
        A[:, j] = [(u - v) / (2.0 * h) for u, v in zip(fu, fd)]
    B = np.zeros((4, 4))
    h = steps[0]
    fu = rhs_tuple(params, *eq, eq[0] + h)
    fd = rhs_tuple(params, *eq, eq[0] - h)
    B[:, 0] = [(u - v) / (2.0 * h) for u, v in zip(fu, fd)]
    return DelayLTI(A, B, tau)


def coeffs_from_lti(lti: DelayLTI) -> QuasiPolyCoeffs:
    """Read the eight scalars off (A, B).

    Rows/columns are ordered (x1, x2, z1, z2); firm 1 occupies (x1, z1), firm 2
    occupies (x2, z2), and B couples x1 into firm 2's rows only.
    """
    A, B = lti.A, lti.B
    alpha1 = A[0, 0] + A[2, 2]
    alpha0 = A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
    beta1 = A[1, 1] + A[3, 3]
    beta0 = A[1, 1] * A[3, 3] - A[1, 3] * A[3, 1]
    a = A[0, 1]
    b = A[0, 1] * A[2, 2] - A[2, 1] * A[0, 2]
    c = B[1, 0]
    d = B[1, 0] * A[3, 3] - B[3, 0] * A[1, 3]
    return QuasiPolyCoeffs(alpha0, alpha1, beta0, beta1, a, b, c, d)


def numeric_coeffs(params: ModelParams) -> QuasiPolyCoeffs:
    return coeffs_from_lti(numeric_linearize(params))


def eval_quasipoly(coeffs: QuasiPolyCoeffs, lam, tau: float):
    """q(lam, tau); ``lam`` may be a scalar or an array."""
    al0, al1, be0, be1, a, b, c, d = coeffs
    lam = np.asarray(lam, dtype=complex)
    p1 = (lam - al1) * lam + al0
    p2 = (lam - be1) * lam + be0
    out = p1 * p2 - np.exp(-lam * tau) * (a * lam - b) * (c * lam - d)
    return out[()] if out.ndim == 0 else out


def dq_dlambda(coeffs: QuasiPolyCoeffs, lam, tau: float):
    al0, al1, be0, be1, a, b, c, d = coeffs
    lam = np.asarray(lam, dtype=complex)
    p1 = (lam - al1) * lam + al0
    p2 = (lam - be1) * lam + be0
    dp1 = 2.0 * lam - al1
    dp2 = 2.0 * lam - be1
    u = a * lam - b
    v = c * lam - d
    out = dp1 * p2 + p1 * dp2 - np.exp(-lam * tau) * (a * v + c * u - tau * u * v)
    return out[()] if out.ndim == 0 else out


def dq_dtau(coeffs: QuasiPolyCoeffs, lam, tau: float):
    _, _, _, _, a, b, c, d = coeffs
    lam = np.asarray(lam, dtype=complex)
    out = lam * np.exp(-lam * tau) * (a * lam - b) * (c * lam - d)
    return out[()] if out.ndim == 0 else out


def quasipoly_scale(coeffs: QuasiPolyCoeffs, lam, tau: float):
    """Magnitude against which residuals of q are judged.

    Sum of the absolute values of all monomials, ``sum |c_k| |lam|**k`` for the
    quartic plus ``|exp(-lam*tau)|`` times the same for the delay polynomial;
    unlike ``|q|`` itself it does not collapse at a root.
    """
    lam = np.asarray(lam, dtype=complex)
    r = np.abs(lam)
    quart = np.polyval(np.abs(np.polymul(coeffs.p1(), coeffs.p2())), r)
    delay = np.polyval(np.abs(coeffs.delay_poly()), r) * np.exp(-(lam.real * tau))
    out = quart + delay
    return out[()] if out.ndim == 0 else out


def hurwitz_quartic(poly) -> bool:
    """Routh-Hurwitz test for a real quartic, evaluated in exact rationals."""
    c4, c3, c2, c1, c0 = (Fraction(float(v)) for v in poly)
    if c4 == 0:
        raise ValueError("leading coefficient of the quartic vanishes")
    if c4 < 0:
        c4, c3, c2, c1, c0 = -c4, -c3, -c2, -c1, -c0
    if min(c3, c2, c1, c0) <= 0:
        return False
    # Hurwitz minors for a4 l^4 + a3 l^3 + a2 l^2 + a1 l + a0
    d2 = c3 * c2 - c4 * c1
    d3 = c1 * d2 - c3 * c3 * c0
    return d2 > 0 and d3 > 0


def stability_at_zero_delay(coeffs: QuasiPolyCoeffs) -> bool:
    """Whether every root of ``q(lam, 0)`` lies in the open left half-plane."""
    quart = coeffs.zero_delay_poly()
    if not np.all(np.isfinite(quart)):
        raise ValueError("quartic has non-finite coefficients")
    return hurwitz_quartic(quart)


def stability_at_zero_delay_roots(coeffs: QuasiPolyCoeffs, margin: float = 1e-9) -> bool:
    """Eigenvalue-based counterpart of :func:`stability_at_zero_delay`."""
    roots = np.roots(coeffs.zero_delay_poly())
    return bool(np.all(roots.real < -margin))
