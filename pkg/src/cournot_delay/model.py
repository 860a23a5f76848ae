"""Cournot duopoly with tax evasion and a delayed follower.

Firm 1 leads; firm 2 reacts to firm 1's output after a delay ``tau``. Each
firm adjusts output ``x`` and declared revenue ``z`` along its marginal
profit. Functional forms: inverse demand ``p(y) = 1/y``, penalty
``F(u) = s*sigma*u**2/2`` and linear costs ``C_l(x) = c_l*x`` with
``c2 = mu*c1``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

#: Smallest aggregate output the right-hand side accepts.
Y_FLOOR = 1e-12


class ParameterError(ValueError):
    """Model parameters fall outside their admissible domain."""


class DomainError(ArithmeticError):
    """The state leaves the region where the dynamics are defined."""


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the duopoly.

    Defaults reproduce the baseline of the numerical study (sigma=0.1, s=40,
    q1=q2=0.5, all adjustment speeds 1, c1=0.1, mu=1), so ``ModelParams(mu=10)``
    is the usual way to get a baseline variant.
    """

    sigma: float = 0.1
    s: float = 40.0
    q1: float = 0.5
    q2: float = 0.5
    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    k4: float = 1.0
    c1: float = 0.1
    mu: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ParameterError(f"{f.name} must be finite, got {v!r}")
        if not 0.0 <= self.sigma < 1.0:
            raise ParameterError(f"sigma must lie in [0, 1), got {self.sigma}")
        for name in ("q1", "q2"):
            q = getattr(self, name)
            if not 0.0 < q < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {q}")
        for name in ("s", "c1", "k1", "k2", "k3", "k4"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.mu < 0.0:
            raise ParameterError(f"mu must be non-negative, got {self.mu}")

    @property
    def c2(self) -> float:
        return self.mu * self.c1

    def costs(self) -> tuple[float, float]:
        return self.c1, self.c2


class State(NamedTuple):
    x1: float
    x2: float
    z1: float
    z2: float


class Equilibrium(NamedTuple):
    x1_star: float
    x2_star: float
    z1_star: float
    z2_star: float

    def as_state(self) -> State:
        return State(*self)


def _aggregate(x_own_or_lead: float, x2: float) -> float:
    y = x_own_or_lead + x2
    if not y >= Y_FLOOR:  # also rejects NaN
        raise DomainError(f"aggregate output {y!r} below floor {Y_FLOOR}")
    return y


def rhs(params: ModelParams, current, delayed_x1: float) -> np.ndarray:
    """Gradient dynamics ``(k1 dP1/dx1, k2 dP2/dx2, k3 dP1/dz1, k4 dP2/dz2)``.

    Firm 1 sees the current aggregate ``x1 + x2``; firm 2 sees
    ``delayed_x1 + x2``. Raises :class:`DomainError` if either aggregate is
    below :data:`Y_FLOOR`.
    """
    return np.array(rhs_tuple(params, *current, delayed_x1))


def rhs_tuple(params: ModelParams, x1, x2, z1, z2, delayed_x1):
    """Scalar version of :func:`rhs` returning a plain tuple (hot loop)."""
    p = params
    y1 = _aggregate(x1, x2)
    y2 = _aggregate(delayed_x1, x2)
    ss = p.s * p.sigma
    u1 = x1 / y1 - z1
    u2 = x2 / y2 - z2
    # F'(u) = s*sigma*u; p(y) + x*p'(y) = 1/y - x/y**2
    dx1 = p.k1 * ((1.0 - p.q1 * p.sigma - p.q1 * ss * u1) * (1.0 / y1 - x1 / (y1 * y1)) - p.c1)
    dx2 = p.k2 * ((1.0 - p.q2 * p.sigma - p.q2 * ss * u2) * (1.0 / y2 - x2 / (y2 * y2)) - p.mu * p.c1)
    dz1 = p.k3 * (-(1.0 - p.q1) * p.sigma + p.q1 * ss * u1)
    dz2 = p.k4 * (-(1.0 - p.q2) * p.sigma + p.q2 * ss * u2)
    return dx1, dx2, dz1, dz2


def profit(params: ModelParams, firm: int, current, delayed_x1: float) -> float:
    """Profit of firm 1 or 2.

    Expected profit over the audit outcome: undetected evasion pays tax on the
    declared revenue ``z``, detected evasion pays full tax plus the penalty on
    the undeclared revenue.
    """
    x1, x2, z1, z2 = current
    p = params
    if firm == 1:
        x, z, q, c = x1, z1, p.q1, p.c1
        y = _aggregate(x1, x2)
    elif firm == 2:
        x, z, q, c = x2, z2, p.q2, p.c2
        y = _aggregate(delayed_x1, x2)
    else:
        raise ValueError(f"firm must be 1 or 2, got {firm!r}")
    revenue = x / y
    penalty = 0.5 * p.s * p.sigma * (revenue - z) ** 2
    return (1.0 - q * p.sigma) * revenue - q * penalty - (1.0 - q) * p.sigma * z - c * x


def equilibrium(params: ModelParams) -> Equilibrium:
    """Closed-form interior fixed point.

    With ``mu = 0`` the expressions reduce to the leader-monopoly limit
    ``x1* = 0``; no division by ``mu`` occurs so the same formulas are used.
    """
    p = params
    m = p.mu
    share = (1.0 - p.sigma) / (p.c1 * (1.0 + m) ** 2)
    x1 = m * share
    x2 = share
    z1 = m / (1.0 + m) - (1.0 - p.q1) / (p.s * p.q1)
    z2 = 1.0 / (1.0 + m) - (1.0 - p.q2) / (p.s * p.q2)
    return Equilibrium(x1, x2, z1, z2)
