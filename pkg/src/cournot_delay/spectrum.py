"""Root maps of the quasi-polynomial in rectangles of the complex plane.

Roots are located where the zero-level curves of ``Re q`` and ``Im q`` cross
inside a grid cell, then polished by Newton's method on the exact derivative.
Every map is audited with the argument principle along the region boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .linearization import QuasiPolyCoeffs, dq_dlambda, eval_quasipoly, quasipoly_scale

log = logging.getLogger(__name__)

RESIDUAL_BOUND = 1e-10
DEDUP_TOL = 1e-8
DEFAULT_GRID = 400


class SpectrumError(ArithmeticError):
    """Root mapping could not be validated."""


@dataclass(frozen=True)
class Region:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    grid_re: int = DEFAULT_GRID
    grid_im: int = DEFAULT_GRID

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"empty region {self}")
        if self.grid_re < 16 or self.grid_im < 16:
            raise ValueError("grid counts must be at least 16")

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (
            self.re_min - slack <= z.real <= self.re_max + slack
            and self.im_min - slack <= z.imag <= self.im_max + slack
        )

    def refined(self, factor: int = 2) -> "Region":
        return Region(self.re_min, self.re_max, self.im_min, self.im_max,
                      self.grid_re * factor, self.grid_im * factor)


@dataclass
class SpectrumResult:
    tau: float
    roots: list[complex] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    winding_count: int | None = None

    @property
    def rightmost(self) -> complex | None:
        if not self.roots:
            return None
        return max(self.roots, key=lambda z: (z.real, z.imag))


def newton_polish(coeffs, lam0: complex, tau: float, maxiter: int = 60):
    """Newton iteration on q(., tau); returns ``(root, scaled residual)`` or ``None``."""
    lam = complex(lam0)
    for _ in range(maxiter):
        f = eval_quasipoly(coeffs, lam, tau)
        df = dq_dlambda(coeffs, lam, tau)
        if df == 0 or not np.isfinite(f):
            return None
        step = f / df
        lam -= step
        if not np.isfinite(lam):
            return None
        if abs(step) <= 1e-15 * max(1.0, abs(lam)):
            break
    res = abs(eval_quasipoly(coeffs, lam, tau)) / max(quasipoly_scale(coeffs, lam, tau), 1e-300)
    return lam, float(res)


def _grid_step_limit(tau: float, span_im: float) -> int:
    # exp(-lam*tau) turns once every 2*pi/tau along the imaginary direction
    return int(math.ceil(12.0 * span_im * tau / (2.0 * math.pi))) + 1


def candidate_cells(coeffs, tau: float, region: Region) -> list[complex]:
    """Centres of cells crossed by both zero-level curves of ``Re q`` and ``Im q``."""
    n_im = max(region.grid_im, _grid_step_limit(tau, region.im_max - region.im_min))
    re = np.linspace(region.re_min, region.re_max, region.grid_re + 1)
    im = np.linspace(region.im_min, region.im_max, n_im + 1)
    lam = re[None, :] + 1j * im[:, None]
    vals = eval_quasipoly(coeffs, lam, tau)

    def changes(sign):
        s00, s01 = sign[:-1, :-1], sign[:-1, 1:]
        s10, s11 = sign[1:, :-1], sign[1:, 1:]
        lo = np.minimum(np.minimum(s00, s01), np.minimum(s10, s11))
        hi = np.maximum(np.maximum(s00, s01), np.maximum(s10, s11))
        return lo != hi

    both = changes(np.signbit(vals.real).astype(np.int8)) & changes(np.signbit(vals.imag).astype(np.int8))
    rows, cols = np.nonzero(both)
    centres = 0.5 * (re[cols] + re[cols + 1]) + 0.5j * (im[rows] + im[rows + 1])
    return list(centres)


def winding_number(coeffs, tau: float, region: Region, max_points: int = 2_000_000) -> int:
    """Number of roots inside ``region`` by the argument principle.

    The boundary is sampled counter-clockwise and refined wherever the phase of
    q jumps by more than ``pi/6`` between neighbouring samples.
    """
    corners = [
        complex(region.re_min, region.im_min),
        complex(region.re_max, region.im_min),
        complex(region.re_max, region.im_max),
        complex(region.re_min, region.im_max),
    ]
    n_edge = max(64, _grid_step_limit(tau, region.im_max - region.im_min))
    pts = []
    for k in range(4):
        z0, z1 = corners[k], corners[(k + 1) % 4]
        pts.append(z0 + (z1 - z0) * np.linspace(0.0, 1.0, n_edge, endpoint=False))
    z = np.concatenate(pts + [corners[:1]])
    f = eval_quasipoly(coeffs, z, tau)
    if np.any(f == 0):
        raise SpectrumError("quasi-polynomial vanishes on the region boundary")
    for _ in range(40):
        dphi = np.angle(f[1:] / f[:-1])
        bad = np.abs(dphi) > math.pi / 6
        if not bad.any():
            break
        if z.size + bad.sum() > max_points:
            raise SpectrumError("argument-principle sampling exceeded its budget")
        mid = 0.5 * (z[:-1][bad] + z[1:][bad])
        fmid = eval_quasipoly(coeffs, mid, tau)
        idx = np.flatnonzero(bad) + 1
        z = np.insert(z, idx, mid)
        f = np.insert(f, idx, fmid)
    else:
        raise SpectrumError("argument-principle sampling did not resolve the phase")
    total = np.angle(f[1:] / f[:-1]).sum() / (2.0 * math.pi)
    count = int(round(total))
    if abs(total - count) > 1e-3:
        raise SpectrumError(f"non-integer winding number {total:.6f}")
    return count


def _map_once(coeffs, tau, region):
    found, residuals = [], []
    span = max(region.re_max - region.re_min, region.im_max - region.im_min)
    for seed in candidate_cells(coeffs, tau, region):
        out = newton_polish(coeffs, seed, tau)
        if out is None:
            log.debug("Newton diverged from seed %s", seed)
            continue
        lam, res = out
        if res > RESIDUAL_BOUND or not region.contains(lam):
            continue
        if abs(lam - seed) > 0.25 * span:
            # wandered off to a root that some other cell owns
            continue
        if any(abs(lam - r) <= DEDUP_TOL * max(1.0, abs(r)) for r in found):
            continue
        found.append(lam)
        residuals.append(res)
    order = sorted(range(len(found)), key=lambda i: (found[i].real, found[i].imag))
    return [found[i] for i in order], [residuals[i] for i in order]


def map_roots(coeffs: QuasiPolyCoeffs, tau: float, region: Region, max_refinements: int = 3) -> SpectrumResult:
    """All roots of ``q(., tau)`` inside ``region``, sorted by real then imaginary part."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    expected = winding_number(coeffs, tau, region)
    reg = region
    for attempt in range(max_refinements + 1):
        roots, residuals = _map_once(coeffs, tau, reg)
        if len(roots) == expected:
            return SpectrumResult(tau, roots, residuals, expected)
        log.warning("grid %dx%d found %d roots, argument principle says %d; refining",
                    reg.grid_re, reg.grid_im, len(roots), expected)
        reg = reg.refined()
    raise SpectrumError(f"found {len(roots)} roots but the boundary winding number is {expected}")


def unstable_root_radius(coeffs: QuasiPolyCoeffs, tau: float, margin: float) -> float:
    """Radius beyond which no root with ``Re >= -margin`` can exist.

    There ``|exp(-lam*tau)| <= exp(margin*tau)``, so a root needs
    ``|p1 p2| <= exp(margin*tau) |(a lam - b)(c lam - d)|``; the monic quartic
    dominates once ``|lam|`` exceeds the Cauchy-type bound returned here.
    """
    quart = np.polymul(coeffs.p1(), coeffs.p2())
    delay = coeffs.delay_poly() * math.exp(margin * tau)
    lower = np.abs(quart[1:]).copy()
    lower[-3:] += np.abs(delay)
    return max(1.0, float(lower.sum())) * (1.0 + 1e-9) + margin


def rightmost_root(coeffs: QuasiPolyCoeffs, tau: float, margin: float | None = None,
                   max_doublings: int = 8) -> complex:
    """Root of maximal real part.

    The search box ``[-m, R] x [-R, R]`` provably contains every root with
    ``Re >= -m``; ``m`` doubles until a root shows up.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    m = margin if margin is not None else (0.5 if tau == 0 else min(0.5, 1.0 / tau))
    for _ in range(max_doublings):
        R = unstable_root_radius(coeffs, tau, m)
        n_re = max(DEFAULT_GRID, int(math.ceil(8.0 * (R + m) * max(tau, 1.0))))
        n_re = min(n_re, 4000)
        # shift the left edge off any grid-aligned root
        region = Region(-m * (1 + 1e-7), R, -R, R, n_re, DEFAULT_GRID)
        result = map_roots(coeffs, tau, region)
        if result.roots:
            z = result.rightmost
            return complex(z.real, abs(z.imag))
        m *= 2.0
    raise SpectrumError("no root found within the search margin")
