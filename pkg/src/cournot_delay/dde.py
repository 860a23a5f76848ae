"""Method-of-steps integration of the delayed duopoly and tail diagnostics.

Fixed-step classical RK4; the delayed output ``x1(t - tau)`` is read from the
stored mesh by cubic Hermite interpolation using the stored derivatives, which
keeps the scheme fourth order between derivative breakpoints.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.signal import find_peaks

from .model import DomainError, Equilibrium, ModelParams, equilibrium, rhs_tuple

DIVERGENCE_BOUND = 1e6
CONV_TOL = 1e-4
OSC_FLOOR = 1e-3

History = Union[Sequence[float], Callable[[float], Sequence[float]]]


class Verdict(str, enum.Enum):
    CONVERGED = "Converged"
    OSCILLATING = "Oscillating"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


class StepSizeError(ValueError):
    pass


class InsufficientPeaksError(ValueError):
    pass


def default_step(tau: float) -> float:
    return min(tau / 50.0, 0.01) if tau > 0 else 0.01


def default_horizon(tau: float) -> float:
    return max(50.0 * tau, 500.0)


@dataclass
class SimConfig:
    """Integration settings.

    ``history`` is either a constant 4-vector or a callable ``psi(t)`` for
    ``t`` in ``[-tau, 0]``. ``step`` and ``t_end`` default to values scaled by
    the delay.
    """

    tau: float
    history: History
    t_end: float | None = None
    step: float | None = None
    transient_fraction: float = 0.5

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.step is None:
            self.step = default_step(self.tau)
        if self.t_end is None:
            self.t_end = default_horizon(self.tau)
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.step <= 0:
            raise StepSizeError("step must be positive")
        if self.tau > 0 and self.step > self.tau / 10.0 * (1 + 1e-12):
            raise StepSizeError(f"step {self.step} exceeds tau/10 = {self.tau / 10.0}")
        if not 0.0 < self.transient_fraction < 1.0:
            raise ValueError("transient_fraction must lie in (0, 1)")

    @classmethod
    def perturbed(cls, params: ModelParams, tau: float, perturbation=(0.1, 0.0, 0.0, 0.0),
                  relative: bool = True, **kw) -> "SimConfig":
        """Constant history at the equilibrium plus a perturbation.

        With ``relative=True`` the perturbation is a fraction of each
        equilibrium coordinate (the default is +10% on x1).
        """
        eq = np.array(equilibrium(params))
        pert = np.asarray(perturbation, dtype=float)
        start = eq * (1.0 + pert) if relative else eq + pert
        return cls(tau=tau, history=tuple(float(v) for v in start), **kw)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    verdict: Verdict = Verdict.INCONCLUSIVE
    oscillation_amplitude: np.ndarray | None = None
    transient_fraction: float = 0.5
    failure: str | None = None
    derivatives: np.ndarray | None = field(default=None, repr=False)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def tail(self, fraction: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        frac = self.transient_fraction if fraction is None else fraction
        start = int(len(self.times) * frac)
        return self.times[start:], self.states[start:]


def _history_fn(history: History) -> Callable[[float], Sequence[float]]:
    if callable(history):
        return history
    const = tuple(float(v) for v in history)
    if len(const) != 4:
        raise ValueError("history must have four components")
    return lambda t: const


def integrate_raw(params: ModelParams, config: SimConfig):
    """Run the stepper; returns ``(times, states, derivatives, failure message)``."""
    tau = float(config.tau)
    h = float(config.step)
    n_steps = int(round(config.t_end / h))
    psi = _history_fn(config.history)
    x1, x2, z1, z2 = (float(v) for v in psi(0.0))

    # mesh storage for x1 and its derivative (the only delayed coordinate)
    xs1 = [x1]
    fs1 = []
    states = [(x1, x2, z1, z2)]
    derivs = []
    f = rhs_tuple
    p = params
    failure = None
    bound = DIVERGENCE_BOUND

    def delayed(t):
        s = t - tau
        if s < 0.0:
            return float(psi(s)[0])
        u = s / h
        i = int(u)
        if i >= len(fs1) - 1:
            i = len(fs1) - 2
        th = u - i
        y0, y1 = xs1[i], xs1[i + 1]
        m0, m1 = fs1[i] * h, fs1[i + 1] * h
        th2 = th * th
        th3 = th2 * th
        return ((2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * m0
                + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * m1)

    try:
        for n in range(n_steps):
            t = n * h
            k1 = f(p, x1, x2, z1, z2, x1 if tau == 0.0 else delayed(t))
            fs1.append(k1[0])
            derivs.append(k1)
            hh = 0.5 * h
            dmid = None if tau == 0.0 else delayed(t + hh)
            a1, a2, a3, a4 = x1 + hh * k1[0], x2 + hh * k1[1], z1 + hh * k1[2], z2 + hh * k1[3]
            k2 = f(p, a1, a2, a3, a4, a1 if dmid is None else dmid)
            a1, a2, a3, a4 = x1 + hh * k2[0], x2 + hh * k2[1], z1 + hh * k2[2], z2 + hh * k2[3]
            k3 = f(p, a1, a2, a3, a4, a1 if dmid is None else dmid)
            a1, a2, a3, a4 = x1 + h * k3[0], x2 + h * k3[1], z1 + h * k3[2], z2 + h * k3[3]
            k4 = f(p, a1, a2, a3, a4, a1 if tau == 0.0 else delayed(t + h))
            w = h / 6.0
            x1 += w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            x2 += w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            z1 += w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            z2 += w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
            if not (abs(x1) < bound and abs(x2) < bound and abs(z1) < bound and abs(z2) < bound):
                failure = f"state left the bound {bound:g} at t={t + h:.6g}"
                break
            xs1.append(x1)
            states.append((x1, x2, z1, z2))
    except DomainError as err:
        failure = f"{err} at t={len(states) * h - h:.6g}"
    else:
        if failure is None:
            try:
                last = f(p, x1, x2, z1, z2, x1 if tau == 0.0 else delayed(n_steps * h))
                derivs.append(last)
            except DomainError as err:
                failure = str(err)
    times = h * np.arange(len(states))
    deriv_arr = np.array(derivs[: len(states)]) if derivs else np.zeros((0, 4))
    return times, np.array(states), deriv_arr, failure


def integrate(params: ModelParams, config: SimConfig,
              conv_tol: float = CONV_TOL, osc_floor: float = OSC_FLOOR) -> Trajectory:
    times, states, derivs, failure = integrate_raw(params, config)
    traj = Trajectory(times, states, transient_fraction=config.transient_fraction,
                      failure=failure, derivatives=derivs)
    if failure is not None:
        traj.verdict = Verdict.DIVERGED
        return traj
    _, tail = traj.tail()
    traj.oscillation_amplitude = np.ptp(tail, axis=0) if len(tail) else None
    traj.verdict = classify_tail(traj, equilibrium(params), conv_tol, osc_floor)
    return traj


def peak_amplitudes(times: np.ndarray, series: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Times of local maxima and the peak-to-following-trough drop of each."""
    peaks, _ = find_peaks(series)
    troughs, _ = find_peaks(-series)
    amps, when = [], []
    for pk in peaks:
        after = troughs[troughs > pk]
        if after.size == 0:
            break
        amps.append(series[pk] - series[after[0]])
        when.append(times[pk])
    return np.array(when), np.array(amps)


def classify_tail(traj: Trajectory, equilibrium: Equilibrium,
                  conv_tol: float = CONV_TOL, osc_floor: float = OSC_FLOOR,
                  transient_fraction: float | None = None) -> Verdict:
    """Qualitative long-run behaviour judged on the post-transient tail."""
    if traj.failure is not None:
        return Verdict.DIVERGED
    if not np.all(np.isfinite(traj.states)) or np.max(np.abs(traj.states)) > DIVERGENCE_BOUND:
        return Verdict.DIVERGED
    times, tail = traj.tail(transient_fraction)
    if len(tail) == 0:
        return Verdict.INCONCLUSIVE
    dist = np.max(np.abs(tail - np.asarray(equilibrium)))
    if dist < conv_tol:
        return Verdict.CONVERGED
    x2 = tail[:, 1]
    if np.ptp(x2) > osc_floor:
        _, amps = peak_amplitudes(times, x2)
        if amps.size >= 2 and amps[-2] > 0:
            ratio = amps[-1] / amps[-2]
            if 0.95 <= ratio <= 1.05:
                return Verdict.OSCILLATING
    return Verdict.INCONCLUSIVE


def _refined_peak_times(times, series, peaks):
    # parabolic interpolation through each discrete maximum and its neighbours
    out = []
    h = times[1] - times[0]
    for k in peaks:
        if 0 < k < len(series) - 1:
            ym, y0, yp = series[k - 1], series[k], series[k + 1]
            den = ym - 2 * y0 + yp
            shift = 0.5 * (ym - yp) / den if den != 0 else 0.0
            out.append(times[k] + shift * h)
    return np.array(out)


def period_estimate(traj: Trajectory, transient_fraction: float | None = None) -> float:
    """Mean spacing of the x2 maxima in the tail."""
    times, tail = traj.tail(transient_fraction)
    x2 = tail[:, 1]
    peaks, _ = find_peaks(x2)
    if peaks.size < 4:
        raise InsufficientPeaksError(f"only {peaks.size} peaks in the tail; need at least 4")
    pt = _refined_peak_times(times, x2, peaks)
    return float(np.mean(np.diff(pt)))


def decay_rate(traj: Trajectory, equilibrium: Equilibrium, transient_fraction: float | None = None) -> float:
    """Exponential rate of the distance to equilibrium, fitted over the tail peaks.

    A negative value means decay; it is comparable to the real part of the
    rightmost characteristic root.
    """
    times, tail = traj.tail(transient_fraction)
    dist = np.max(np.abs(tail - np.asarray(equilibrium)), axis=1)
    peaks, _ = find_peaks(dist)
    if peaks.size < 3:
        raise InsufficientPeaksError("not enough oscillation peaks to fit a decay rate")
    slope, _ = np.polyfit(times[peaks], np.log(dist[peaks]), 1)
    return float(slope)


def envelope_shrinking(traj: Trajectory, equilibrium: Equilibrium, fraction: float = 0.05) -> bool:
    """Whether the oscillation envelope shrinks by more than ``fraction`` across the tail."""
    times, _ = traj.tail()
    if len(times) < 2:
        return False
    try:
        rate = decay_rate(traj, equilibrium)
    except InsufficientPeaksError:
        return False
    return rate * (times[-1] - times[0]) < math.log1p(-fraction)


def settled_verdict(params: ModelParams, tau: float, perturbation=(0.1, 0.0, 0.0, 0.0),
                    step: float | None = None, t_end: float | None = None,
                    max_t_end: float = 20000.0) -> Verdict:
    """Verdict once the transient is over.

    The horizon doubles while the tail is inconclusive or still a visibly
    decaying oscillation, up to ``max_t_end``.
    """
    eq = equilibrium(params)
    horizon = t_end or default_horizon(tau)
    while True:
        cfg = SimConfig.perturbed(params, tau, perturbation, t_end=horizon, step=step)
        traj = integrate(params, cfg)
        unsettled = traj.verdict is Verdict.INCONCLUSIVE or (
            traj.verdict is Verdict.OSCILLATING and envelope_shrinking(traj, eq))
        if not unsettled or horizon >= max_t_end:
            return traj.verdict
        horizon = min(2.0 * horizon, max_t_end)


def locate_verdict_flip(params: ModelParams, lo: float, hi: float, rel_tol: float = 0.01,
                        step: float | None = None, **kw) -> float:
    """Bisect the delay between a converging and an oscillating run."""
    if settled_verdict(params, lo, step=step, **kw) is not Verdict.CONVERGED:
        raise ValueError(f"expected convergence at tau={lo}")
    if settled_verdict(params, hi, step=step, **kw) is Verdict.CONVERGED:
        raise ValueError(f"expected no convergence at tau={hi}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if settled_verdict(params, mid, step=step, **kw) is Verdict.CONVERGED:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
