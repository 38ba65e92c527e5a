"""Adaptive Dormand-Prince 5(4) integration with Hermite dense output and events.

The integrator is explicit and deterministic. It is intended for the moderately
stiff fast/slow systems in :mod:`ratetip.models` (``epsilon >= 0.005``); for
stiffer problems it fails loudly with :class:`StepUnderflow` rather than
crawling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidParameters,
    NonFiniteState,
    OutOfRange,
    StepBudgetExceeded,
    StepUnderflow,
)
from .roots import newton_bisect

RHS = Callable[[float, np.ndarray], np.ndarray]

# Dormand & Prince (1980) tableau; the 7th stage is evaluated at the new point (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between 5th and embedded 4th order weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 1.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise InvalidParameters("rtol and atol must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise InvalidParameters("need 0 < h_min <= h_init <= h_max")
        if self.max_steps < 1:
            raise InvalidParameters("max_steps must be >= 1")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted integration nodes with derivatives for cubic Hermite interpolation."""

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    n_rejected: int = 0

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.derivs)):
            raise ValueError("times, states and derivs must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.states[-1]

    def __call__(self, t) -> np.ndarray:
        """Dense output at scalar ``t`` or at each entry of an array of times."""
        if np.ndim(t) == 0:
            return dense_eval(self, float(t))
        return _hermite_many(self, np.asarray(t, dtype=float))


class EventSpec(NamedTuple):
    """Zero crossing of ``guard(t, y)``.

    ``direction`` filters crossings by the sign of the guard's change; a
    ``terminal`` event stops the integration at the first accepted crossing.
    """

    guard: Callable[[float, np.ndarray], float]
    direction: Literal["rising", "falling", "both"] = "both"
    terminal: bool = False


class Crossing(NamedTuple):
    index: int
    t: float
    state: np.ndarray


def _hermite(t0, t1, y0, y1, f0, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1


def dense_eval(traj: Trajectory, t: float) -> np.ndarray:
    """Cubic Hermite interpolation of ``traj`` at ``t``; exact at stored nodes."""
    times = traj.times
    if not (times[0] <= t <= times[-1]):
        raise OutOfRange(f"t={t!r} outside [{times[0]!r}, {times[-1]!r}]")
    i = int(np.searchsorted(times, t, side="left"))
    if times[i] == t:
        return traj.states[i].copy()
    return _hermite(
        times[i - 1], times[i], traj.states[i - 1], traj.states[i],
        traj.derivs[i - 1], traj.derivs[i], t,
    )


def _hermite_many(traj: Trajectory, ts: np.ndarray) -> np.ndarray:
    times = traj.times
    if ts.size and (ts.min() < times[0] or ts.max() > times[-1]):
        raise OutOfRange("requested times outside the trajectory span")
    idx = np.clip(np.searchsorted(times, ts, side="left"), 1, len(times) - 1)
    t0, t1 = times[idx - 1], times[idx]
    h = (t1 - t0)[:, None]
    s = ((ts - t0) / (t1 - t0))[:, None]
    s2, s3 = s * s, s * s * s
    out = (
        (2 * s3 - 3 * s2 + 1) * traj.states[idx - 1]
        + (s3 - 2 * s2 + s) * h * traj.derivs[idx - 1]
        + (-2 * s3 + 3 * s2) * traj.states[idx]
        + (s3 - s2) * h * traj.derivs[idx]
    )
    exact = ts == t1
    out[exact] = traj.states[idx[exact]]
    exact0 = ts == t0
    out[exact0] = traj.states[idx[exact0] - 1]
    return out


def _triggered(direction: str, g0: float, g1: float) -> bool:
    if direction == "rising":
        return g0 < 0.0 <= g1
    if direction == "falling":
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def _locate(event: EventSpec, t0, t1, y0, y1, f0, f1, g0, g1):
    if g1 == 0.0:
        return t1, y1.copy()

    def phi(t):
        return event.guard(t, _hermite(t0, t1, y0, y1, f0, f1, t))

    # run to float resolution; the far end of the bracket keeps the guard on
    # the post-crossing side, so the direction filter holds exactly at t_cross
    _, _, tc = newton_bisect(phi, t0, t1, f_lo=g0, f_hi=g1)
    return tc, _hermite(t0, t1, y0, y1, f0, f1, tc)


def integrate(
    rhs: RHS,
    y0: Sequence[float],
    t_span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t_span[0]`` to ``t_span[1]``."""
    traj, _ = integrate_with_events(rhs, y0, t_span, cfg, ())
    return traj


def integrate_with_events(
    rhs: RHS,
    y0: Sequence[float],
    t_span: tuple[float, float],
    cfg: IntegratorConfig | None = None,
    events: Sequence[EventSpec] = (),
) -> tuple[Trajectory, list[Crossing]]:
    """Integrate and report guard crossings, stopping at the first terminal one.

    Crossings are detected by sign changes between accepted steps and refined
    on the Hermite interpolant of that step.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got {t_span!r}")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite")
    span = t1 - t0

    f = np.asarray(rhs(t0, y), dtype=float)
    times, states, derivs = [t0], [y], [f]
    g_prev = [ev.guard(t0, y) for ev in events]
    crossings: list[Crossing] = []

    h = min(cfg.h_init, cfg.h_max, span)
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(rhs, y, f, t0, t1, h, cfg, events, times, states, derivs, g_prev, crossings)


def _run(rhs, y, f, t0, t1, h, cfg, events, times, states, derivs, g_prev, crossings):
    rtol, atol = cfg.rtol, cfg.atol
    K = np.empty((7, y.size))
    t = t0
    err_prev = 1e-4
    n_steps = 0
    n_rejected = 0
    rejected = False
    while t < t1:
        if n_steps >= cfg.max_steps:
            raise StepBudgetExceeded(f"{cfg.max_steps} steps used before t={t1!r} (at t={t!r})")
        n_steps += 1
        last = t + h * (1.0 + 1e-8) >= t1
        if last:
            h = t1 - t

        K[0] = f
        for i, a in enumerate(_A):
            K[i + 1] = rhs(t + _C[i + 1] * h, y + h * (a @ K[: i + 1]))
        y_new = y + h * (_B @ K[:6])
        f_new = np.asarray(rhs(t + h, y_new), dtype=float)
        K[6] = f_new
        err_vec = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if not math.isfinite(err) or not np.all(np.isfinite(f_new)):
            n_rejected += 1
            rejected = True
            h *= _FAC_MIN
            if h < cfg.h_min:
                raise NonFiniteState(f"solution became non-finite near t={t!r}")
            continue

        if err > 1.0:
            n_rejected += 1
            rejected = True
            h *= max(_FAC_MIN, _SAFETY * err ** -0.2)
            if h < cfg.h_min:
                raise StepUnderflow(
                    f"step size {h:.3e} below h_min={cfg.h_min:g} at t={t!r}"
                )
            continue

        # accepted
        t_new = t1 if last else t + h
        if events:
            hits = []
            for k, ev in enumerate(events):
                g_new = ev.guard(t_new, y_new)
                if _triggered(ev.direction, g_prev[k], g_new):
                    tc, yc = _locate(ev, t, t_new, y, y_new, f, f_new, g_prev[k], g_new)
                    hits.append((tc, k, yc))
                g_prev[k] = g_new
            hits.sort(key=lambda item: (item[0], item[1]))
            for tc, k, yc in hits:
                crossings.append(Crossing(k, tc, yc))
                if events[k].terminal:
                    if tc > t:
                        times.append(tc)
                        states.append(yc)
                        derivs.append(np.asarray(rhs(tc, yc), dtype=float))
                    return _finish(times, states, derivs, n_rejected), crossings

        t, y, f = t_new, y_new, f_new
        times.append(t)
        states.append(y)
        derivs.append(f)

        fac = _SAFETY * max(err, 1e-10) ** -_ALPHA * err_prev**_BETA
        fac = min(_FAC_MAX, max(_FAC_MIN, fac))
        if rejected:
            fac = min(fac, 1.0)
        rejected = False
        err_prev = max(err, 1e-4)
        h = min(h * fac, cfg.h_max)

    return _finish(times, states, derivs, n_rejected), crossings


def _finish(times, states, derivs, n_rejected) -> Trajectory:
    return Trajectory(
        np.array(times), np.array(states), np.array(derivs), n_rejected=n_rejected
    )
