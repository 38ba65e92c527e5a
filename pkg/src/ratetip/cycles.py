"""Attracting limit cycles of the co-moving systems and sweeps over the rate.

A cycle is located through the first-return map of the half-line section
``{x1 = x1*, dx1/dt > 0}`` through the (unstable) equilibrium. Points on the
section are parameterised by their height ``s = w - w*`` above the equilibrium;
the cycle is the nonzero fixed point of the return map ``P``. Near the Hopf
point ``P'(s)`` is within ``1e-3`` of one, so plain forward iteration would need
thousands of returns. We therefore solve ``P(s) - s = 0`` with secant steps
(bracketed once the sign change is found) and only report convergence when
two successive section states agree to ``return_tol``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .analysis import EquilibriumReport, solve_equilibrium
from .errors import InsufficientData, InvalidParameters, NoConvergence, RateTipError
from .models import (
    AshwinParams,
    CoMovingState,
    Family,
    FullState,
    Params,
    comoving_field,
    from_comoving,
)
from .odeint import EventSpec, IntegratorConfig, integrate, integrate_with_events

MIN_SAMPLES = 400

STATUS_CYCLE = "cycle"
STATUS_STABLE = "stable"
STATUS_NO_CONVERGENCE = "no-convergence"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class CycleConfig:
    transient_time: float = 50.0
    max_returns: int = 200
    return_tol: float = 1e-9
    perturbation: float = 1e-4

    def __post_init__(self):
        if not (self.transient_time > 0 and self.return_tol > 0 and self.perturbation > 0):
            raise InvalidParameters("transient_time, return_tol and perturbation must be positive")
        if self.max_returns < 3:
            raise InvalidParameters("max_returns must be >= 3")


@dataclass(frozen=True, eq=False)
class LimitCycleResult:
    """Outcome of a cycle search at one rate.

    ``max_distance`` is measured from the co-moving equilibrium, the point a
    tracking state sits on; it is 0 for a stable row and grows continuously from
    0 through the Hopf point. ``max_distance_from_qse`` is measured from the
    fixed co-moving image of the quasi-static equilibrium (:func:`qse_comoving`).
    ``amplitude_x1`` is half the peak-to-peak excursion of ``x1``.
    """

    r: float
    status: str
    equilibrium: CoMovingState
    period: float = 0.0
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    max_distance: float = 0.0
    max_distance_from_qse: float = 0.0
    amplitude_x1: float = 0.0
    peak_to_peak_x1: float = 0.0
    returns_used: int = 0
    section_state: Optional[CoMovingState] = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CYCLE

    @property
    def stable(self) -> bool:
        return self.status == STATUS_STABLE


@dataclass(frozen=True, eq=False)
class SweepResult:
    family: Family
    epsilon: float
    rows: tuple[tuple[float, LimitCycleResult], ...]

    def __post_init__(self):
        rs = [r for r, _ in self.rows]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise InvalidParameters("sweep rows must be strictly increasing in r")

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.rows])

    @property
    def max_distances(self) -> np.ndarray:
        return np.array([res.max_distance for _, res in self.rows])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([res.amplitude_x1 for _, res in self.rows])


def qse_comoving(params: Params) -> CoMovingState:
    """Co-moving image of the quasi-static equilibrium (the ``r = 0`` equilibrium)."""
    if isinstance(params, AshwinParams):
        return CoMovingState(0.0, 0.0)
    a = params.alpha
    return CoMovingState(-a, a - a**3 / 3.0)


def _stable_marker(params: Params, eq: EquilibriumReport, returns_used=0, message="") -> LimitCycleResult:
    qse = qse_comoving(params)
    point = np.array([[eq.x1_star, eq.w_star]])
    return LimitCycleResult(
        r=params.r,
        status=STATUS_STABLE,
        equilibrium=eq.state,
        times=np.zeros(1),
        samples=point,
        max_distance_from_qse=math.hypot(eq.x1_star - qse.x1, eq.w_star - qse.w),
        returns_used=returns_used,
        message=message,
    )


class _ReturnMap:
    """First-return map of the section through the equilibrium.

    Integration runs in coordinates centred on the equilibrium so the relative
    error control scales with the cycle, not with the offset ``(x1*, w*)``;
    otherwise small cycles near the Hopf point pick up a numerical damping
    comparable to their true growth rate.
    """

    def __init__(self, params: Params, eq: EquilibriumReport, integ: IntegratorConfig, t_max: float):
        field_ = comoving_field(params)
        self.center = np.array([eq.x1_star, eq.w_star])
        center = self.center
        self.rhs = lambda t, z: field_(t, z + center)
        self.integ = integ
        self.t_max = t_max
        self.event = EventSpec(lambda t, z: z[0], "rising", terminal=True)

    def next_crossing(self, z0):
        """Integrate from deviation state ``z0`` to the next upward section crossing."""
        traj, hits = integrate_with_events(self.rhs, z0, (0.0, self.t_max), self.integ, [self.event])
        if not hits:
            raise NoConvergence(f"no section crossing within t={self.t_max:g}")
        return float(hits[0].state[1]), hits[0].t, traj

    def __call__(self, s: float):
        return self.next_crossing(np.array([0.0, s]))


def _return_time_limit(eq: EquilibriumReport, cfg: CycleConfig) -> float:
    omega = max(abs(ev.imag) for ev in eq.eigenvalues)
    if omega > 0:
        return max(cfg.transient_time, 50.0 * 2.0 * math.pi / omega)
    return cfg.transient_time


def _linear_return_growth(eq: EquilibriumReport) -> float:
    """Relative growth ``P(s)/s - 1`` of the linearised return map as ``s -> 0``."""
    re = eq.max_real
    omega = max(abs(ev.imag) for ev in eq.eigenvalues)
    if omega == 0.0:
        return math.inf
    return math.expm1(2.0 * math.pi * re / omega)


def _secant(p0, p1):
    (s0, g0), (s1, g1) = p0, p1
    if g1 == g0:
        return None
    cand = s1 - g1 * (s1 - s0) / (g1 - g0)
    return cand if math.isfinite(cand) else None


def find_limit_cycle(
    params: Params,
    cfg: CycleConfig | None = None,
    integ: IntegratorConfig | None = None,
    seed: Sequence[float] | None = None,
) -> LimitCycleResult:
    """Converge the attracting cycle born at the Hopf point, if the equilibrium is unstable.

    ``seed`` warm-starts the search from a state (typically a nearby cycle's
    section point); the transient is skipped in that case. Exhausting
    ``max_returns`` is reported through ``status``, not raised; integrator
    failures propagate.
    """
    cfg = cfg or CycleConfig()
    integ = integ or IntegratorConfig()
    eq = solve_equilibrium(params)
    if eq.max_real <= 0.0:
        return _stable_marker(params, eq)

    pmap = _ReturnMap(params, eq, integ, _return_time_limit(eq, cfg))
    if seed is None:
        z = np.array([cfg.perturbation, 0.0])
        z = integrate(pmap.rhs, z, (0.0, cfg.transient_time), integ).y_final
    else:
        z = np.asarray(seed, dtype=float) - pmap.center
    s, _, _ = pmap.next_crossing(z)
    returns = 1

    # Root-find q(u) = g(s) / s in u = s**2 rather than g itself: this removes
    # the trivial root at the equilibrium, and near the Hopf point
    # q ~ mu - c u is linear in u, so secant steps land almost on the cycle.
    q_lin = _linear_return_growth(eq)
    pts: list[tuple[float, float]] = []
    lo = hi = None  # latest evaluations with q > 0 and q < 0
    widths: list[float] = []
    while returns < cfg.max_returns:
        s_next, period, traj = pmap(s)
        returns += 1
        g = s_next - s
        q = g / s
        if abs(g) <= cfg.return_tol and abs(q) < 0.5 * q_lin:
            return _measure(params, eq, s, s_next, period, traj, returns)
        u = s * s
        pts.append((u, q))
        if q > 0:
            lo = (u, q)
        else:
            hi = (u, q)
        cand = _secant(pts[-2], pts[-1]) if len(pts) >= 2 else None
        if lo is not None and hi is not None:
            a, b = sorted((lo[0], hi[0]))
            if b - a <= 4.0 * math.ulp(b):
                break
            # bisect when the secant leaves the bracket or stalls
            if cand is None or not (a < cand < b) or (len(widths) >= 2 and b - a > 0.5 * widths[-2]):
                cand = 0.5 * (a + b)
            widths.append(b - a)
            s = math.sqrt(cand)
        elif cand is not None and (cand - u) * q > 0:
            # extrapolate towards the cycle, at most a factor 4 in s per step
            s = math.sqrt(min(max(cand, u / 16.0), 16.0 * u))
        elif abs(q) > 1.0 and s_next > 0:
            s = s_next
        else:
            s = 2.0 * s if q > 0 else 0.5 * s

    eq_state = eq.state
    return LimitCycleResult(
        r=params.r,
        status=STATUS_NO_CONVERGENCE,
        equilibrium=eq_state,
        returns_used=returns,
        section_state=CoMovingState(eq.x1_star, eq.w_star + s),
        message=f"return map not converged to {cfg.return_tol:g} after {returns} returns",
    )


def _measure(params, eq, s, s_next, period, traj, returns) -> LimitCycleResult:
    ts = np.union1d(np.linspace(0.0, period, MIN_SAMPLES), traj.times)
    ts = ts[ts <= period]
    samples = traj(ts)
    samples[0] = (0.0, s)
    samples[-1] = traj.states[-1]
    samples += (eq.x1_star, eq.w_star)
    dist = np.hypot(samples[:, 0] - eq.x1_star, samples[:, 1] - eq.w_star)
    qse = qse_comoving(params)
    dist_qse = np.hypot(samples[:, 0] - qse.x1, samples[:, 1] - qse.w)
    ptp = float(samples[:, 0].max() - samples[:, 0].min())
    return LimitCycleResult(
        r=params.r,
        status=STATUS_CYCLE,
        equilibrium=eq.state,
        period=float(period),
        times=ts,
        samples=samples,
        max_distance=float(dist.max()),
        max_distance_from_qse=float(dist_qse.max()),
        amplitude_x1=0.5 * ptp,
        peak_to_peak_x1=ptp,
        returns_used=returns,
        section_state=CoMovingState(eq.x1_star, eq.w_star + s),
    )


def _row(params, cfg, integ, seed=None) -> LimitCycleResult:
    try:
        return find_limit_cycle(params, cfg, integ, seed)
    except RateTipError as exc:
        try:
            eq = solve_equilibrium(params).state
        except RateTipError:
            eq = CoMovingState(math.nan, math.nan)
        return LimitCycleResult(
            r=params.r, status=STATUS_FAILED, equilibrium=eq,
            message=f"{type(exc).__name__}: {exc}",
        )


def _row_star(args):
    return _row(*args)


def rate_sweep(
    params: Params,
    r_grid: Iterable[float],
    cfg: CycleConfig | None = None,
    integ: IntegratorConfig | None = None,
    *,
    warm_start: bool = True,
    workers: int = 1,
) -> SweepResult:
    """Run :func:`find_limit_cycle` at every rate of an increasing grid.

    With ``warm_start`` each row is seeded from the previous converged cycle
    and rows run sequentially; otherwise rows are independent and may run in
    a process pool of ``workers``. Rows always come back in grid order, and a
    failing row is recorded in place rather than aborting the sweep.
    """
    cfg = cfg or CycleConfig()
    integ = integ or IntegratorConfig()
    grid = [float(r) for r in r_grid]
    if not grid:
        raise InvalidParameters("r_grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameters("r_grid must be strictly increasing")

    if warm_start:
        results = []
        seed = None
        for r in grid:
            res = _row(params.with_rate(r), cfg, integ, seed)
            seed = np.array(res.section_state) if res.converged else None
            results.append(res)
    else:
        jobs = [(params.with_rate(r), cfg, integ, None) for r in grid]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_row_star, jobs))
        else:
            results = [_row_star(job) for job in jobs]
    return SweepResult(params.family, params.epsilon, tuple(zip(grid, results)))


def explosion_rate(sweep: SweepResult) -> float:
    """Midpoint of the grid interval with the steepest rise in ``max_distance``.

    Rows that neither converged nor are stable are skipped; ties go to the
    smallest rate.
    """
    rows = [(r, res.max_distance) for r, res in sweep.rows if res.converged or res.stable]
    n_cycles = sum(1 for _, res in sweep.rows if res.converged)
    if len(rows) < 3 or n_cycles < 1:
        raise InsufficientData("need at least 3 usable rows including a converged cycle")
    best, best_slope = None, -math.inf
    for (r0, d0), (r1, d1) in zip(rows, rows[1:]):
        slope = (d1 - d0) / (r1 - r0)
        if slope > best_slope:
            best, best_slope = 0.5 * (r0 + r1), slope
    return best


def spiral_trajectory(
    cycle: LimitCycleResult,
    r: float | None = None,
    t0: float = 0.0,
    t_end: float | None = None,
    n_stable: int = 200,
) -> tuple[np.ndarray, np.ndarray]:
    """Replay a co-moving cycle from ``t0`` and lift it to ``(x1, x2, lambda)``.

    Returns ``(times, states)`` with ``states[:, 1] + states[:, 2]`` periodic in
    the cycle's period. A stable marker lifts to the straight line
    ``x2 = w* - r t``. ``t_end`` defaults to one period (or one time unit for a
    stable marker).
    """
    r = cycle.r if r is None else r
    if cycle.stable:
        t_end = t0 + 1.0 if t_end is None else t_end
        times = np.linspace(t0, t_end, n_stable)
        co = np.repeat(np.asarray(cycle.samples[:1]), len(times), axis=0)
    else:
        if not cycle.converged:
            raise InvalidParameters("spiral_trajectory needs a converged cycle")
        T = cycle.period
        t_end = t0 + T if t_end is None else t_end
        base_t = cycle.times[:-1]
        base_y = cycle.samples[:-1]
        n_periods = max(1, math.ceil((t_end - t0) / T))
        times = np.concatenate([t0 + k * T + base_t for k in range(n_periods)] + [[t0 + n_periods * T]])
        co = np.concatenate([base_y] * n_periods + [cycle.samples[:1]])
        keep = times <= t_end + 1e-12 * max(1.0, abs(t_end))
        times, co = times[keep], co[keep]
    lam = r * times
    states = np.column_stack((co[:, 0], co[:, 1] - lam, lam))
    return times, states


def spiral_states(cycle: LimitCycleResult, r: float | None = None, t0: float = 0.0) -> list[FullState]:
    """One period of :func:`spiral_trajectory` as :class:`FullState` records."""
    r = cycle.r if r is None else r
    times, _ = spiral_trajectory(cycle, r, t0)
    co = cycle.samples if not cycle.stable else np.repeat(cycle.samples[:1], len(times), axis=0)
    return [from_comoving(CoMovingState(*row), t, r) for row, t in zip(co[: len(times)], times)]
