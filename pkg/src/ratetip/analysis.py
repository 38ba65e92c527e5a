"""Equilibria, linear stability and Hopf points of the co-moving systems."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, NoSignChange
from .models import (
    AshwinParams,
    Params,
    VdpParams,
    comoving_rhs,
    CoMovingState,
    poly_sum,
    poly_sum_deriv,
)
from .roots import newton_bisect

CENTER_TOL = 1e-12
_BRACKET_LIMIT = 10.0


class Stability(str, enum.Enum):
    STABLE_NODE = "stable-node"
    STABLE_FOCUS = "stable-focus"
    UNSTABLE_NODE = "unstable-node"
    UNSTABLE_FOCUS = "unstable-focus"
    SADDLE = "saddle"
    CENTER = "center"
    DEGENERATE = "degenerate"

    @property
    def is_stable(self) -> bool:
        return self in (Stability.STABLE_NODE, Stability.STABLE_FOCUS)


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    x1_star: float
    w_star: float
    jacobian: np.ndarray
    eigenvalues: tuple[complex, complex]
    stability: Stability

    @property
    def state(self) -> CoMovingState:
        return CoMovingState(self.x1_star, self.w_star)

    @property
    def max_real(self) -> float:
        return max(ev.real for ev in self.eigenvalues)


@dataclass(frozen=True)
class HopfReport:
    r_hopf: float
    x1_at_hopf: float
    omega: float


def jacobian_comoving(x1_star: float, p: Params) -> np.ndarray:
    eps = p.epsilon
    if isinstance(p, AshwinParams):
        return np.array(
            [[(2.0 * x1_star - 1.0) / eps, 1.0 / eps], [-poly_sum_deriv(x1_star, p.N), 0.0]]
        )
    return np.array([[(1.0 - x1_star * x1_star) / eps, 1.0 / eps], [-1.0, 0.0]])


def eigenvalues_analytic_ashwin(x1_star: float, p: AshwinParams) -> tuple[complex, complex]:
    """Closed-form eigenvalues of the polynomial-fold Jacobian, ``+`` root first."""
    eps = p.epsilon
    tr = 2.0 * x1_star - 1.0
    root = cmath.sqrt((1.0 - 2.0 * x1_star) ** 2 - 4.0 * eps * poly_sum_deriv(x1_star, p.N))
    return (tr + root) / (2.0 * eps), (tr - root) / (2.0 * eps)


def eigenvalues_2x2(m) -> tuple[complex, complex]:
    """Eigenvalues of a real 2x2 matrix from its trace and determinant.

    The larger-magnitude real root is formed first and the other recovered from
    the determinant, which avoids cancellation when the roots differ in scale.
    """
    (a, b), (c, d) = np.asarray(m, dtype=float).tolist()
    half_tr = 0.5 * (a + d)
    det = a * d - b * c
    disc = half_tr * half_tr - det
    if disc < 0.0:
        im = math.sqrt(-disc)
        return complex(half_tr, im), complex(half_tr, -im)
    q = half_tr + math.copysign(math.sqrt(disc), half_tr)
    if q == 0.0:
        return 0j, 0j
    return complex(q), complex(det / q)


def classify(eigenvalues) -> Stability:
    l1, l2 = (complex(ev) for ev in eigenvalues)
    if l1.imag != 0.0 or l2.imag != 0.0:
        re = 0.5 * (l1.real + l2.real)
        if abs(re) < CENTER_TOL:
            return Stability.CENTER
        return Stability.STABLE_FOCUS if re < 0 else Stability.UNSTABLE_FOCUS
    a, b = l1.real, l2.real
    if abs(a) < CENTER_TOL or abs(b) < CENTER_TOL:
        return Stability.DEGENERATE
    if abs(a - b) <= CENTER_TOL * max(abs(a), abs(b)):
        return Stability.DEGENERATE
    if a < 0 and b < 0:
        return Stability.STABLE_NODE
    if a > 0 and b > 0:
        return Stability.UNSTABLE_NODE
    return Stability.SADDLE


def _report(x1: float, w: float, p: Params) -> EquilibriumReport:
    jac = jacobian_comoving(x1, p)
    eigs = eigenvalues_2x2(jac)
    return EquilibriumReport(x1, w, jac, eigs, classify(eigs))


def solve_equilibrium_ashwin(p: AshwinParams) -> EquilibriumReport:
    """Unique equilibrium with ``x1* >= 0``: the root of ``S(x1) = r`` and ``w* = x1 - x1**2``."""
    r = p.r
    if r < 0:
        raise BracketFailure(f"no equilibrium with x1 >= 0 for r={r!r} < 0")
    N = p.N
    if r == 0.0:
        return _report(0.0, 0.0, p)
    hi = 1.0
    while poly_sum(hi, N) <= r:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            raise BracketFailure(f"S(x) = {r!r} not bracketed on [0, {_BRACKET_LIMIT}]")
    x, _, _ = newton_bisect(
        lambda x: poly_sum(x, N) - r,
        0.0,
        hi,
        lambda x: poly_sum_deriv(x, N),
        ftol=1e-12 * max(1.0, r),
    )
    return _report(x, x - x * x, p)


def solve_equilibrium_vdp(p: VdpParams) -> EquilibriumReport:
    x = p.r - p.alpha
    return _report(x, x**3 / 3.0 - x, p)


def solve_equilibrium(p: Params) -> EquilibriumReport:
    if isinstance(p, AshwinParams):
        return solve_equilibrium_ashwin(p)
    return solve_equilibrium_vdp(p)


def critical_rate(params: Params) -> float:
    """Rate at which the co-moving equilibrium loses stability.

    ``1 - 2**-N`` (the geometric sum of ``(1/2)**n``) for the polynomial fold,
    ``alpha - 1`` for van der Pol.
    """
    if isinstance(params, AshwinParams):
        return 1.0 - 2.0 ** (-params.N)
    return params.alpha - 1.0


def locate_hopf_numeric(
    params: Params, r_bracket: tuple[float, float], r_tol: float = 1e-10
) -> HopfReport:
    """Bisect on ``r`` for the zero of the leading eigenvalue's real part."""
    r_lo, r_hi = map(float, r_bracket)

    def leading(r: float) -> float:
        return solve_equilibrium(params.with_rate(r)).max_real

    g_lo, g_hi = leading(r_lo), leading(r_hi)
    if g_lo == 0.0 or g_hi == 0.0:
        r_mid = r_lo if g_lo == 0.0 else r_hi
    else:
        if (g_lo > 0) == (g_hi > 0):
            raise NoSignChange(
                f"leading real part has the same sign at r={r_lo!r} ({g_lo:.3e}) "
                f"and r={r_hi!r} ({g_hi:.3e})"
            )
        while abs(r_hi - r_lo) > r_tol:
            r_mid = 0.5 * (r_lo + r_hi)
            g_mid = leading(r_mid)
            if g_mid == 0.0:
                r_lo = r_hi = r_mid
                break
            if (g_mid > 0) == (g_lo > 0):
                r_lo, g_lo = r_mid, g_mid
            else:
                r_hi, g_hi = r_mid, g_mid
        r_mid = 0.5 * (r_lo + r_hi)
    eq = solve_equilibrium(params.with_rate(r_mid))
    omega = max(abs(ev.imag) for ev in eq.eigenvalues)
    return HopfReport(r_mid, eq.x1_star, omega)


def residual_norm(report: EquilibriumReport, p: Params) -> float:
    return math.hypot(*comoving_rhs(report.state, p))
