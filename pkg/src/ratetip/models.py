"""Model families: the polynomial fold system and the forced van der Pol oscillator.

Both families are fast/slow systems driven by a linear ramp ``lambda(t) = r t``.
Each has a full non-autonomous form in ``(x1, x2, lambda)`` and an autonomous
co-moving form in ``(x1, w)`` with ``w = x2 + lambda``, in which the rate ``r``
is an ordinary bifurcation parameter.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import InvalidParameters, SingularFold

#: half-width of the excluded band around the fold for :func:`reduced_rhs`
SINGULAR_GUARD = 1e-8


class Family(str, enum.Enum):
    ASHWIN = "ashwin"
    VDP = "vdp"


@dataclass(frozen=True)
class AshwinParams:
    """Polynomial fold system: time-scale ``epsilon``, rate ``r``, degree ``N`` (odd, >= 5)."""

    epsilon: float
    r: float = 0.0
    N: int = 5

    family = Family.ASHWIN

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameters(f"epsilon must be > 0, got {self.epsilon}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise InvalidParameters(f"r must be >= 0, got {self.r}")
        if isinstance(self.N, bool) or int(self.N) != self.N:
            raise InvalidParameters(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 5 or self.N % 2 == 0:
            raise InvalidParameters(f"N must be odd and >= 5, got {self.N}")

    def with_rate(self, r: float) -> "AshwinParams":
        return dataclasses.replace(self, r=r)


@dataclass(frozen=True)
class VdpParams:
    """Forced van der Pol system: time-scale ``epsilon``, rate ``r``, offset ``alpha > 1``."""

    epsilon: float
    r: float = 0.0
    alpha: float = 1.5

    family = Family.VDP

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameters(f"epsilon must be > 0, got {self.epsilon}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise InvalidParameters(f"r must be >= 0, got {self.r}")
        if not (math.isfinite(self.alpha) and self.alpha > 1):
            raise InvalidParameters(f"alpha must be > 1, got {self.alpha}")

    def with_rate(self, r: float) -> "VdpParams":
        return dataclasses.replace(self, r=r)


Params = Union[AshwinParams, VdpParams]


class FullState(NamedTuple):
    x1: float
    x2: float
    lam: float


class CoMovingState(NamedTuple):
    x1: float
    w: float


class FoldPoint(NamedTuple):
    x1: float
    w: float


def make_params(family: Family | str, **kwargs) -> Params:
    family = Family(family)
    if family is Family.ASHWIN:
        return AshwinParams(**kwargs)
    return VdpParams(**kwargs)


# -- polynomial helpers -------------------------------------------------------


def poly_sum(x: float, N: int) -> float:
    """Return ``x + x**2 + ... + x**N`` by Horner's rule."""
    acc = 1.0
    for _ in range(N - 1):
        acc = 1.0 + x * acc
    return x * acc


def poly_sum_deriv(x: float, N: int) -> float:
    """Return ``1 + 2 x + ... + N x**(N-1)``, the derivative of :func:`poly_sum`."""
    acc = float(N)
    for n in range(N - 1, 0, -1):
        acc = n + x * acc
    return acc


# -- polynomial fold system ---------------------------------------------------


def ashwin_full_rhs(s: FullState, p: AshwinParams) -> FullState:
    x1, x2, lam = s
    return FullState(
        (x2 + lam + x1 * (x1 - 1.0)) / p.epsilon,
        -poly_sum(x1, p.N),
        p.r,
    )


def ashwin_comoving_rhs(s: CoMovingState, p: AshwinParams) -> CoMovingState:
    x1, w = s
    return CoMovingState((w + x1 * (x1 - 1.0)) / p.epsilon, p.r - poly_sum(x1, p.N))


def desingularized_rhs(x1: float, p: AshwinParams) -> float:
    """Slow flow on the critical manifold after the time rescaling ``dt/dtau = -(2 x1 - 1)``.

    Regular through the fold; its time direction is reversed relative to
    :func:`reduced_rhs` on the repelling branch ``x1 > 1/2``.
    """
    return p.r - poly_sum(x1, p.N)


def reduced_rhs(x1: float, p: AshwinParams, guard: float = SINGULAR_GUARD) -> float:
    """Slow flow on the critical manifold, ``(S(x1) - r) / (2 x1 - 1)``.

    Raises :class:`SingularFold` within ``guard`` of the fold ``x1 = 1/2``.
    """
    denom = 2.0 * x1 - 1.0
    if abs(denom) <= guard:
        raise SingularFold(f"reduced flow is singular at the fold (x1={x1!r})")
    return (poly_sum(x1, p.N) - p.r) / denom


# -- forced van der Pol -------------------------------------------------------


def vdp_full_rhs(s: FullState, p: VdpParams) -> FullState:
    x1, x2, lam = s
    return FullState(
        (x2 + x1 - x1**3 / 3.0 + lam) / p.epsilon,
        -x1 - p.alpha,
        p.r,
    )


def vdp_comoving_rhs(s: CoMovingState, p: VdpParams) -> CoMovingState:
    x1, w = s
    return CoMovingState((w + x1 - x1**3 / 3.0) / p.epsilon, p.r - x1 - p.alpha)


# -- coordinates and geometry -------------------------------------------------


def to_comoving(s: FullState) -> CoMovingState:
    return CoMovingState(s.x1, s.x2 + s.lam)


def from_comoving(s: CoMovingState, t: float, r: float) -> FullState:
    """Lift a co-moving state at time ``t`` back to ``(x1, x2, lambda)`` with ``lambda = r t``."""
    lam = r * t
    return FullState(s.x1, s.w - lam, lam)


def critical_manifold(x1, family: Family | str):
    """Height ``w`` of the fast nullcline above ``x1`` (works elementwise on arrays)."""
    if Family(family) is Family.ASHWIN:
        return x1 - x1 * x1
    return x1**3 / 3.0 - x1


def critical_manifold_slope(x1, family: Family | str):
    if Family(family) is Family.ASHWIN:
        return 1.0 - 2.0 * x1
    return x1 * x1 - 1.0


def fold_points(family: Family | str, params: Params | None = None) -> list[FoldPoint]:
    """Turning points of the critical manifold, sorted by ``x1``.

    The fold locations do not depend on the parameters in co-moving coordinates;
    ``params`` is accepted for call-site symmetry.
    """
    family = Family(family)
    if family is Family.ASHWIN:
        xs = [0.5]
    else:
        xs = [-1.0, 1.0]
    return [FoldPoint(x, float(critical_manifold(x, family))) for x in xs]


# -- array-valued vector fields for the integrator ----------------------------


def comoving_field(p: Params) -> Callable[[float, np.ndarray], np.ndarray]:
    """Return ``f(t, y)`` for the co-moving system, suitable for :mod:`ratetip.odeint`."""
    eps, r = float(p.epsilon), float(p.r)
    if isinstance(p, AshwinParams):
        N = p.N

        def f(t, y):
            x1, w = y.tolist()
            acc = 1.0
            for _ in range(N - 1):
                acc = 1.0 + x1 * acc
            return np.array(((w + x1 * (x1 - 1.0)) / eps, r - x1 * acc))

    else:
        alpha = float(p.alpha)

        def f(t, y):
            x1, w = y.tolist()
            return np.array(((w + x1 - x1 * x1 * x1 / 3.0) / eps, r - x1 - alpha))

    return f


def full_field(p: Params) -> Callable[[float, np.ndarray], np.ndarray]:
    """Return ``f(t, y)`` for the full system in ``(x1, x2, lambda)``."""
    eps, r = float(p.epsilon), float(p.r)
    if isinstance(p, AshwinParams):
        N = p.N

        def f(t, y):
            x1, x2, lam = y.tolist()
            acc = 1.0
            for _ in range(N - 1):
                acc = 1.0 + x1 * acc
            return np.array(((x2 + lam + x1 * (x1 - 1.0)) / eps, -x1 * acc, r))

    else:
        alpha = float(p.alpha)

        def f(t, y):
            x1, x2, lam = y.tolist()
            return np.array(((x2 + x1 - x1 * x1 * x1 / 3.0 + lam) / eps, -x1 - alpha, r))

    return f


def comoving_rhs(s: CoMovingState, p: Params) -> CoMovingState:
    if isinstance(p, AshwinParams):
        return ashwin_comoving_rhs(s, p)
    return vdp_comoving_rhs(s, p)


def full_rhs(s: FullState, p: Params) -> FullState:
    if isinstance(p, AshwinParams):
        return ashwin_full_rhs(s, p)
    return vdp_full_rhs(s, p)
