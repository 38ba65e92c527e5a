import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ratetip.errors import InvalidParameters, SingularFold
from ratetip.models import (
    SINGULAR_GUARD,
    AshwinParams,
    CoMovingState,
    Family,
    FullState,
    VdpParams,
    ashwin_comoving_rhs,
    ashwin_full_rhs,
    comoving_field,
    comoving_rhs,
    critical_manifold,
    critical_manifold_slope,
    desingularized_rhs,
    fold_points,
    from_comoving,
    full_field,
    full_rhs,
    make_params,
    poly_sum,
    poly_sum_deriv,
    reduced_rhs,
    to_comoving,
    vdp_comoving_rhs,
    vdp_full_rhs,
)

finite = st.floats(-10, 10, allow_nan=False)


class TestParams:
    @pytest.mark.parametrize("N", [4, 6, 3, 1, -5])
    def test_bad_degree(self, N):
        with pytest.raises(InvalidParameters, match="odd"):
            AshwinParams(epsilon=0.02, N=N)

    def test_non_integer_degree(self):
        with pytest.raises(InvalidParameters):
            AshwinParams(epsilon=0.02, N=5.5)

    @pytest.mark.parametrize("eps", [0.0, -0.1, math.nan])
    def test_bad_epsilon(self, eps):
        with pytest.raises(InvalidParameters):
            AshwinParams(epsilon=eps)
        with pytest.raises(InvalidParameters):
            VdpParams(epsilon=eps)

    @pytest.mark.parametrize("alpha", [1.0, 0.5, -2.0])
    def test_bad_alpha(self, alpha):
        with pytest.raises(InvalidParameters, match="alpha"):
            VdpParams(epsilon=0.02, alpha=alpha)

    def test_with_rate_keeps_other_fields(self):
        p = AshwinParams(epsilon=0.03, r=0.1, N=7).with_rate(0.9)
        assert (p.epsilon, p.r, p.N) == (0.03, 0.9, 7)
        q = VdpParams(epsilon=0.04, alpha=1.01).with_rate(0.2)
        assert (q.epsilon, q.r, q.alpha) == (0.04, 0.2, 1.01)

    def test_make_params(self):
        assert isinstance(make_params("ashwin", epsilon=0.02), AshwinParams)
        assert isinstance(make_params(Family.VDP, epsilon=0.02, alpha=2.0), VdpParams)
        with pytest.raises((InvalidParameters, ValueError)):
            make_params("lorenz", epsilon=0.02)


class TestPolySum:
    @pytest.mark.parametrize("x,N,expected", [(0, 5, 0), (1, 5, 5), (0.5, 5, 0.96875)])
    def test_values(self, x, N, expected):
        assert poly_sum(x, N) == expected

    @pytest.mark.parametrize("x,N,expected", [(0, 5, 1), (0.5, 5, 3.5625), (1, 5, 15)])
    def test_derivative_values(self, x, N, expected):
        assert poly_sum_deriv(x, N) == expected

    @pytest.mark.parametrize("N", [5, 7, 9])
    def test_closed_form(self, N):
        for x in np.linspace(-2, 2, 401):
            if abs(x - 1) < 1e-9 or x == 0:
                continue
            closed = (x - x ** (N + 1)) / (1 - x)
            assert poly_sum(x, N) == pytest.approx(closed, rel=1e-13)

    @pytest.mark.parametrize("N", range(5, 22, 2))
    def test_half_is_critical_rate(self, N):
        assert abs(poly_sum(0.5, N) - (1 - 2.0**-N)) <= 1e-15

    @pytest.mark.parametrize("N", [5, 7, 9])
    def test_derivative_matches_finite_difference(self, N):
        h = 1e-6
        for x in np.linspace(-1.5, 1.5, 100):
            fd = (poly_sum(x + h, N) - poly_sum(x - h, N)) / (2 * h)
            assert abs(poly_sum_deriv(x, N) - fd) <= 1e-6


class TestFields:
    def test_ashwin_full_examples(self):
        assert ashwin_full_rhs(FullState(0, 0, 0), AshwinParams(0.01, 0, 5)) == (0, 0, 0)
        assert ashwin_full_rhs(FullState(0, 0, 0), AshwinParams(0.01, 1, 5)) == (0, 0, 1)
        out = ashwin_full_rhs(FullState(0.5, 0.75, 0), AshwinParams(0.02, 1, 5))
        assert out == pytest.approx((25, -0.96875, 1), abs=1e-12)

    def test_ashwin_comoving_examples(self):
        assert ashwin_comoving_rhs(CoMovingState(0, 0), AshwinParams(0.02, 0, 5)) == (0, 0)
        hopf = AshwinParams(0.02, 0.96875, 5)
        assert ashwin_comoving_rhs(CoMovingState(0.5, 0.25), hopf) == (0, 0)
        assert ashwin_comoving_rhs(CoMovingState(0.5, 0.35), hopf) == pytest.approx((5, 0), abs=1e-12)

    def test_vdp_full_examples(self):
        a = 1.5
        s = FullState(-a, a - a**3 / 3, 0)
        assert vdp_full_rhs(s, VdpParams(0.02, 0, a)) == pytest.approx((0, 0, 0), abs=1e-15)
        assert vdp_full_rhs(FullState(0, 0, 0), VdpParams(0.02, 0.1, a)) == pytest.approx((0, -1.5, 0.1))
        out = vdp_full_rhs(FullState(1, -2 / 3, 0), VdpParams(0.02, 0.7, a))
        assert out == pytest.approx((0, -2.5, 0.7), abs=1e-12)

    def test_vdp_comoving_examples(self):
        a, r = 1.5, 0.3
        x = r - a
        assert vdp_comoving_rhs(CoMovingState(x, x**3 / 3 - x), VdpParams(0.02, r, a)) == pytest.approx(
            (0, 0), abs=1e-13
        )
        assert vdp_comoving_rhs(CoMovingState(-a, a - a**3 / 3), VdpParams(0.02, 0, a)) == pytest.approx(
            (0, 0), abs=1e-13
        )
        assert vdp_comoving_rhs(CoMovingState(0, 0), VdpParams(0.02, 0.5, a)) == pytest.approx((0, -1))

    def test_desingularized(self):
        p = AshwinParams(0.02, 0.96875, 5)
        assert desingularized_rhs(0.5, p) == 0
        assert desingularized_rhs(0.0, AshwinParams(0.02, 0.5, 5)) == 0.5
        assert desingularized_rhs(1.0, AshwinParams(0.02, 0.0, 5)) == -5

    def test_reduced(self):
        assert reduced_rhs(0.0, AshwinParams(0.02, 0.5, 5)) == 0.5
        with pytest.raises(SingularFold):
            reduced_rhs(0.5, AshwinParams(0.02, 0.5, 5))
        assert reduced_rhs(0.5 + 2 * SINGULAR_GUARD, AshwinParams(0.02, 0.5, 5)) != 0

    def test_reduced_shares_equilibrium(self):
        p = AshwinParams(0.02, 0.5, 5)
        x = 0.33426324237452
        assert abs(reduced_rhs(x, p)) < 1e-12

    @given(x=st.floats(-1.5, 1.5), r=st.floats(0, 2))
    def test_reduced_sign_relation(self, x, r):
        p = AshwinParams(0.02, r, 5)
        if abs(x - 0.5) <= SINGULAR_GUARD:
            return
        d, red = desingularized_rhs(x, p), reduced_rhs(x, p)
        if d == 0:
            assert red == 0
        elif x < 0.5:
            assert math.copysign(1, d) == math.copysign(1, red)
        else:
            assert math.copysign(1, d) == -math.copysign(1, red)

    @pytest.mark.parametrize("p", [AshwinParams(0.02, 0.7, 5), VdpParams(0.03, 0.4, 1.5)])
    def test_array_fields_match_records(self, p):
        cf, ff = comoving_field(p), full_field(p)
        for y in [(0.1, 0.2), (-1.3, 0.7), (0.5, 0.25)]:
            assert np.allclose(cf(0.0, np.array(y)), comoving_rhs(CoMovingState(*y), p), rtol=1e-15, atol=1e-15)
        for y in [(0.1, 0.2, 0.3), (-1.3, 0.7, 2.0)]:
            assert np.allclose(ff(0.0, np.array(y)), full_rhs(FullState(*y), p), rtol=1e-15, atol=1e-15)

    @given(x=st.floats(-3, 3), eps=st.floats(0.005, 0.1), r=st.floats(0, 3))
    def test_fast_component_vanishes_on_manifold(self, x, eps, r):
        for fam, p in (("ashwin", AshwinParams(eps, r, 5)), ("vdp", VdpParams(eps, r, 1.5))):
            w = critical_manifold(x, fam)
            assert abs(comoving_rhs(CoMovingState(x, w), p).x1 * eps) <= 1e-14 * max(1, abs(w))


class TestCoordinates:
    def test_examples(self):
        assert to_comoving(FullState(0, -0.7, 0.7)) == (0, 0)
        assert to_comoving(FullState(0.3, 1.0, 0.5)) == (0.3, 1.5)
        assert to_comoving(FullState(0.5, -0.7 + 0.25, 0.7)) == pytest.approx((0.5, 0.25))
        assert from_comoving(CoMovingState(0, 0), 0, 0.5) == (0, 0, 0)
        assert from_comoving(CoMovingState(0.2, 0.4), 12.0, 0) == (0.2, 0.4, 0)

    @given(x=finite, w=finite, t=st.floats(0, 100), r=st.floats(0, 5))
    def test_comoving_round_trip(self, x, w, t, r):
        back = to_comoving(from_comoving(CoMovingState(x, w), t, r))
        assert back.x1 == x
        assert back.w == pytest.approx(w, abs=1e-12 * max(1, r * t))

    @given(x=finite, x2=finite, t=st.floats(0, 100), r=st.floats(0, 5))
    def test_full_round_trip(self, x, x2, t, r):
        s = FullState(x, x2, r * t)
        back = from_comoving(to_comoving(s), t, r)
        assert back.x1 == x and back.lam == s.lam
        assert back.x2 == pytest.approx(x2, abs=1e-12 * max(1, r * t))


class TestGeometry:
    def test_manifold_values(self):
        assert critical_manifold(0.5, "ashwin") == 0.25
        assert critical_manifold(0.0, "ashwin") == 0
        assert critical_manifold(1.0, "vdp") == pytest.approx(-2 / 3)

    def test_folds(self):
        assert fold_points("ashwin") == [(0.5, 0.25)]
        v = fold_points(Family.VDP)
        assert len(v) == 2
        assert tuple(v[0]) == pytest.approx((-1, 2 / 3))
        assert tuple(v[1]) == pytest.approx((1, -2 / 3))

    @pytest.mark.parametrize("family", ["ashwin", "vdp"])
    def test_folds_are_on_manifold_with_zero_slope(self, family):
        for f in fold_points(family):
            assert abs(f.w - critical_manifold(f.x1, family)) <= 1e-14
            assert critical_manifold_slope(f.x1, family) == 0
