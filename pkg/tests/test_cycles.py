import math

import numpy as np
import pytest

from ratetip.cycles import (
    MIN_SAMPLES,
    STATUS_CYCLE,
    STATUS_STABLE,
    CycleConfig,
    LimitCycleResult,
    SweepResult,
    explosion_rate,
    find_limit_cycle,
    qse_comoving,
    rate_sweep,
    spiral_states,
    spiral_trajectory,
)
from ratetip.errors import InsufficientData, InvalidParameters
from ratetip.models import AshwinParams, CoMovingState, Family, VdpParams
from ratetip.odeint import IntegratorConfig

RC = 0.96875
OMEGA = 13.346347815039138


@pytest.fixture(scope="module")
def cycle_r1():
    return find_limit_cycle(AshwinParams(0.02, 1.0, 5))


def synthetic(rates, dists):
    rows = tuple(
        (r, LimitCycleResult(r=r, status=STATUS_CYCLE, equilibrium=CoMovingState(0, 0), max_distance=d))
        for r, d in zip(rates, dists)
    )
    return SweepResult(Family.ASHWIN, 0.02, rows)


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [dict(transient_time=0), dict(max_returns=2), dict(return_tol=-1), dict(perturbation=0)]
    )
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameters):
            CycleConfig(**kw)


class TestQse:
    def test_values(self):
        assert qse_comoving(AshwinParams(0.02)) == (0, 0)
        assert qse_comoving(VdpParams(0.02, alpha=1.5)) == pytest.approx((-1.5, 0.375))

    @pytest.mark.parametrize("p", [AshwinParams(0.02, 0, 5), VdpParams(0.02, 0, 1.5), VdpParams(0.03, 0, 1.01)])
    def test_is_unforced_equilibrium(self, p):
        from ratetip.models import comoving_rhs

        q = qse_comoving(p)
        assert math.hypot(*comoving_rhs(q, p)) <= 1e-12


class TestFindLimitCycle:
    def test_stable_marker(self):
        res = find_limit_cycle(AshwinParams(0.02, 0.95, 5))
        assert res.stable and not res.converged
        assert res.max_distance == 0 and res.amplitude_x1 == 0 and res.period == 0

    def test_cycle_around_fold(self, cycle_r1):
        res = cycle_r1
        assert res.converged
        assert len(res.samples) >= MIN_SAMPLES
        assert np.linalg.norm(res.samples[0] - res.samples[-1]) <= CycleConfig().return_tol
        x = res.samples[:, 0]
        assert x.min() < 0.5 < x.max()
        assert res.amplitude_x1 == pytest.approx(0.5 * (x.max() - x.min()))
        assert res.peak_to_peak_x1 == pytest.approx(x.max() - x.min())

    def test_distance_fields(self, cycle_r1):
        res = cycle_r1
        q = np.array(qse_comoving(AshwinParams(0.02)))
        dq = np.linalg.norm(res.samples - q, axis=1)
        assert res.max_distance_from_qse >= dq.max() - 1e-12
        assert res.max_distance_from_qse == pytest.approx(dq.max(), abs=1e-12)
        de = np.linalg.norm(res.samples - np.array(res.equilibrium), axis=1)
        assert res.max_distance == pytest.approx(de.max(), abs=1e-12)

    def test_cycle_is_a_periodic_orbit(self, cycle_r1):
        from ratetip.models import comoving_field
        from ratetip.odeint import integrate

        p = AshwinParams(0.02, 1.0, 5)
        y0 = cycle_r1.samples[0]
        traj = integrate(comoving_field(p), y0, (0, cycle_r1.period), IntegratorConfig(rtol=1e-10, atol=1e-12))
        assert np.linalg.norm(traj.y_final - y0) < 1e-6

    def test_period_near_onset(self):
        res = find_limit_cycle(AshwinParams(0.02, RC + 1e-4, 5))
        assert res.converged
        assert abs(res.period - 2 * math.pi / OMEGA) <= 0.05 * 2 * math.pi / OMEGA

    def test_square_root_amplitude_law(self):
        d = 1e-5
        a1 = find_limit_cycle(AshwinParams(0.02, RC + d, 5)).amplitude_x1
        a4 = find_limit_cycle(AshwinParams(0.02, RC + 4 * d, 5)).amplitude_x1
        assert 1.6 <= a4 / a1 <= 2.4

    def test_onset_continuity(self):
        res = find_limit_cycle(AshwinParams(0.02, RC + 1e-3, 5))
        assert res.converged and res.max_distance < 0.2

    def test_warm_seed_reaches_same_cycle(self, cycle_r1):
        p = AshwinParams(0.02, 1.0, 5)
        warm = find_limit_cycle(p, seed=np.array(cycle_r1.section_state) * 1.01)
        assert warm.converged
        assert warm.max_distance_from_qse == pytest.approx(cycle_r1.max_distance_from_qse, abs=1e-6)

    def test_vdp_restabilised(self):
        res = find_limit_cycle(VdpParams(0.02, 2.6, 1.5))
        assert res.stable


class TestSweep:
    def test_below_critical_all_stable(self):
        sw = rate_sweep(AshwinParams(0.02, 0, 5), [0.2, 0.5, 0.9])
        assert all(res.stable for _, res in sw.rows)
        assert np.all(sw.max_distances == 0)

    def test_rows_ordered_and_validated(self):
        with pytest.raises(InvalidParameters):
            rate_sweep(AshwinParams(0.02, 0, 5), [0.5, 0.4])
        with pytest.raises(InvalidParameters):
            rate_sweep(AshwinParams(0.02, 0, 5), [])
        with pytest.raises(InvalidParameters):
            synthetic([1.0, 1.0], [0, 0])

    def test_warm_and_cold_agree(self):
        grid = [0.96, 0.98, 1.0, 1.02, 1.05]
        p = AshwinParams(0.02, 0, 5)
        warm = rate_sweep(p, grid, warm_start=True)
        cold = rate_sweep(p, grid, warm_start=False)
        for (_, a), (_, b) in zip(warm.rows, cold.rows):
            assert a.status == b.status
            assert abs(a.max_distance_from_qse - b.max_distance_from_qse) <= 1e-6

    def test_parallel_matches_serial(self):
        grid = [0.97, 0.99, 1.01]
        p = VdpParams(0.02, 0, 1.01)
        serial = rate_sweep(p, grid, warm_start=False, workers=1)
        pooled = rate_sweep(p, grid, warm_start=False, workers=3)
        assert list(serial.rates) == list(pooled.rates)
        assert np.array_equal(serial.max_distances, pooled.max_distances)

    def test_failed_row_is_recorded(self):
        sw = rate_sweep(AshwinParams(0.02, 0, 5), [0.5, 1.0], integ=IntegratorConfig(max_steps=20))
        assert sw.rows[0][1].stable
        failed = sw.rows[1][1]
        assert failed.status == "failed" and "StepBudgetExceeded" in failed.message


class TestExplosionRate:
    def test_linear_tie_goes_to_first_interval(self):
        assert explosion_rate(synthetic([0, 1, 2, 3], [0, 1, 2, 3])) == 0.5

    def test_steepest_interval(self):
        assert explosion_rate(synthetic([0, 1, 2, 3, 4], [0, 0.1, 0.2, 5, 5.1])) == 2.5

    def test_needs_three_rows(self):
        with pytest.raises(InsufficientData):
            explosion_rate(synthetic([0, 1], [0, 1]))

    def test_needs_a_cycle(self):
        rows = tuple(
            (r, LimitCycleResult(r=r, status=STATUS_STABLE, equilibrium=CoMovingState(0, 0))) for r in (0, 1, 2)
        )
        with pytest.raises(InsufficientData):
            explosion_rate(SweepResult(Family.ASHWIN, 0.02, rows))


class TestSpiral:
    def test_stable_marker_is_a_line(self):
        res = find_limit_cycle(AshwinParams(0.02, 0.5, 5))
        times, states = spiral_trajectory(res, t0=2.0, t_end=5.0)
        w_star = res.samples[0, 1]
        assert np.allclose(states[:, 1], w_star - 0.5 * times, atol=1e-14)
        assert np.allclose(states[:, 2], 0.5 * times)

    def test_comoving_part_is_periodic(self, cycle_r1):
        T = cycle_r1.period
        times, states = spiral_trajectory(cycle_r1, t0=1.0, t_end=1.0 + 3 * T)
        w = states[:, 1] + states[:, 2]
        n = len(cycle_r1.samples) - 1
        assert np.allclose(w[:n], w[n : 2 * n], atol=1e-12)
        assert np.allclose(times[n : 2 * n] - times[:n], T)

    def test_winds_around_moving_fold(self, cycle_r1):
        states = spiral_states(cycle_r1, t0=0.0)
        assert len(states) == len(cycle_r1.samples)
        x = np.array([s.x1 for s in states])
        height = np.array([s.x2 + s.lam for s in states]) - 0.25
        # the lifted orbit passes on both sides of the fold line in both coordinates
        assert x.min() < 0.5 < x.max()
        assert height.min() < 0 < height.max()

    def test_rejects_unconverged(self):
        bad = LimitCycleResult(r=1.0, status="no-convergence", equilibrium=CoMovingState(0, 0))
        with pytest.raises(InvalidParameters):
            spiral_trajectory(bad)
