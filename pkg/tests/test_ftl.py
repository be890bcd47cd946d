import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lagtraffic.ftl import (DensityProfile, FtlState, OrderingError,
                            arithmetic_mean_density, box_profile,
                            discretize_density, euler_step,
                            harmonic_mean_density, mass_centroid,
                            reconstruct_density, simulate, speeds_local,
                            speeds_nonlocal_eulerian,
                            speeds_nonlocal_lagrangian)
from lagtraffic.kernels import Kernel, WeightRow, lagrangian_weights
from lagtraffic.velocity import linear_velocity

MODEL = linear_velocity()


class TestDensityProfile:
    def test_box_values(self):
        rho = box_profile()
        assert rho(0.0) == 1.0
        assert rho(2.0) == 0.05
        assert rho(-2.0) == 0.05

    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            DensityProfile(breaks=[0.0], values=[0.5, 1.5])
        with pytest.raises(ValueError):
            DensityProfile(breaks=[0.0], values=[0.0, 0.5])
        with pytest.raises(ValueError):
            DensityProfile(breaks=[1.0, 0.5], values=[0.1, 0.2, 0.3])


class TestDiscretize:
    def test_constant_density_uniform_spacing(self):
        rho = DensityProfile(breaks=[], values=[0.5])
        state = discretize_density(rho, ell=0.1, a=0.0, b=1.0)
        np.testing.assert_allclose(np.diff(state.x), 0.2, atol=1e-14)
        assert state.x[0] == 0.0
        assert state.u_last == 0.5
        assert state.u_left == 0.5

    def test_box_data_spacings(self):
        state = discretize_density(box_profile(), ell=0.06, a=-0.75, b=0.75)
        # cars inside the box sit one car length apart
        assert np.allclose(np.diff(state.x), 0.06, atol=1e-12)
        # past the box edge the spacing becomes ell/0.05 = 1.2 (leader's
        # virtual gap)
        assert state.spacings()[-1] == pytest.approx(1.2, abs=1e-12)
        # car count tracks the enclosed mass 1.5 (float rounding may drop
        # the crossing car)
        assert state.n_cars in (25, 26)
        assert state.u_last == 0.05
        assert state.u_left == 0.05

    def test_box_data_dyadic_exact(self):
        state = discretize_density(box_profile(), ell=0.0625, a=-0.75, b=0.75)
        assert state.n_cars == 25
        np.testing.assert_allclose(np.diff(state.x), 0.0625, atol=0)

    def test_densities_at_most_one(self):
        state = discretize_density(box_profile(), ell=0.03, a=-0.75, b=0.75)
        assert np.all(state.densities() <= 1.0 + 1e-12)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            discretize_density(box_profile(), ell=-0.1, a=-0.75, b=0.75)
        with pytest.raises(ValueError):
            discretize_density(box_profile(), ell=0.1, a=0.75, b=-0.75)


class TestSpeeds:
    def _two_cars(self, gap, u_last, ell=0.1):
        return FtlState(t=0.0, ell=ell, x=np.array([0.0, gap]),
                        u_left=u_last, u_last=u_last)

    def test_local_jammed(self):
        state = self._two_cars(0.1, u_last=1.0)
        np.testing.assert_allclose(speeds_local(state, MODEL), [0.0, 0.0])

    def test_local_free(self):
        state = self._two_cars(2.0, u_last=0.05)
        v = speeds_local(state, MODEL)
        assert v[0] == pytest.approx(1.0 - 0.05)
        assert v[1] == pytest.approx(0.95)     # leader at V(u_last)

    def test_eulerian_two_car_hand_sum(self):
        # box kernel, alpha = 1: weights [0.2, 0.8], u = [0.5, 0.25]
        state = self._two_cars(0.2, u_last=0.25)
        v = speeds_nonlocal_eulerian(state, MODEL, Kernel("box"), 1.0)
        assert v[0] == pytest.approx(1.0 - (0.2 * 0.5 + 0.8 * 0.25), abs=1e-14)
        assert v[1] == pytest.approx(1.0 - 0.25)

    def test_lagrangian_two_car_hand_sum(self):
        # spacings ell and 2*ell with weights [1/2, 1/2]: density 2/3
        state = self._two_cars(0.1, u_last=0.5)
        row = WeightRow(1.0, 0.1, np.array([0.5, 0.5]))
        v = speeds_nonlocal_lagrangian(state, MODEL, row)
        assert v[0] == pytest.approx(1.0 - 2.0 / 3.0, abs=1e-14)
        assert v[1] == pytest.approx(0.5)

    def test_constant_density_all_models_agree(self):
        rho = DensityProfile(breaks=[], values=[0.4])
        state = discretize_density(rho, ell=0.05, a=0.0, b=1.0)
        row = lagrangian_weights(Kernel("exp"), 0.3, 0.05,
                                 k_max=state.n_cars, on_cap="absorb")
        v_loc = speeds_local(state, MODEL)
        v_eul = speeds_nonlocal_eulerian(state, MODEL, Kernel("exp"), 0.3)
        v_lag = speeds_nonlocal_lagrangian(state, MODEL, row)
        np.testing.assert_allclose(v_loc, 0.6, atol=1e-12)
        np.testing.assert_allclose(v_eul, v_loc, atol=1e-12)
        np.testing.assert_allclose(v_lag, v_loc, atol=1e-12)

    def test_alpha_to_zero_recovers_local(self):
        state = discretize_density(box_profile(), 0.06, -0.75, 0.75)
        v_loc = speeds_local(state, MODEL)
        alpha = 1e-7
        row = lagrangian_weights(Kernel("exp"), alpha, 0.06,
                                 k_max=state.n_cars, on_cap="absorb")
        v_eul = speeds_nonlocal_eulerian(state, MODEL, Kernel("exp"), alpha)
        v_lag = speeds_nonlocal_lagrangian(state, MODEL, row)
        np.testing.assert_allclose(v_eul, v_loc, atol=1e-9)
        np.testing.assert_allclose(v_lag, v_loc, atol=1e-9)

    @given(arrays(float, st.integers(2, 12), elements=st.floats(0.05, 1.0)))
    @settings(max_examples=80, deadline=None)
    def test_harmonic_never_exceeds_arithmetic(self, u):
        rng = np.random.default_rng(0)
        w = rng.uniform(0.1, 1.0, len(u))
        w /= w.sum()
        assert harmonic_mean_density(u, w) <= arithmetic_mean_density(u, w) + 1e-14

    def test_lagrangian_speed_dominates_eulerian_at_same_weights(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = rng.integers(2, 10)
            u = rng.uniform(0.05, 1.0, n)
            w = rng.uniform(0.0, 1.0, n)
            w /= w.sum()
            v_harm = float(MODEL.v(harmonic_mean_density(u, w)))
            v_arit = float(MODEL.v(arithmetic_mean_density(u, w)))
            assert v_harm >= v_arit - 1e-14


class TestEulerStep:
    def test_jammed_platoon_frozen(self):
        # dyadic spacing so u_i = 1 exactly and V(1) = 0 exactly
        x = 0.125 * np.arange(5)
        state = FtlState(0.0, 0.125, x, u_left=1.0, u_last=1.0)
        nxt = euler_step(state, speeds_local(state, MODEL), dt=0.125)
        np.testing.assert_array_equal(nxt.x, x)
        assert nxt.t == pytest.approx(0.125)

    def test_single_free_car(self):
        state = FtlState(0.0, 0.1, np.array([0.0]), u_left=0.05, u_last=0.05)
        nxt = euler_step(state, speeds_local(state, MODEL), dt=0.1)
        assert nxt.x[0] == pytest.approx(0.1 * 0.95)

    def test_ordering_violation_raises(self):
        state = FtlState(0.0, 0.1, np.array([0.0, 0.1]), u_left=1.0, u_last=1.0)
        with pytest.raises(OrderingError, match="cars 0 and 1"):
            euler_step(state, np.array([0.5, 0.0]), dt=0.05)

    def test_gap_preserved_under_euler_with_dt_ell(self):
        rng = np.random.default_rng(9)
        state = discretize_density(box_profile(), 0.05, -0.75, 0.75)
        for _ in range(30):
            state = euler_step(state, speeds_local(state, MODEL), dt=state.ell)
        assert np.all(np.diff(state.x) >= state.ell * (1 - 1e-12))


class TestSimulate:
    def test_local_final_time(self):
        state = discretize_density(box_profile(), 0.06, -0.75, 0.75)
        out = simulate(state, "local", MODEL, t_end=0.33)
        assert out.t == 0.33

    def test_nonlocal_requires_kernel(self):
        state = discretize_density(box_profile(), 0.06, -0.75, 0.75)
        with pytest.raises(ValueError):
            simulate(state, "eulerian", MODEL, t_end=0.1)

    def test_unknown_kind(self):
        state = discretize_density(box_profile(), 0.06, -0.75, 0.75)
        with pytest.raises(ValueError):
            simulate(state, "spectral", MODEL, t_end=0.1)


class TestReconstruct:
    def test_constant_spacing_constant_density(self):
        rho = DensityProfile(breaks=[], values=[0.5])
        state = discretize_density(rho, 0.1, 0.0, 1.0)
        f = reconstruct_density(state)
        assert f(0.31) == pytest.approx(0.5)
        assert f(-5.0) == pytest.approx(0.5)

    def test_cell_interior_value(self):
        state = FtlState(0.0, 0.1, np.array([0.0, 0.4, 0.6]),
                         u_left=0.05, u_last=0.5)
        f = reconstruct_density(state)
        assert f(0.2) == pytest.approx(0.25)    # ell / 0.4
        assert f(0.5) == pytest.approx(0.5)
        assert f(3.0) == pytest.approx(0.5)     # u_last beyond the leader
        assert f(-1.0) == pytest.approx(0.05)   # u_left upstream

    def test_car_count_integral(self):
        state = discretize_density(box_profile(), 0.06, -0.75, 0.75)
        u = state.densities()
        total = float(np.sum(u[:-1] * np.diff(state.x)))
        assert total / state.ell == pytest.approx(state.n_cars - 1, abs=1e-9)

    def test_centroid(self):
        state = FtlState(0.0, 0.1, np.array([0.0, 1.0]), u_left=0.1, u_last=0.1)
        assert mass_centroid(state) == 0.5
