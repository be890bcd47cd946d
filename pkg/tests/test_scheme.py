import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lagtraffic.kernels import Kernel, WeightRow, lagrangian_weights
from lagtraffic.scheme import (Boundary, CflError, LagrangianGrid, PairState,
                               cfl_dt, filtered, run, step_pair, step_w,
                               tail_correlate)
from lagtraffic.velocity import linear_velocity, velocity_by_name

MODEL = linear_velocity()


def spacing_arrays(n_min=2, n_max=24):
    return arrays(float, st.integers(n_min, n_max),
                  elements=st.floats(1.0, 20.0)).map(np.asarray)


class TestVelocityModel:
    def test_linear_w(self):
        w = np.array([1.0, 2.0, 4.0])
        np.testing.assert_allclose(MODEL.w(w), [0.0, 0.5, 0.75])
        np.testing.assert_allclose(MODEL.w_prime(w), [1.0, 0.25, 0.0625])

    def test_sup_w_prime(self):
        assert MODEL.sup_w_prime(1.0, 20.0) == 1.0
        assert MODEL.sup_w_prime(2.0, 20.0) == 0.25
        with pytest.raises(ValueError):
            MODEL.sup_w_prime(0.5, 2.0)

    def test_generic_model_consistent(self):
        quad = velocity_by_name("quadratic")
        w = np.array([1.5, 3.0])
        np.testing.assert_allclose(quad.w(w), 1.0 - 1.0 / w**2)
        # conservative CFL bound dominates the true supremum (W' = 2/w^3,
        # maximal at w = 1); w_prime is finite-difference, hence the slack
        true_sup = float(np.max(quad.w_prime(np.linspace(1.0, 20.0, 2001))))
        assert quad.sup_w_prime(1.0, 20.0) >= true_sup - 1e-9

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            velocity_by_name("cubic")


class TestCfl:
    def test_spec_examples(self):
        assert cfl_dt(MODEL, 1.0, 20.0, 0.01, 1.0) == pytest.approx(0.01)
        assert cfl_dt(MODEL, 1.0, 20.0, 0.01, 0.5) == pytest.approx(0.005)
        assert cfl_dt(MODEL, 2.0, 20.0, 0.01, 1.0) == pytest.approx(0.04)

    def test_constant_w_capped_at_dz(self):
        from lagtraffic.velocity import VelocityModel
        const = VelocityModel(name="const", v=lambda u: 0.5 * np.ones_like(u),
                              lipschitz_v=1.0,
                              w=lambda w: 0.5 * np.ones_like(np.asarray(w)),
                              w_prime=lambda w: np.zeros_like(np.asarray(w)),
                              _sup_w_prime=lambda lo, hi: 0.0)
        assert cfl_dt(const, 1.0, 5.0, 0.25, 0.9) == 0.25

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            cfl_dt(MODEL, 1.0, 20.0, 0.01, 0.0)
        with pytest.raises(ValueError):
            cfl_dt(MODEL, 1.0, 20.0, -0.01, 0.9)


class TestFiltered:
    def test_hand_example(self):
        row = WeightRow(1.0, 1.0, np.array([0.75, 0.25]))
        bc = Boundary(1.0, 2.0)
        np.testing.assert_allclose(filtered([1.0, 2.0], row, bc), [1.25, 2.0])

    def test_identity_row(self):
        row = WeightRow(1e-9, 1.0, np.array([1.0]))
        y = np.array([3.0, 1.0, 7.0])
        np.testing.assert_allclose(filtered(y, row, Boundary(1.0, 1.0)), y)

    def test_empty_rejected(self):
        row = WeightRow(1.0, 1.0, np.array([1.0]))
        with pytest.raises(ValueError):
            filtered(np.array([]), row, Boundary(1.0, 1.0))

    def test_fold_equals_ghost_for_constant_edge(self):
        row = lagrangian_weights(Kernel("tri"), 0.5, 0.125)
        y = np.concatenate([np.linspace(1.0, 6.0, 10), np.full(8, 6.0)])
        w_ghost = filtered(y, row, Boundary(1.0, 6.0, "ghost"))
        w_fold = filtered(y, row, Boundary(1.0, 6.0, "fold"))
        np.testing.assert_allclose(w_ghost, w_fold, atol=1e-15)

    @given(spacing_arrays(), st.floats(1.0, 20.0))
    @settings(max_examples=50, deadline=None)
    def test_constant_fixed_point_and_mass(self, y, c):
        row = lagrangian_weights(Kernel("box"), 0.4, 0.1)
        w = filtered(np.full_like(y, c), row, Boundary(1.0, c))
        np.testing.assert_allclose(w, c, atol=1e-13)

    @given(spacing_arrays())
    @settings(max_examples=50, deadline=None)
    def test_range_bounded_by_data(self, y):
        row = lagrangian_weights(Kernel("exp"), 0.3, 0.1)
        bc = Boundary(1.0, float(y[-1]))
        w = filtered(y, row, bc)
        assert w.min() >= y.min() - 1e-12
        assert w.max() <= y.max() + 1e-12


class TestStepW:
    def test_hand_example_identity_row(self):
        row = WeightRow(1e-9, 1.0, np.array([1.0]))
        out = step_w(np.array([1.0, 2.0]), row, MODEL, 0.5, Boundary(1.0, 2.0))
        np.testing.assert_allclose(out, [1.25, 2.0])

    def test_constants_are_fixed_points(self):
        row = lagrangian_weights(Kernel("exp"), 0.5, 0.1)
        w = np.full(12, 3.0)
        out = step_w(w, row, MODEL, 0.9, Boundary(1.0, 3.0))
        np.testing.assert_allclose(out, 3.0, atol=1e-15)

    def test_cfl_violation_raises(self):
        row = WeightRow(1e-9, 1.0, np.array([1.0]))
        with pytest.raises(CflError):
            step_w(np.array([1.0, 2.0]), row, MODEL, 1.5, Boundary(1.0, 2.0))

    def test_batched_matches_loop(self):
        row = lagrangian_weights(Kernel("tri"), 0.3, 0.1)
        bc = Boundary(1.0, 4.0)
        rng = np.random.default_rng(3)
        batch = rng.uniform(1.0, 20.0, size=(5, 16))
        out = step_w(batch, row, MODEL, 0.8, bc)
        for i in range(5):
            np.testing.assert_array_equal(out[i], step_w(batch[i], row, MODEL,
                                                         0.8, bc))

    @given(spacing_arrays(n_min=3),
           st.sampled_from(["box", "tri"]),
           st.floats(0.05, 0.5),
           st.floats(0.1, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_order_preserved(self, w_lo, family, alpha, safety):
        # compact-support kernels give exactly non-increasing rows
        row = lagrangian_weights(Kernel(family), alpha, 0.1)
        bc = Boundary(1.0, 10.0)
        lam = safety / MODEL.sup_w_prime(1.0, 21.0)
        w_hi = np.minimum(w_lo + np.linspace(0.0, 1.0, len(w_lo)), 21.0)
        lo_next = step_w(w_lo, row, MODEL, lam, bc)
        hi_next = step_w(w_hi, row, MODEL, lam, bc)
        assert np.all(hi_next - lo_next >= -1e-12)

    @given(spacing_arrays(n_min=3), st.floats(1.0, 20.0))
    @settings(max_examples=60, deadline=None)
    def test_max_principle(self, w, ghost):
        row = lagrangian_weights(Kernel("exp"), 0.25, 0.1)
        bc = Boundary(1.0, ghost)
        lo = min(w.min(), ghost)
        hi = max(w.max(), ghost)
        out = step_w(w, row, MODEL, 0.9 / MODEL.sup_w_prime(1.0, 20.0), bc)
        for _ in range(3):
            out = step_w(out, row, MODEL, 0.9, bc)
        assert out.min() >= lo - 1e-12
        assert out.max() <= hi + 1e-12


class TestStepPair:
    def _two_cell(self):
        row = WeightRow(1.0, 1.0, np.array([0.75, 0.25]))
        grid = LagrangianGrid(dz=1.0, n_cells=2, y_left=1.0, y_right=2.0)
        bc = grid.boundary()
        y = np.array([1.0, 2.0])
        state = PairState(t=0.0, y=y, w=filtered(y, row, bc))
        return state, grid, row, bc

    def test_hand_example(self):
        state, grid, row, bc = self._two_cell()
        np.testing.assert_allclose(state.w, [1.25, 2.0])
        nxt = step_pair(state, grid, row, MODEL, dt=0.5, bc=bc)
        np.testing.assert_allclose(nxt.y, [1.15, 2.0])
        np.testing.assert_allclose(nxt.w, filtered(nxt.y, row, bc))
        assert nxt.t == 0.5

    def test_constant_state_unchanged(self):
        row = lagrangian_weights(Kernel("exp"), 0.5, 0.25)
        grid = LagrangianGrid(dz=0.25, n_cells=8, y_left=2.0, y_right=2.0)
        bc = grid.boundary()
        y = np.full(8, 2.0)
        state = PairState(0.0, y, filtered(y, row, bc))
        nxt = step_pair(state, grid, row, MODEL, dt=0.2, bc=bc)
        np.testing.assert_allclose(nxt.y, 2.0, atol=1e-15)

    def test_spacing_bounds_preserved(self):
        rng = np.random.default_rng(11)
        row = lagrangian_weights(Kernel("tri"), 0.5, 0.25)
        grid = LagrangianGrid(dz=0.25, n_cells=32, y_left=1.0, y_right=5.0)
        bc = grid.boundary()
        y = rng.uniform(1.0, 20.0, 32)
        lo = min(y.min(), 5.0)
        hi = max(y.max(), 5.0)
        state = PairState(0.0, y, filtered(y, row, bc))
        dt = cfl_dt(MODEL, lo, hi, grid.dz, 0.9)
        for _ in range(40):
            state = step_pair(state, grid, row, MODEL, dt, bc)
        assert state.y.min() >= lo - 1e-12
        assert state.y.max() <= hi + 1e-12


class TestRun:
    def _grid(self, n=40, y_right=4.0):
        return LagrangianGrid(dz=0.05, n_cells=n, y_left=1.0, y_right=y_right)

    def test_t_end_zero_returns_initial(self):
        grid = self._grid()
        y0 = np.linspace(1.0, 4.0, grid.n_cells)
        traj = run(y0, grid, Kernel("exp"), 0.2, MODEL, t_end=0.0)
        assert len(traj.states) == 1
        np.testing.assert_array_equal(traj.final.y, y0)

    def test_constant_trajectory(self):
        grid = LagrangianGrid(dz=0.05, n_cells=20, y_left=3.0, y_right=3.0)
        y0 = np.full(20, 3.0)
        traj = run(y0, grid, Kernel("exp"), 0.2, MODEL, t_end=0.5)
        np.testing.assert_allclose(traj.final.y, 3.0, atol=1e-14)
        np.testing.assert_allclose(traj.final.w, 3.0, atol=1e-14)

    def test_final_time_exact(self):
        grid = self._grid()
        y0 = np.linspace(1.0, 4.0, grid.n_cells)
        traj = run(y0, grid, Kernel("tri"), 0.3, MODEL, t_end=0.377)
        assert traj.final.t == 0.377
        assert sum(traj.dts) == pytest.approx(0.377, abs=1e-14)

    def test_record_cadence(self):
        grid = self._grid()
        y0 = np.linspace(1.0, 4.0, grid.n_cells)
        every = run(y0, grid, Kernel("tri"), 0.3, MODEL, 0.2, record_every=1)
        sparse = run(y0, grid, Kernel("tri"), 0.3, MODEL, 0.2, record_every=5)
        assert len(every.states) == len(every.dts) + 1
        assert sparse.recorded_steps[0] == 0
        assert sparse.recorded_steps[-1] == len(sparse.dts)
        assert all(b - a in (5, len(sparse.dts) % 5 or 5)
                   for a, b in zip(sparse.recorded_steps[1:-1],
                                   sparse.recorded_steps[2:]))
        np.testing.assert_array_equal(every.final.y, sparse.final.y)

    def test_invalid_spacings_rejected(self):
        grid = self._grid()
        y0 = np.linspace(1.0, 4.0, grid.n_cells)
        y0[3] = 0.9
        with pytest.raises(ValueError):
            run(y0, grid, Kernel("exp"), 0.2, MODEL, 1.0)

    def test_fold_and_ghost_agree_for_constant_edge_data(self):
        grid = LagrangianGrid(dz=0.05, n_cells=50, y_left=1.0, y_right=5.0)
        y0 = np.concatenate([np.linspace(1.0, 5.0, 20), np.full(30, 5.0)])
        tg = run(y0, grid, Kernel("tri"), 0.2, MODEL, 0.4, boundary_mode="ghost")
        tf = run(y0, grid, Kernel("tri"), 0.2, MODEL, 0.4, boundary_mode="fold")
        np.testing.assert_allclose(tg.final.y, tf.final.y, atol=1e-12)
        np.testing.assert_allclose(tg.final.w, tf.final.w, atol=1e-12)


class TestTailCorrelate:
    def test_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=30)
        wts = rng.uniform(0.0, 1.0, size=7)
        out = tail_correlate(a, wts)
        ref = np.array([np.dot(wts, a[i:i + 7]) for i in range(24)])
        np.testing.assert_allclose(out, ref, atol=1e-14)

    def test_fft_path_matches_direct(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(1.0, 2.0, size=5000)
        wts = rng.uniform(0.0, 1.0, size=1500)
        wts /= wts.sum()
        direct = np.array([np.dot(wts, a[i:i + 1500]) for i in range(0, 3501, 500)])
        import lagtraffic.scheme as sch
        old = sch._FFT_WORK_THRESHOLD
        try:
            sch._FFT_WORK_THRESHOLD = 1
            out = tail_correlate(a, wts)
        finally:
            sch._FFT_WORK_THRESHOLD = old
        np.testing.assert_allclose(out[::500], direct, rtol=1e-13)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            tail_correlate(np.ones(3), np.ones(5))
