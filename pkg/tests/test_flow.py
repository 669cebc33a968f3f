import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzyricci import (
    FlowConfig,
    Metric,
    StepRejected,
    cigar,
    diag_ladder,
    entropy,
    entropy_rate_check,
    flat,
    integrate,
    integrate_fixed,
    log_det_rate_check,
    normalize_density,
    random_metric,
    rhs,
    scalar_curvature,
    step,
)
from fuzzyricci.flow import curvature_fd_check, curvature_pairing, make_state
from fuzzyricci.matcore import hs_norm
from fuzzyricci.torus import laplacian_spectrum

from conftest import random_hermitian

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestRhs:
    def test_flat_is_fixed_point(self, torus_cache):
        t = torus_cache(4, 1)
        assert hs_norm(rhs(t, flat(4, 2.0))) <= 1e-12

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_traceless(self, torus_cache, seed):
        t = torus_cache(5, 2)
        c = random_metric(5, 1.0, seed)
        r = rhs(t, c)
        assert abs(np.trace(r)) <= 1e-10 * max(1.0, hs_norm(r))
        assert hs_norm(r - r.conj().T) <= 1e-12 * max(1.0, hs_norm(r))

    def test_commutator_oracle_2x2(self):
        # oracle: build x, y from their closed forms and evaluate the double
        # commutators on log(diag(1,3)) = diag(0, log 3) by hand
        x = np.diag([0.0, 1.0]).astype(complex)
        y = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)
        l = np.diag([0.0, np.log(3.0)]).astype(complex)
        d1 = lambda a: y @ a - a @ y
        d2 = lambda a: a @ x - x @ a
        lap_l = d1(d1(l)) + d2(d2(l))

        from fuzzyricci import build_torus

        t = build_torus(2, 1)
        c = Metric.from_matrix(np.diag([1.0, 3.0]))
        np.testing.assert_allclose(rhs(t, c), -lap_l, atol=1e-13)


class TestStep:
    def test_flat_unchanged(self, torus_cache):
        t = torus_cache(3, 1)
        state = make_state(t, 0.0, flat(3, 1.5))
        new, err = step(t, state, 0.1)
        assert err <= 1e-12
        assert hs_norm(new.metric.mat - state.metric.mat) <= 1e-12

    def test_trace_conserved_per_step(self, torus_cache):
        t = torus_cache(5, 2)
        c = cigar(t, 1.0)
        state = make_state(t, 0.0, c)
        new, _ = step(t, state, 1e-4)
        assert abs(new.metric.trace - c.trace) <= 1e-10 * c.trace

    def test_rejects_unstable_step(self, torus_cache):
        # near-flat state, step far beyond the stability limit: some RK
        # stage or the candidate leaves the positive cone
        t = torus_cache(5, 2)
        rng = np.random.default_rng(3)
        c = Metric.from_matrix(np.eye(5) + random_hermitian(rng, 5, scale=0.1))
        state = make_state(t, 0.0, c)
        with pytest.raises(StepRejected):
            step(t, state, 1.0)

    def test_global_error_fourth_order(self, torus_cache):
        # fixed-step runs over one segment against a much finer reference;
        # halving h must cut the endpoint error by about 2^4
        t = torus_cache(2, 1)
        c0 = cigar(t, 1.0)
        T, h = 0.4, 0.05
        ref = integrate_fixed(t, c0, h / 64, T).mat
        e1 = hs_norm(integrate_fixed(t, c0, h, T).mat - ref)
        e2 = hs_norm(integrate_fixed(t, c0, h / 2, T).mat - ref)
        assert 12 <= e1 / e2 <= 20


class TestIntegrate:
    def test_flat_converges_immediately(self, torus_cache):
        t = torus_cache(4, 3)
        tr = integrate(t, flat(4, 2.0))
        assert tr.termination == "converged"
        assert len(tr.rows) == 1
        assert tr.c_infinity == pytest.approx(2.0)

    def test_diag_flow_reaches_average(self, torus_cache):
        t = torus_cache(2, 1)
        tr = integrate(t, Metric.from_matrix(np.diag([1.0, 3.0])))
        assert tr.termination == "converged"
        assert tr.c_infinity == pytest.approx(2.0)
        assert hs_norm(tr.final_state.metric.mat - 2.0 * np.eye(2)) <= 1e-8

    def test_cigar_flow_audit(self, torus_cache):
        t = torus_cache(8, 1)
        tr = integrate(t, cigar(t, 1.0))
        assert tr.termination == "converged"
        assert tr.violations == {"log_det": 0, "entropy": 0, "dist_flat": 0}
        times = tr.times
        assert all(b > a for a, b in zip(times, times[1:]))
        t0_trace = tr.rows[0][1].trace_c
        for _, rec in tr.rows:
            assert abs(rec.trace_c - t0_trace) <= 1e-9 * t0_trace
            assert rec.lambda_min > 0
            assert rec.lambda_max <= 8 * tr.c_infinity * (1 + 1e-6)

    def test_euler_oracle_agreement(self, torus_cache):
        # adaptive integration to t = 0.5 against plain forward Euler at
        # h = 1e-5; the two share only the right-hand side
        t = torus_cache(8, 1)
        c0 = cigar(t, 1.0)
        cfg = FlowConfig(t_max=0.5, conv_tol=1e-12)
        tr = integrate(t, c0, cfg)
        assert tr.termination == "horizon"
        assert tr.final_state.t == pytest.approx(0.5, abs=1e-12)
        euler = integrate_fixed(t, c0, 1e-5, 0.5, method="euler")
        assert hs_norm(tr.final_state.metric.mat - euler.mat) <= 1e-6

    def test_monotone_diagnostics(self, torus_cache):
        t = torus_cache(5, 2)
        tr = integrate(t, random_metric(5, 1.0, 17))
        assert tr.termination == "converged"
        recs = [rec for _, rec in tr.rows]
        for a, b in zip(recs, recs[1:]):
            assert b.log_det_c >= a.log_det_c - 1e-9
            assert b.entropy >= a.entropy - 1e-9
            assert b.dist_flat <= a.dist_flat + 1e-9
        # strict increase away from the fixed point
        for a, b in zip(recs, recs[1:]):
            if a.dist_flat > 1e-12:
                assert b.log_det_c > a.log_det_c

    def test_horizon_termination(self, torus_cache):
        t = torus_cache(2, 1)
        cfg = FlowConfig(t_max=0.01)
        tr = integrate(t, cigar(t, 0.1), cfg)
        assert tr.termination == "horizon"

    def test_step_underflow_termination(self, torus_cache):
        # demanding an error below roundoff with a large floor on h
        t = torus_cache(3, 2)
        cfg = FlowConfig(atol=1e-16, h_min=0.25, h_max=1.0, h_init=1.0)
        tr = integrate(t, cigar(t, 1.0), cfg)
        assert tr.termination == "step-underflow"

    def test_keep_states(self, torus_cache):
        t = torus_cache(3, 1)
        tr = integrate(t, cigar(t, 1.0), keep_states=True)
        assert tr.states is not None and len(tr.states) == len(tr.rows)
        assert tr.states[-1] is tr.final_state

    def test_ill_conditioned_initial_metric(self, torus_cache):
        # lam_min(c0) far below guard * flat level; the guard must scale
        # with the running lam_min instead of blocking the launch
        t = torus_cache(5, 2)
        c0 = Metric.from_matrix(np.diag([1e-7, 1.0, 2.0, 3.0, 4.0]))
        tr = integrate(t, c0, FlowConfig(t_max=1e4, h_max=10.0))
        assert tr.termination == "converged"
        assert tr.violations["dist_flat"] == 0


class TestCurvature:
    def test_flat_has_zero_curvature(self, torus_cache):
        t = torus_cache(4, 1)
        assert hs_norm(scalar_curvature(t, flat(4, 0.5))) <= 1e-12

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_hermitian_and_zero_average(self, torus_cache, seed):
        t = torus_cache(5, 2)
        c = random_metric(5, 1.0, seed)
        r = scalar_curvature(t, c)
        assert hs_norm(r - r.conj().T) == 0  # hermitized by construction
        assert abs(np.trace(c.mat @ r).real) <= 1e-8 * max(1.0, hs_norm(c.mat) * hs_norm(r))

    def test_zero_average_identity_tight(self, torus_cache):
        # trace(c R) = trace(laplacian(log c)) = 0 holds to roundoff
        t = torus_cache(8, 3)
        c = cigar(t, 0.5)
        assert curvature_pairing(c, scalar_curvature(t, c)) <= 1e-12

    def test_finite_difference_oracle(self, torus_cache):
        t = torus_cache(5, 2)
        lap_norm = float(laplacian_spectrum(t)[-1])
        c = random_metric(5, 0.8, 23)
        fd, closed = curvature_fd_check(t, c, lap_norm=lap_norm)
        assert hs_norm(fd - closed) <= 1e-6 * hs_norm(closed)

    def test_nonflat_curvature_visible(self, torus_cache):
        t = torus_cache(3, 2)
        assert hs_norm(scalar_curvature(t, cigar(t, 1.0))) > 1e-2


class TestEntropy:
    def test_flat_maximal(self):
        assert entropy(flat(7, 3.0)) == pytest.approx(np.log(7), abs=1e-12)

    def test_two_level_frozen_value(self):
        rho = Metric.from_matrix(np.diag([0.25, 0.75]))
        expected = -(0.25 * np.log(0.25) + 0.75 * np.log(0.75))
        assert entropy(rho) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.5623, abs=5e-5)

    def test_near_pure_state_small(self):
        rho = Metric.from_matrix(np.diag([1.0 - 1e-9, 1e-9]))
        assert 0 < entropy(rho) < 1e-7

    def test_scale_invariant(self):
        c = diag_ladder(4)
        rho, _ = normalize_density(c)
        assert entropy(c) == pytest.approx(entropy(rho), abs=1e-12)


class TestEntropyRate:
    def test_flat_rate_vanishes(self, torus_cache):
        t = torus_cache(4, 1)
        rho = flat(4, 1.0 / 4.0)
        numeric, analytic = entropy_rate_check(t, rho, dt=1e-6)
        assert abs(analytic) <= 1e-12
        assert abs(numeric) <= 1e-6

    def test_requires_unit_trace(self, torus_cache):
        t = torus_cache(3, 1)
        with pytest.raises(ValueError):
            entropy_rate_check(t, flat(3, 1.0))

    @pytest.mark.parametrize("n,m,spread", [(2, 1, 0.5), (5, 2, 0.5), (8, 3, 0.4)])
    def test_positive_and_consistent(self, torus_cache, n, m, spread):
        t = torus_cache(n, m)
        rho, _ = normalize_density(random_metric(n, spread, 7 * n + m))
        numeric, analytic = entropy_rate_check(t, rho)
        assert analytic > 0
        assert numeric > 0
        assert abs(numeric - analytic) <= 1e-4 * analytic

    def test_first_order_in_dt(self, torus_cache):
        t = torus_cache(2, 1)
        rho, _ = normalize_density(random_metric(2, 0.5, 11))
        _, analytic = entropy_rate_check(t, rho, dt=1e-5)
        err = {}
        for dt in (1e-4, 1e-5):
            numeric, _ = entropy_rate_check(t, rho, dt=dt)
            err[dt] = abs(numeric - analytic)
        # secant error is first order in dt
        assert err[1e-4] / err[1e-5] == pytest.approx(10, rel=0.35)


class TestLogDetRate:
    @pytest.mark.parametrize("n,m", [(3, 1), (5, 2)])
    def test_identity_along_states(self, torus_cache, n, m):
        t = torus_cache(n, m)
        lap_norm = float(laplacian_spectrum(t)[-1])
        for c in (cigar(t, 1.0), random_metric(n, 0.8, 5)):
            numeric, analytic = log_det_rate_check(t, c, lap_norm=lap_norm)
            assert analytic > 0
            assert abs(numeric - analytic) <= 1e-6 * abs(analytic)

    def test_rate_vanishes_at_flat(self, torus_cache):
        t = torus_cache(3, 1)
        numeric, analytic = log_det_rate_check(t, flat(3, 2.0))
        assert abs(analytic) <= 1e-10
        assert abs(numeric) <= 1e-6


class TestConfigValidation:
    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            FlowConfig(t0=1.0, t_max=0.5)

    def test_bad_tolerances(self):
        with pytest.raises(ValueError):
            FlowConfig(atol=0.0)
        with pytest.raises(ValueError):
            FlowConfig(conv_tol=-1.0)

    def test_bad_step_bounds(self):
        with pytest.raises(ValueError):
            FlowConfig(h_min=1.0, h_max=0.5)
        with pytest.raises(ValueError):
            FlowConfig(h_init=2.0, h_max=1.0)
