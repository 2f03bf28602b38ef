import json

import numpy as np
import numpy.testing as npt
import pytest

import mplf
from mplf.linearize import stack_injections
from conftest import certified_instance, random_network, single_phase_model, wye_injection

GOLDEN_V = (1 + np.sqrt(0.6)) / 2


def zero_base_solution(model, profile):
    return mplf.solve_fixed_point(model, profile, mplf.InjectionSet.zeros(model))


class TestFotAtZeroLoad:
    def test_single_phase_closed_form(self):
        model, profile = single_phase_model()
        base = zero_base_solution(model, profile)
        lin = mplf.fot_linearize(model, base, mplf.InjectionSet.zeros(model))
        npt.assert_allclose(lin.m_wye, [[1.0, -1.0j]], atol=1e-12)
        npt.assert_allclose(lin.a, [1.0], atol=1e-12)
        npt.assert_allclose(lin.k_wye, [[1.0, 0.0]], atol=1e-12)
        npt.assert_allclose(lin.b, [1.0], atol=1e-12)

    def test_matches_closed_form_blocks(self, rng):
        for _ in range(5):
            model, profile = random_network(rng)
            base = zero_base_solution(model, profile)
            lin = mplf.fot_linearize(model, base, mplf.InjectionSet.zeros(model))
            p = np.linalg.solve(model.yll, np.diag(1.0 / np.conj(profile.w)))
            npt.assert_allclose(lin.m_wye, np.hstack([p, -1j * p]), atol=1e-9)
            if model.n_delta:
                H = model.connection.H
                q = np.linalg.solve(model.yll, H.T @ np.diag(1.0 / (H @ np.conj(profile.w))))
                npt.assert_allclose(lin.m_delta, np.hstack([q, -1j * q]), atol=1e-9)

    def test_coincides_with_fpl_at_zero_load(self, rng):
        for _ in range(5):
            model, profile = random_network(rng)
            base = zero_base_solution(model, profile)
            zero = mplf.InjectionSet.zeros(model)
            fot = mplf.fot_linearize(model, base, zero)
            fpl = mplf.fpl_linearize(model, profile, base, zero)
            npt.assert_allclose(fot.m_wye, fpl.m_wye, atol=1e-9)
            npt.assert_allclose(fot.m_delta, fpl.m_delta, atol=1e-9)
            npt.assert_allclose(fot.a, fpl.a, atol=1e-9)
            npt.assert_allclose(fot.k_wye, fpl.k_wye, atol=1e-9)
            npt.assert_allclose(fot.b, fpl.b, atol=1e-9)


class TestFotGeneral:
    def test_singular_base_rejected(self):
        # At the loadability limit the balance equations have a double root
        # and the sensitivity operator loses rank.
        model, profile = single_phase_model()
        inj = wye_injection(model, "load", "a", -0.25)
        base = mplf.SolveResult(
            v=np.array([0.5 + 0j]),
            i_delta=np.zeros(0, complex),
            i=np.array([-0.5 + 0j]),
            iterations=0,
            residual_inf=0.0,
            converged=True,
            contraction_estimate=0.0,
        )
        with pytest.raises(mplf.SingularSensitivityError):
            mplf.fot_linearize(model, base, inj)

    def test_invalid_base_rejected(self, golden):
        model, profile, inj = golden
        sol = mplf.solve_fixed_point(model, profile, inj)
        bad = mplf.SolveResult(
            v=1.2 * sol.v,
            i_delta=sol.i_delta,
            i=sol.i,
            iterations=0,
            residual_inf=0.0,
            converged=True,
            contraction_estimate=0.0,
        )
        with pytest.raises(mplf.InvalidBaseError):
            mplf.fot_linearize(model, bad, inj)

    def test_evaluate_at_base_reproduces_base(self, rng):
        for _ in range(5):
            model, profile, inj = certified_instance(rng)
            sol = mplf.solve_fixed_point(model, profile, inj, tol_step=1e-12)
            lin = mplf.fot_linearize(model, sol, inj)
            v, vabs = mplf.evaluate_linear(lin, stack_injections(inj))
            npt.assert_allclose(v, sol.v, atol=1e-12)
            npt.assert_allclose(vabs, np.abs(sol.v), atol=1e-12)

    def test_deviation_is_affine(self, rng):
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj, tol_step=1e-12)
        lin = mplf.fot_linearize(model, sol, inj)
        x_hat = stack_injections(inj)
        d = rng.standard_normal(x_hat.size)
        v1, _ = mplf.evaluate_linear(lin, x_hat + d)
        v2, _ = mplf.evaluate_linear(lin, x_hat + 2 * d)
        npt.assert_allclose(v2 - sol.v, 2 * (v1 - sol.v), atol=1e-10)

    def test_sensitivities_match_finite_differences(self, rng):
        h = 1e-6
        for _ in range(3):
            model, profile, inj = certified_instance(rng, max_buses=3, xi_range=(0.03, 0.08))
            sol = mplf.solve_fixed_point(model, profile, inj, tol_step=1e-13, max_iter=5000)
            lin = mplf.fot_linearize(model, sol, inj)
            x_hat = stack_injections(inj)
            m_full = np.hstack([lin.m_wye, lin.m_delta])
            cols = rng.choice(x_hat.size, size=min(4, x_hat.size), replace=False)
            for k in cols:
                shift = np.zeros_like(x_hat)
                shift[k] = h
                vp = _resolve(model, profile, x_hat + shift, sol.v)
                vm = _resolve(model, profile, x_hat - shift, sol.v)
                fd = (vp - vm) / (2 * h)
                scale = max(np.abs(m_full[:, k]).max(), 1e-9)
                assert np.abs(fd - m_full[:, k]).max() / scale <= 1e-4

    def test_local_error_is_superlinear(self, rng):
        model, profile, inj = certified_instance(rng, xi_range=(0.03, 0.08))
        sol = mplf.solve_fixed_point(model, profile, inj, tol_step=1e-13, max_iter=5000)
        lin = mplf.fot_linearize(model, sol, inj)
        x_hat = stack_injections(inj)
        d = rng.standard_normal(x_hat.size)
        d /= np.abs(d).max() / max(np.abs(x_hat).max(), 0.05)
        ratios = []
        for t in (1e-2, 1e-3, 1e-4):
            x = x_hat + t * d
            v_exact = _resolve(model, profile, x, sol.v)
            v_lin, _ = mplf.evaluate_linear(lin, x)
            ratios.append(np.abs(v_lin - v_exact).max() / t)
        assert ratios[0] > ratios[1] > ratios[2]


def _resolve(model, profile, x, v_start):
    n, d = model.n_phases, model.n_delta
    inj = mplf.InjectionSet(x[:n] + 1j * x[n : 2 * n], x[2 * n : 2 * n + d] + 1j * x[2 * n + d :])
    sol = mplf.solve_fixed_point(
        model, profile, inj, v_init=v_start, tol_step=1e-13, max_iter=5000
    )
    return sol.v


class TestFpl:
    def test_offset_is_zero_load_voltage(self, rng):
        for _ in range(5):
            model, profile, inj = certified_instance(rng)
            sol = mplf.solve_fixed_point(model, profile, inj)
            lin = mplf.fpl_linearize(model, profile, sol, inj)
            npt.assert_allclose(lin.a, profile.w, atol=1e-15)

    def test_evaluate_at_base_returns_base(self, rng):
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj, tol_step=1e-12)
        lin = mplf.fpl_linearize(model, profile, sol, inj)
        v, vabs = mplf.evaluate_linear(lin, stack_injections(inj))
        npt.assert_allclose(v, sol.v, atol=1e-10)
        npt.assert_allclose(vabs, np.abs(sol.v), atol=1e-10)

    def test_matches_one_map_application(self, rng):
        # The model evaluated at arbitrary injections equals one update step
        # frozen at the base voltages.
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj)
        lin = mplf.fpl_linearize(model, profile, sol, inj)
        other = inj.scaled(0.4 + 0.2j)
        v_lin, _ = mplf.evaluate_linear(lin, stack_injections(other))
        expected = mplf.fixed_point_map(model, profile, other, sol.v)
        npt.assert_allclose(v_lin, expected, atol=1e-12)

    def test_single_phase_prediction_and_error(self, golden):
        model, profile, inj = golden
        base = zero_base_solution(model, profile)
        lin = mplf.fpl_linearize(model, profile, base, mplf.InjectionSet.zeros(model))
        v_lin, _ = mplf.evaluate_linear(lin, stack_injections(inj))
        npt.assert_allclose(v_lin, [0.9], atol=1e-12)
        assert abs(v_lin[0] - GOLDEN_V) == pytest.approx(0.0127017, abs=1e-6)

    def test_evaluate_at_zero_returns_w(self, rng):
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj)
        lin = mplf.fpl_linearize(model, profile, sol, inj)
        v, vabs = mplf.evaluate_linear(lin, np.zeros_like(stack_injections(inj)))
        npt.assert_allclose(v, profile.w, atol=1e-15)
        npt.assert_allclose(vabs, lin.b, atol=1e-15)


class TestErrorBound:
    def test_golden_bound_dominates_observed_error(self, golden):
        model, profile, inj = golden
        base = (profile.w, mplf.InjectionSet.zeros(model))
        bound, q = mplf.fpl_error_bound(model, profile, base, inj)
        assert q == pytest.approx(0.1270167, abs=1e-7)
        assert bound == pytest.approx(0.0143151, abs=1e-6)
        assert bound >= 0.0127017 - 1e-9

    def test_zero_change_gives_zero_bound(self, rng):
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj)
        bound, q = mplf.fpl_error_bound(model, profile, (sol.v, inj), inj)
        assert bound == pytest.approx(0.0, abs=1e-15)
        assert q < 1.0

    def test_uncertified_target_rejected(self):
        model, profile = single_phase_model()
        inj = wye_injection(model, "load", "a", -0.3)
        base = (profile.w, mplf.InjectionSet.zeros(model))
        with pytest.raises(mplf.CertificateRequiredError):
            mplf.fpl_error_bound(model, profile, base, inj)

    def test_bound_sound_on_random_instances(self, rng):
        for _ in range(20):
            model, profile, inj = certified_instance(rng)
            base_sol = zero_base_solution(model, profile)
            zero = mplf.InjectionSet.zeros(model)
            lin = mplf.fpl_linearize(model, profile, base_sol, zero)
            bound, q = mplf.fpl_error_bound(model, profile, (profile.w, zero), inj)
            assert q < 1.0
            sol = mplf.solve_fixed_point(model, profile, inj)
            v_lin, _ = mplf.evaluate_linear(lin, stack_injections(inj))
            assert np.abs(v_lin - sol.v).max() <= bound + 1e-9


class TestSerialization:
    def test_round_trip_lossless(self, golden):
        model, profile, inj = golden
        sol = mplf.solve_fixed_point(model, profile, inj)
        lin = mplf.fpl_linearize(model, profile, sol, inj)
        doc = json.loads(json.dumps(lin.to_dict()))
        assert doc["kind"] == "fpl"
        got = complex(doc["m_wye"][0][0]["re"], doc["m_wye"][0][0]["im"])
        assert got == lin.m_wye[0, 0]
