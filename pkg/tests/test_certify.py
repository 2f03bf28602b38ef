import json
import math

import numpy as np
import pytest

import mplf
from mplf.certify import gamma_quantities, xi_norms
from conftest import (
    certified_instance,
    random_injections,
    random_network,
    single_phase_model,
    wye_injection,
)

RHO_DAGGER_GOLDEN = 0.5 - math.sqrt(0.15)


class TestXiNorms:
    def test_zero_injections(self, rng):
        model, profile = random_network(rng)
        xi = xi_norms(model, profile, model.connection, mplf.InjectionSet.zeros(model))
        assert xi.xi_wye == xi.xi_delta == xi.xi_total == 0.0

    def test_single_phase_value(self, golden):
        model, profile, inj = golden
        xi = xi_norms(model, profile, model.connection, inj)
        assert xi.xi_wye == pytest.approx(0.1, abs=1e-15)
        assert xi.xi_delta == 0.0

    def test_absolute_homogeneity(self, rng):
        model, profile = random_network(rng)
        for _ in range(50):
            inj = random_injections(rng, model, profile)
            a = complex(rng.standard_normal(), rng.standard_normal())
            lhs = xi_norms(model, profile, model.connection, inj.scaled(a)).xi_total
            rhs = abs(a) * xi_norms(model, profile, model.connection, inj).xi_total
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_triangle_inequality(self, rng):
        model, profile = random_network(rng)
        conn = model.connection
        for _ in range(50):
            s1 = random_injections(rng, model, profile)
            s2 = random_injections(rng, model, profile)
            lhs = xi_norms(model, profile, conn, s1 + s2).xi_total
            rhs = (
                xi_norms(model, profile, conn, s1).xi_total
                + xi_norms(model, profile, conn, s2).xi_total
            )
            assert lhs <= rhs + 1e-12

    def test_definiteness(self, rng):
        model, profile = random_network(rng)
        conn = model.connection
        for _ in range(20):
            inj = random_injections(rng, model, profile)
            xi = xi_norms(model, profile, conn, inj).xi_total
            tiny = inj.scaled(1e-15 / xi)
            assert xi_norms(model, profile, conn, tiny).xi_total < 1e-14
            stacked = np.concatenate([tiny.s_wye, tiny.s_delta])
            assert np.abs(stacked).max() < 1e-12


class TestGammaQuantities:
    def test_at_zero_load_profile(self, rng):
        model, profile = random_network(rng)
        gam = gamma_quantities(profile, model.connection, profile.w)
        assert gam.alpha == pytest.approx(1.0, abs=1e-12)
        if model.n_delta:
            assert gam.beta == pytest.approx(1.0, abs=1e-12)
        assert gam.gamma == pytest.approx(1.0, abs=1e-12)

    def test_uniform_scaling(self, rng):
        model, profile = random_network(rng)
        gam = gamma_quantities(profile, model.connection, 0.9 * profile.w)
        assert gam.alpha == pytest.approx(0.9, abs=1e-12)

    def test_no_delta_gives_infinite_beta(self, golden):
        model, profile, _ = golden
        gam = gamma_quantities(profile, model.connection, profile.w)
        assert math.isinf(gam.beta)
        assert gam.gamma == gam.alpha


class TestTheorem2:
    def base(self, model, profile):
        return (profile.w, mplf.InjectionSet.zeros(model))

    def test_golden_values(self, golden):
        model, profile, inj = golden
        cert = mplf.check_theorem2(model, profile, self.base(model, profile), inj)
        assert cert.satisfied
        assert cert.rho_used == pytest.approx(0.5, abs=1e-12)
        assert cert.rho_dagger == pytest.approx(RHO_DAGGER_GOLDEN, abs=1e-12)
        assert cert.diagnostics["condition1"]["lhs"] == 0.0
        assert cert.diagnostics["condition2"]["lhs"] == pytest.approx(0.1, abs=1e-15)
        assert cert.diagnostics["condition2"]["rhs"] == pytest.approx(0.25, abs=1e-15)

    def test_boundary_loading_fails_strict_inequality(self):
        model, profile = single_phase_model()
        inj = wye_injection(model, "load", "a", -0.25)
        cert = mplf.check_theorem2(model, profile, (profile.w, mplf.InjectionSet.zeros(model)), inj)
        assert not cert.satisfied
        assert cert.rho_used is None

    def test_target_equal_base_gives_zero_radius(self, rng):
        model, profile, inj = certified_instance(rng)
        sol = mplf.solve_fixed_point(model, profile, inj)
        cert = mplf.check_theorem2(model, profile, (sol.v, inj), inj)
        assert cert.satisfied
        assert cert.rho_dagger == pytest.approx(0.0, abs=1e-15)

    def test_invalid_base_rejected(self, golden):
        model, profile, inj = golden
        with pytest.raises(mplf.InvalidBaseError):
            mplf.check_theorem2(model, profile, (1.5 * profile.w, inj), inj)

    def test_solution_contained_in_tight_ball(self, rng):
        for _ in range(10):
            model, profile, inj = certified_instance(rng)
            cert = mplf.check_theorem2(
                model, profile, (profile.w, mplf.InjectionSet.zeros(model)), inj
            )
            sol = mplf.solve_fixed_point(model, profile, inj)
            radii = cert.ball_radii(profile, cert.rho_dagger)
            assert (np.abs(sol.v - profile.w) <= radii + 1e-9).all()

    def test_serialization_round_trip(self, golden):
        model, profile, inj = golden
        cert = mplf.check_theorem2(model, profile, (profile.w, mplf.InjectionSet.zeros(model)), inj)
        doc = json.loads(json.dumps(cert.to_dict()))
        assert doc["satisfied"] is True
        assert doc["diagnostics"]["beta"] is None  # no pairs -> reported absent
        assert doc["rho_dagger"] == pytest.approx(RHO_DAGGER_GOLDEN, rel=1e-15)


class TestTheorem1:
    def test_zero_target_returns_smallest_grid_point(self, rng):
        model, profile = random_network(rng)
        zero = mplf.InjectionSet.zeros(model)
        cert = mplf.check_theorem1(model, profile, (profile.w, zero), zero, scan_points=100)
        assert cert.satisfied
        assert cert.rho_used == pytest.approx(1.0 / 101, rel=1e-12)

    def test_single_phase_feasible(self, golden):
        model, profile, inj = golden
        cert = mplf.check_theorem1(model, profile, (profile.w, mplf.InjectionSet.zeros(model)), inj)
        assert cert.satisfied
        # smallest rho with rho (1 - rho) >= 0.1
        assert cert.rho_used == pytest.approx(0.5 - math.sqrt(0.15), abs=1e-3)

    def test_single_phase_infeasible_beyond_limit(self):
        model, profile = single_phase_model()
        inj = wye_injection(model, "load", "a", -0.3)
        cert = mplf.check_theorem1(model, profile, (profile.w, mplf.InjectionSet.zeros(model)), inj)
        assert not cert.satisfied
        assert cert.rho_used is None

    def test_theorem2_implies_theorem1(self, rng):
        for _ in range(20):
            model, profile, inj = certified_instance(rng)
            base = (profile.w, mplf.InjectionSet.zeros(model))
            c2 = mplf.check_theorem2(model, profile, base, inj)
            c1 = mplf.check_theorem1(model, profile, base, inj)
            assert c2.satisfied
            assert c1.satisfied
            # the scan finds a radius no larger than the explicit one
            assert c1.rho_used <= c2.rho_used + 1e-12
