import numpy as np
import numpy.testing as npt
import pytest

import mplf
from conftest import (
    BALANCED_V0,
    random_injections,
    random_network,
    random_network_specs,
    single_phase_model,
)

GAMMA_BLOCK = np.array([[1, -1, 0], [0, 1, -1], [-1, 0, 1]])


def three_phase_line(y=5.0 - 15.0j):
    return np.diag([y, y, y]).astype(complex)


class TestConnectionMatrix:
    def test_full_three_phase_bus_gives_gamma_block(self):
        buses = [
            mplf.BusSpec("s", "abc"),
            mplf.BusSpec("b", "abc", ("ab", "bc", "ca")),
        ]
        lines = [mplf.LineSpec("s", "b", "abc", three_phase_line())]
        model = mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0))
        npt.assert_array_equal(model.connection.H, GAMMA_BLOCK)
        npt.assert_array_equal(model.connection.L, np.abs(GAMMA_BLOCK))

    def test_two_phase_bus_single_pair(self):
        buses = [mplf.BusSpec("s", "ab"), mplf.BusSpec("b", "ab", ("ab",))]
        lines = [mplf.LineSpec("s", "b", "ab", np.eye(2, dtype=complex))]
        model = mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0[:2]))
        npt.assert_array_equal(model.connection.H, [[1, -1]])

    def test_no_delta_connections_empty_rows(self):
        model, _ = single_phase_model()
        assert model.connection.H.shape == (0, 1)
        assert model.connection.L.shape == (0, 1)

    def test_missing_phase_rejected(self):
        buses = [mplf.BusSpec("s", "abc"), mplf.BusSpec("b", "ab", ("bc",))]
        lines = [mplf.LineSpec("s", "b", "ab", np.eye(2, dtype=complex))]
        with pytest.raises(mplf.ModelError):
            mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0))

    def test_row_sums_vanish(self, rng):
        for _ in range(10):
            model, _ = random_network(rng)
            if model.n_delta:
                npt.assert_array_equal(model.connection.H.sum(axis=1), 0)


class TestAssembly:
    def test_single_branch_blocks(self):
        model, _ = single_phase_model(y=1.0)
        npt.assert_allclose(model.yll, [[1.0]])
        npt.assert_allclose(model.yl0, [[-1.0]])
        npt.assert_allclose(model.y00, [[1.0]])

    def test_parallel_lines_double_admittance(self):
        buses = [mplf.BusSpec("s", "a"), mplf.BusSpec("b", "a")]
        line = mplf.LineSpec("s", "b", "a", np.array([[2.0 - 4.0j]]))
        one = mplf.assemble_network(buses, [line], mplf.SlackSpec("s", np.array([1.0 + 0j])))
        two = mplf.assemble_network(buses, [line, line], mplf.SlackSpec("s", np.array([1.0 + 0j])))
        npt.assert_allclose(two.yll, 2 * one.yll)

    def test_zero_admittance_line_isolates_bus(self):
        buses = [mplf.BusSpec("s", "a"), mplf.BusSpec("b", "a")]
        lines = [mplf.LineSpec("s", "b", "a", np.array([[0.0 + 0j]]))]
        with pytest.raises(mplf.ModelError, match="not connected"):
            mplf.assemble_network(buses, lines, mplf.SlackSpec("s", np.array([1.0 + 0j])))

    def test_asymmetric_block_rejected(self):
        buses = [mplf.BusSpec("s", "ab"), mplf.BusSpec("b", "ab")]
        lines = [mplf.LineSpec("s", "b", "ab", np.array([[1.0, 0.5], [0.1, 1.0]], complex))]
        with pytest.raises(mplf.ModelError, match="symmetric"):
            mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0[:2]))

    def test_singular_yll_rejected(self):
        buses = [mplf.BusSpec("s", "ab"), mplf.BusSpec("b", "ab")]
        lines = [mplf.LineSpec("s", "b", "ab", np.ones((2, 2), complex))]
        with pytest.raises(mplf.SingularModelError):
            mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0[:2]))

    def test_phase_mismatch_rejected(self):
        buses = [mplf.BusSpec("s", "a"), mplf.BusSpec("b", "b")]
        lines = [mplf.LineSpec("s", "b", "ab", np.eye(2, dtype=complex))]
        with pytest.raises(mplf.ModelError, match="absent"):
            mplf.assemble_network(buses, lines, mplf.SlackSpec("s", np.array([1.0 + 0j])))

    def test_full_matrix_symmetric_on_random_networks(self, rng):
        for _ in range(10):
            model, _ = random_network(rng)
            full = np.block([[model.y00, model.y0l], [model.yl0, model.yll]])
            npt.assert_allclose(full, full.T, rtol=0, atol=1e-12 * np.abs(full).max())


class TestZeroLoad:
    def test_single_phase_unity(self):
        model, profile = single_phase_model(y=1.0, v0=1.0)
        npt.assert_allclose(profile.w, [1.0])
        assert profile.w_inverse_available

    def test_balanced_three_phase_replicates_slack(self):
        buses = [mplf.BusSpec("s", "abc"), mplf.BusSpec("b", "abc")]
        lines = [mplf.LineSpec("s", "b", "abc", three_phase_line())]
        model = mplf.assemble_network(buses, lines, mplf.SlackSpec("s", BALANCED_V0))
        profile = mplf.zero_load_voltage(model)
        npt.assert_allclose(profile.w, BALANCED_V0, atol=1e-12)

    def test_chain_of_two_buses(self):
        buses = [mplf.BusSpec("s", "a"), mplf.BusSpec("b1", "a"), mplf.BusSpec("b2", "a")]
        lines = [
            mplf.LineSpec("s", "b1", "a", np.array([[1.0 + 0j]])),
            mplf.LineSpec("b1", "b2", "a", np.array([[1.0 + 0j]])),
        ]
        model = mplf.assemble_network(buses, lines, mplf.SlackSpec("s", np.array([1.0 + 0j])))
        profile = mplf.zero_load_voltage(model)
        npt.assert_allclose(profile.w, [1.0, 1.0], atol=1e-12)

    def test_zero_slack_voltage_rejected(self):
        with pytest.raises(mplf.DegenerateProfileError):
            single_phase_model(v0=0.0)

    def test_profile_entries_positive_on_random_networks(self, rng):
        for _ in range(10):
            _, profile = random_network(rng)
            assert profile.w_abs.min() > 0
            if profile.Lw.size:
                assert profile.Lw.min() > 0

    def test_solve_residual_small(self, rng):
        model, profile = random_network(rng)
        res = np.abs(model.yll @ profile.w + model.yl0 @ model.v0)
        assert res.max() <= 1e-10


class TestPermutationEquivariance:
    def test_relabeling_permutes_everything(self, rng):
        for _ in range(5):
            buses, lines, slack = random_network_specs(rng, max_buses=4)
            model = mplf.assemble_network(buses, lines, slack)
            profile = mplf.zero_load_voltage(model)
            inj = random_injections(rng, model, profile, target_xi=0.1)

            # Same network, PQ buses declared in reversed order.
            permuted = mplf.assemble_network([buses[0]] + buses[1:][::-1], lines, slack)

            perm = [
                model.index.phase_index[key]
                for key in sorted(permuted.index.phase_index, key=permuted.index.phase_index.get)
            ]
            dperm = [
                model.index.delta_index[key]
                for key in sorted(permuted.index.delta_index, key=permuted.index.delta_index.get)
            ]
            npt.assert_allclose(permuted.yll, model.yll[np.ix_(perm, perm)])
            npt.assert_array_equal(permuted.connection.H, model.connection.H[np.ix_(dperm, perm)])

            prof_p = mplf.zero_load_voltage(permuted)
            npt.assert_allclose(prof_p.w, profile.w[perm])

            inj_p = mplf.InjectionSet(inj.s_wye[perm], inj.s_delta[dperm])
            sol = mplf.solve_fixed_point(model, profile, inj)
            sol_p = mplf.solve_fixed_point(permuted, prof_p, inj_p)
            npt.assert_allclose(sol_p.v, sol.v[perm], atol=1e-9)


class TestJson:
    def doc(self):
        return {
            "buses": [
                {"id": "s", "phases": "ab"},
                {"id": "b", "phases": "ab", "delta_connections": ["ab"]},
            ],
            "lines": [
                {
                    "from": "s",
                    "to": "b",
                    "phases": "ab",
                    "series_admittance": [
                        {"re": 1.0, "im": -2.0},
                        {"re": 0.0, "im": 0.0},
                        {"re": 0.0, "im": 0.0},
                        {"re": 1.0, "im": -2.0},
                    ],
                }
            ],
            "slack": {
                "id": "s",
                "voltages": [{"re": 1.0, "im": 0.0}, {"re": -0.5, "im": -0.8660254}],
            },
        }

    def test_parse_golden(self):
        model = mplf.network_from_json(self.doc())
        assert model.n_phases == 2
        assert model.n_delta == 1
        npt.assert_allclose(model.yll, np.diag([1 - 2j, 1 - 2j]))

    def test_missing_key_rejected(self):
        doc = self.doc()
        del doc["slack"]
        with pytest.raises(mplf.InputFormatError, match="slack"):
            mplf.network_from_json(doc)

    def test_wrong_block_size_rejected(self):
        doc = self.doc()
        doc["lines"][0]["series_admittance"] = doc["lines"][0]["series_admittance"][:3]
        with pytest.raises(mplf.InputFormatError, match="series_admittance"):
            mplf.network_from_json(doc)

    def test_multiple_slack_rejected(self):
        doc = self.doc()
        doc["slack"] = [doc["slack"], doc["slack"]]
        with pytest.raises(mplf.ModelError, match="slack"):
            mplf.network_from_json(doc)

    def test_bad_complex_rejected(self):
        doc = self.doc()
        doc["slack"]["voltages"][0] = {"re": 1.0}
        with pytest.raises(mplf.InputFormatError, match="voltages"):
            mplf.network_from_json(doc)
