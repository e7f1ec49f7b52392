import csv
import json

import numpy as np
import pytest

from nasep.cli import main
from nasep.configio import InstanceConfig, SweepConfig, load_instance_config
from nasep.errors import ConfigError
from nasep.experiments import (
    default_sweep_config,
    fig5_trajectory_pair,
    pauli_charge_set,
    qubit_unitary,
    run_sweep,
)
from nasep.charges import check_conservation, swap_operator


def _base_config():
    return {
        "charges": "pauli-xyz",
        "beta_A": [0.5, 1.0, 0.7],
        "beta_B": [0.6, 0.2, 0.1],
        "unitary": {"theta": 0.4},
    }


class TestQubitUnitary:
    def test_theta_zero_identity(self):
        assert np.allclose(qubit_unitary(0.0), np.eye(4))

    def test_theta_half_pi_swap(self):
        assert np.allclose(qubit_unitary(np.pi / 2), 1j * swap_operator(2))

    def test_conserves_pauli_triple(self):
        cs = pauli_charge_set()
        for theta in np.linspace(0, np.pi / 2, 7):
            assert check_conservation(qubit_unitary(theta), cs).passed


class TestInstanceConfig:
    def test_build_product_instance(self):
        cfg = InstanceConfig.from_dict(_base_config())
        inst = cfg.build()
        assert inst.state_kind == "product"
        assert inst.charge_set.n_charges == 3

    def test_unknown_key_rejected(self):
        data = _base_config()
        data["extra"] = 1
        with pytest.raises(ConfigError):
            InstanceConfig.from_dict(data)

    def test_unknown_nested_key_rejected(self):
        data = _base_config()
        data["unitary"] = {"theta": 0.4, "junk": 2}
        with pytest.raises(ConfigError):
            InstanceConfig.from_dict(data)

    def test_beta_length_checked(self):
        data = _base_config()
        data["beta_A"] = [0.5, 1.0]
        with pytest.raises(ConfigError):
            InstanceConfig.from_dict(data)

    def test_alpha_surp_range(self):
        data = _base_config()
        data["alpha_surp"] = 4
        with pytest.raises(ConfigError):
            InstanceConfig.from_dict(data)
        data["alpha_surp"] = 2
        assert InstanceConfig.from_dict(data).alpha_surp() == 1

    def test_explicit_matrix_charges(self):
        data = {
            "charges": [[[1.0, [0.0, 0.0]], [[0.0, 0.0], -1.0]]],
            "beta_A": [0.3],
            "beta_B": [0.1],
            "unitary": {"random_seed": 5},
        }
        inst = InstanceConfig.from_dict(data).build()
        assert inst.charge_set.n_charges == 1

    def test_pure_state_requires_seed(self):
        data = _base_config()
        data["state"] = "pure_with_gge_marginals"
        with pytest.raises(ConfigError):
            InstanceConfig.from_dict(data)
        data["state"] = {"kind": "pure_with_gge_marginals", "seed": 3}
        inst = InstanceConfig.from_dict(data).build()
        assert inst.state_kind == "pure"

    def test_path_overrides(self):
        cfg = InstanceConfig.from_dict(_base_config())
        updated = cfg.with_overrides({"beta_A.2": 1.5, "unitary.theta": 0.9})
        assert updated.raw["beta_A"][2] == 1.5
        assert updated.raw["unitary"]["theta"] == 0.9

    def test_bad_path_rejected(self):
        cfg = InstanceConfig.from_dict(_base_config())
        with pytest.raises(ConfigError):
            cfg.with_overrides({"beta_C.0": 1.0})


class TestSweepConfig:
    def test_defaults_valid(self):
        for figure in (3, 4, 5):
            cfg = default_sweep_config(figure)
            assert cfg.axis1.steps >= 2

    def test_override_axis(self):
        defaults = default_sweep_config(3)
        cfg = SweepConfig.from_dict(
            {"axis1": {"path": "unitary.theta", "min": 0.0, "max": 1.0, "steps": 5}}, defaults
        )
        assert cfg.axis1.steps == 5

    def test_steps_minimum(self):
        defaults = default_sweep_config(3)
        with pytest.raises(ConfigError):
            SweepConfig.from_dict(
                {"axis1": {"path": "unitary.theta", "min": 0, "max": 1, "steps": 1}}, defaults
            )

    def test_unresolvable_path_rejected(self):
        defaults = default_sweep_config(3)
        with pytest.raises(ConfigError):
            SweepConfig.from_dict(
                {"axis1": {"path": "nope.theta", "min": 0, "max": 1, "steps": 3}}, defaults
            )

    def test_output_subset(self, tmp_path):
        defaults = default_sweep_config(3)
        cfg = SweepConfig.from_dict(
            {
                "axis1": {"path": "unitary.theta", "min": 0.0, "max": 0.5, "steps": 3},
                "outputs": ["theta", "sigma_chrg_avg"],
            },
            defaults,
        )
        out = tmp_path / "subset.csv"
        run_sweep(3, out, cfg)
        rows = list(csv.DictReader(open(out)))
        assert set(rows[0]) == {"theta", "sigma_chrg_avg"}


class TestSweeps:
    def test_fig3_theta_zero_row(self, tmp_path):
        defaults = default_sweep_config(3)
        cfg = SweepConfig.from_dict(
            {"axis1": {"path": "unitary.theta", "min": 0.0, "max": 1.5, "steps": 4}}, defaults
        )
        out = tmp_path / "fig3.csv"
        run_sweep(3, out, cfg)
        rows = list(csv.DictReader(open(out)))
        first = rows[0]
        assert float(first["theta"]) == 0.0
        assert abs(float(first["ekappa_re"]) - 1.0) <= 1e-10
        assert abs(float(first["ekappa_im"])) <= 1e-10
        assert abs(float(first["correction_re"])) <= 1e-10
        for row in rows:
            assert float(row["ft_residual"]) <= 1e-8

    def test_fig4_small_grid_corners(self, tmp_path):
        defaults = default_sweep_config(4)
        cfg = SweepConfig.from_dict(
            {
                "axis1": {"path": "beta_A.2", "min": 0.02, "max": 2.0, "steps": 5},
                "axis2": {"path": "beta_A.0", "min": 0.02, "max": 2.0, "steps": 5},
            },
            defaults,
        )
        out = tmp_path / "fig4.csv"
        run_sweep(4, out, cfg)
        rows = list(csv.DictReader(open(out)))
        cells = {
            (float(r["beta_x_A"]), float(r["beta_z_A"])): float(r["sigma_surp_avg_traj"])
            for r in rows
        }
        assert cells[(2.0, 0.02)] < -1e-3
        assert cells[(0.02, 2.0)] > 1e-3
        assert max(float(r["dual_path_residual"]) for r in rows) <= 1e-8

    def test_fig5_small_grid(self, tmp_path):
        defaults = default_sweep_config(5)
        cfg = SweepConfig.from_dict(
            {
                "axis1": {"path": "beta_A.2", "min": 0.02, "max": 2.0, "steps": 5},
                "axis2": {"path": "beta_A.1", "min": 0.02, "max": 2.0, "steps": 5},
            },
            defaults,
        )
        out = tmp_path / "fig5.csv"
        run_sweep(5, out, cfg)
        rows = list(csv.DictReader(open(out)))
        ims = [abs(float(r["sigma_traj_im"])) for r in rows]
        assert max(ims) > 1e-3
        # Most cells witness contextuality at these parameters.
        assert sum(1 for v in ims if v > 1e-3) >= len(ims) // 2

    def test_byte_identical_runs(self, tmp_path):
        defaults = default_sweep_config(3)
        cfg = SweepConfig.from_dict(
            {"axis1": {"path": "unitary.theta", "min": 0.0, "max": 1.5, "steps": 6}}, defaults
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_sweep(3, p1, cfg)
        run_sweep(3, p2, cfg)
        assert p1.read_bytes() == p2.read_bytes()


class TestCli:
    def test_sweep_command(self, tmp_path):
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(
            json.dumps({"axis1": {"path": "unitary.theta", "min": 0.0, "max": 1.0, "steps": 3}})
        )
        out = tmp_path / "fig3.csv"
        assert main(["sweep", "--figure", "3", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert out.exists()

    def test_kdq_command(self, tmp_path):
        cfg_path = tmp_path / "inst.json"
        cfg_path.write_text(json.dumps(_base_config()))
        out = tmp_path / "kdq.csv"
        assert main(["kdq", "--config", str(cfg_path), "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out)))
        assert len(rows) == 4096

    def test_instance_command(self, tmp_path):
        cfg_path = tmp_path / "inst.json"
        cfg_path.write_text(json.dumps(_base_config()))
        report_path = tmp_path / "report.json"
        assert main(["instance", "--config", str(cfg_path), "--report", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        avgs = report["averages"]["sigma_chrg"]
        assert avgs["via_trajectories"] == pytest.approx(avgs["via_relent"], abs=1e-8)
        assert report["fluctuation_theorems"]["traj"]["residual"] <= 1e-8

    def test_unknown_config_key_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        data = _base_config()
        data["mystery"] = True
        cfg_path.write_text(json.dumps(data))
        assert main(["instance", "--config", str(cfg_path), "--report", str(tmp_path / "r.json")]) == 2

    def test_verify_fault_injection(self, tmp_path):
        from nasep.charges import PAULI_X
        from nasep.linalg import tensor_product, unitary_from_hermitian

        bad = qubit_unitary(0.3) @ unitary_from_hermitian(1e-3 * tensor_product(PAULI_X, PAULI_X))
        data = _base_config()
        data["unitary"] = {"matrix": [[[z.real, z.imag] for z in row] for row in bad]}
        cfg_path = tmp_path / "fault.json"
        cfg_path.write_text(json.dumps(data))
        cfg = load_instance_config(cfg_path)
        from nasep.verify import check_unitary_conservation

        result = check_unitary_conservation(cfg)
        assert not result.passed
        assert result.name == "unitary_conservation"
        assert result.residual > 1e-4


def test_fig5_trajectory_pair_indices():
    cs = pauli_charge_set()
    i1, f1 = fig5_trajectory_pair(cs)
    # Ascending sigma_z eigenvalues: |1> at index 0, |0> at index 1.
    assert tuple(i1) == (1, 0)
    assert tuple(f1) == (1, 1)
