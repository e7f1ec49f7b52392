"""Acceptance criteria, one test per criterion, at their stated tolerances.

Each test prints one pass/fail line (visible with ``pytest -s`` or in the
captured output).  Criterion 13 concerns the figure-render package and runs
in figrender's own suite; everything here is runnable without it.
"""

import csv
import json
import time

import numpy as np
import pytest

from conftest import make_commuting_instance
from nasep.charges import ProductIndex, random_conserving_unitary
from nasep.cli import main
from nasep.configio import SweepConfig
from nasep.experiments import (
    default_sweep_config,
    fig5_trajectory_pair,
    no_current_instance,
    pauli_charge_set,
    run_sweep,
)
from nasep.instance import Instance
from nasep.pointer import estimate_weak_value
from nasep.quasiprob import reverse_kdq, symmetrized_kdq
from nasep.sep import (
    avg_sigma_chrg,
    avg_sigma_surp,
    avg_sigma_traj,
    contextuality_witness,
    ft_chrg,
    ft_surp,
    ft_traj,
    sigma_chrg_values,
    sigma_surp_degenerate_demo,
    sigma_surp_values,
    sigma_traj_pair_table,
    weak_values,
    _broadcast_pair_table,
)
from nasep.quasiprob import Trajectory
from nasep.thermal import DensityOperator, GgeSpec, initial_product_state


def _report(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"ACCEPTANCE {number:2d} {name}: {status}{suffix}")
    assert passed, f"criterion {number} ({name}) failed{suffix}"


@pytest.fixture(scope="module")
def preset_instances():
    cfg3 = default_sweep_config(3)
    cfg4 = default_sweep_config(4)
    cfg5 = default_sweep_config(5)
    return [
        cfg3.instance.with_overrides({"unitary.theta": np.pi / 5}).build(),
        cfg4.instance.with_overrides({"beta_A.2": 1.0, "beta_A.0": 1.0}).build(),
        cfg5.instance.with_overrides({"beta_A.2": 1.0, "beta_A.1": 0.02}).build(),
    ]


@pytest.fixture(scope="module")
def random_instances():
    cs = pauli_charge_set()
    out = []
    for seed in range(25):
        rng = np.random.default_rng(1000 + seed)
        spec_a = GgeSpec(tuple(rng.uniform(-1.0, 1.0, 3)))
        spec_b = GgeSpec(tuple(rng.uniform(-1.0, 1.0, 3)))
        out.append(Instance.product(cs, spec_a, spec_b, random_conserving_unitary(cs, 5000 + seed)))
    return out


@pytest.fixture(scope="module")
def commuting_instances():
    return [make_commuting_instance(seed) for seed in range(50)]


def test_criterion_01_kdq_normalization(preset_instances, random_instances):
    start = time.time()
    worst = 0.0
    for inst in preset_instances + random_instances:
        worst = max(worst, abs(inst.forward.sum() - 1.0))
        worst = max(worst, abs(reverse_kdq(inst.rho, inst.unitary, inst.charge_set).sum() - 1.0))
        worst = max(
            worst, abs(symmetrized_kdq(inst.rho, inst.unitary, inst.charge_set).sum() - 1.0)
        )
    elapsed = time.time() - start
    _report(
        1,
        "kdq normalization",
        worst <= 1e-9 and elapsed < 10.0,
        f"residual {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_02_trajectory_ft(preset_instances, random_instances):
    worst = max(ft_traj(inst).residual for inst in preset_instances + random_instances)
    _report(2, "trajectory fluctuation theorem", worst <= 1e-8, f"residual {worst:.2e}")


def test_criterion_03_charge_ft_ledger(preset_instances, random_instances):
    worst = 0.0
    for inst in preset_instances + random_instances:
        report = ft_chrg(inst)
        worst = max(worst, report.residual, report.checks["closed_form_trace_residual"])
    cfg3 = default_sweep_config(3)
    at_zero = ft_chrg(cfg3.instance.with_overrides({"unitary.theta": 0.0}).build())
    zero_ok = abs(at_zero.closed_form_term - 1.0) <= 1e-10 and abs(at_zero.correction) <= 1e-10
    _report(3, "charge ft ledger", worst <= 1e-8 and zero_ok, f"residual {worst:.2e}")


def test_criterion_04_surprisal_ft(preset_instances, random_instances):
    worst = max(ft_surp(inst, 0).residual for inst in preset_instances + random_instances)
    # Diagonal-in-basis state: correction vanishes.
    cs = pauli_charge_set()
    from nasep.experiments import qubit_unitary

    diag = Instance.product(cs, GgeSpec((0.8, 0, 0)), GgeSpec((0.3, 0, 0)), qubit_unitary(0.9))
    diag_report = ft_surp(diag, 0)
    diag_ok = abs(diag_report.correction) <= 1e-10
    _report(4, "surprisal fluctuation theorem", worst <= 1e-8 and diag_ok, f"residual {worst:.2e}")


def test_criterion_05_equivalence_collapse(commuting_instances):
    worst = 0.0
    for inst in commuting_instances:
        cs = inst.charge_set
        chrg = sigma_chrg_values(cs, inst.spec_a, inst.spec_b)
        surp = sigma_surp_values(inst.rho, cs, 0)
        traj = _broadcast_pair_table(
            sigma_traj_pair_table(inst.rho, inst.unitary, cs, "principal"), cs.n_charges
        )
        live = np.abs(inst.forward.weights) > 1e-10
        worst = max(worst, float(np.abs(chrg[live] - surp[live]).max()))
        worst = max(worst, float(np.abs(chrg[live] - traj[live]).max()))
    _report(5, "commuting-case collapse", worst <= 1e-8, f"max gap {worst:.2e}")


def test_criterion_06_detailed_charge_conservation(commuting_instances, preset_instances):
    worst_commuting = 0.0
    for inst in commuting_instances:
        mask = inst.forward.conserving_flags
        if (~mask).any():
            worst_commuting = max(worst_commuting, float(np.abs(inst.forward.weights[~mask]).max()))
    fig3 = preset_instances[0]  # theta = pi/5 preset
    mask3 = fig3.forward.conserving_flags
    witness = float(np.abs(fig3.forward.weights[~mask3]).max())
    _report(
        6,
        "detailed charge conservation",
        worst_commuting <= 1e-10 and witness > 1e-3,
        f"commuting {worst_commuting:.2e}, witness {witness:.2e}",
    )


def test_criterion_07_second_law_forms(random_instances):
    worst_chrg = 0.0
    min_relent = np.inf
    for inst in random_instances:
        avg = avg_sigma_chrg(inst)
        worst_chrg = max(
            worst_chrg,
            abs(avg.via_trajectories - avg.via_relent),
            abs(avg.via_trajectories - avg.via_flows),
        )
        min_relent = min(min_relent, avg.via_relent)
    cs = pauli_charge_set()
    worst_traj = 0.0
    worst_residue = 0.0
    min_re = np.inf
    for seed in range(10):
        inst = Instance.pure_with_gge_marginals(
            cs,
            GgeSpec((0.5, 1.0, 0.7)),
            GgeSpec((0.6, 0.2, 0.1)),
            random_conserving_unitary(cs, 300 + seed),
            seed=400 + seed,
        )
        avg_t = avg_sigma_traj(inst)
        worst_traj = max(
            worst_traj, abs(avg_t.via_trajectories.real - avg_t.via_pure_formula.real)
        )
        worst_residue = max(
            worst_residue,
            avg_t.phase_imag_residue,
            abs(avg_t.via_trajectories.imag - avg_t.via_pure_formula.imag),
        )
        min_re = min(min_re, avg_t.via_trajectories.real)
    passed = (
        worst_chrg <= 1e-8
        and min_relent >= -1e-9
        and worst_traj <= 1e-7
        and worst_residue <= 1e-9
        and min_re >= -1e-9
    )
    _report(
        7,
        "second-law forms",
        passed,
        f"chrg {worst_chrg:.2e}, traj {worst_traj:.2e}, residue {worst_residue:.2e}",
    )


def test_criterion_08_times_arrow_reversal(tmp_path):
    defaults = default_sweep_config(4)
    cfg = SweepConfig.from_dict(
        {
            "axis1": {"path": "beta_A.2", "min": 0.02, "max": 2.0, "steps": 9},
            "axis2": {"path": "beta_A.0", "min": 0.02, "max": 2.0, "steps": 9},
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
    max_residual = max(float(r["dual_path_residual"]) for r in rows)
    negative_corner = cells[(2.0, 0.02)]
    positive_corner = cells[(0.02, 2.0)]
    passed = negative_corner < -1e-3 and positive_corner > 1e-3 and max_residual <= 1e-8
    _report(
        8,
        "time's-arrow reversal",
        passed,
        f"corners {negative_corner:+.3f}/{positive_corner:+.3f}, residual {max_residual:.2e}",
    )


def test_criterion_09_contextuality_witness(preset_instances):
    fig5 = preset_instances[2]
    cs = fig5.charge_set
    i1, f1 = fig5_trajectory_pair(cs)
    table = sigma_traj_pair_table(fig5.rho, fig5.unitary, cs, "principal")
    target = table[i1.k_a * cs.dim + i1.k_b, f1.k_a * cs.dim + f1.k_b]
    witness = contextuality_witness(fig5)
    target_found = any(e.i1 == i1 and e.f1 == f1 for e in witness.entries)

    quiet = no_current_instance()
    quiet_witness = contextuality_witness(quiet)
    averages = (
        abs(avg_sigma_chrg(quiet).via_trajectories),
        abs(avg_sigma_surp(quiet, 0).via_trajectories),
        abs(avg_sigma_traj(quiet).via_trajectories),
    )
    fts = (
        abs(ft_chrg(quiet).lhs - 1.0),
        abs(ft_surp(quiet, 0).lhs - 1.0),
        abs(ft_traj(quiet).lhs - 1.0),
    )
    passed = (
        abs(target.imag) > 1e-3
        and target_found
        and not quiet_witness.entries
        and max(averages) <= 1e-9
        and max(fts) <= 1e-9
    )
    _report(
        9,
        "contextuality witness",
        passed,
        f"|Im sigma_traj| {abs(target.imag):.3f}, quiet averages {max(averages):.2e}",
    )


def test_criterion_10_weak_pointer_oracle():
    cs = pauli_charge_set()
    g_min = 0.02
    tol = max(1e-4, 10.0 * g_min**2)
    master = np.random.default_rng(2024)
    worst = 0.0
    slopes = []
    for _ in range(20):
        seed = int(master.integers(0, 2**31))
        rng = np.random.default_rng(seed)
        rho = initial_product_state(
            cs, GgeSpec(tuple(rng.uniform(-1, 1, 3))), GgeSpec(tuple(rng.uniform(-1, 1, 3)))
        )
        u = random_conserving_unitary(cs, seed)
        pair = None
        i1 = f1 = ProductIndex(0, 0)
        for _ in range(64):
            i1 = ProductIndex(int(rng.integers(2)), int(rng.integers(2)))
            f1 = ProductIndex(int(rng.integers(2)), int(rng.integers(2)))
            pair = weak_values(i1, f1, rho, u, cs)
            if abs(pair.wv_forward) > 0.05:
                break
        est = estimate_weak_value(rho, u, i1, f1, cs, g_schedule=(0.08, 0.04, g_min))
        worst = max(worst, abs(est.value - pair.wv_forward))
        errors = [abs(r - pair.wv_forward) for r in est.raw_estimates]
        if max(errors) > 1e-8:
            slopes.append(
                float(np.polyfit(np.log(np.array(est.couplings)), np.log(errors), 1)[0])
            )
    slope_ok = bool(slopes) and all(1.8 <= s <= 2.2 for s in slopes)
    _report(
        10,
        "weak-pointer oracle",
        worst <= tol and slope_ok,
        f"worst error {worst:.2e} (tol {tol:.1e}), slopes within [1.8, 2.2]",
    )


def test_criterion_11_degenerate_demo():
    beta_a, beta_b = 0.7, 0.25
    lam = np.array([1.0, 1.0, 2.0])
    rho_a = np.diag(np.exp(-beta_a * lam)) / np.exp(-beta_a * lam).sum()
    rho_b = np.diag(np.exp(-beta_b * lam)) / np.exp(-beta_b * lam).sum()
    rho = DensityOperator(np.kron(rho_a, rho_b))
    projectors = [np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0])]
    ranks = np.array([2.0, 1.0])
    eig = np.array([1.0, 2.0])
    traj = Trajectory(initial=(ProductIndex(0, 0),), final=(ProductIndex(1, 1),))
    demo = sigma_surp_degenerate_demo(traj, projectors, rho)
    i, f = traj.initial[0], traj.final[0]
    chrg = beta_a * (eig[f.k_a] - eig[i.k_a]) + beta_b * (eig[f.k_b] - eig[i.k_b])
    closed = chrg + np.log(ranks[i.k_a] * ranks[i.k_b] / (ranks[f.k_a] * ranks[f.k_b]))
    residual = abs(demo - closed)
    separated = abs(demo - chrg) > 1e-6
    _report(
        11,
        "degenerate rank demo",
        residual <= 1e-12 and separated,
        f"residual {residual:.1e}, surp-chrg gap {abs(demo - chrg):.3f}",
    )


def test_criterion_12_sweep_determinism(tmp_path):
    p1, p2 = tmp_path / "fig3_a.csv", tmp_path / "fig3_b.csv"
    assert main(["sweep", "--figure", "3", "--out", str(p1)]) == 0
    assert main(["sweep", "--figure", "3", "--out", str(p2)]) == 0
    identical = p1.read_bytes() == p2.read_bytes()
    _report(12, "sweep determinism", identical, f"{p1.stat().st_size} bytes")


def test_criterion_13_secondary_pointer():
    # [SECONDARY] figure-render acceptance runs in figrender's own test suite.
    print("ACCEPTANCE 13 figure-render: covered by figrender/tests (secondary component)")
