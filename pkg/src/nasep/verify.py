"""Named verification checks behind ``nasep verify``.

Each check returns a result record with a pass flag and its worst residual;
the CLI serializes the collection as JSON and exits nonzero when any check
fails.  Checks are deterministic given the seed count.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .charges import (
    ProductIndex,
    build_charge_set,
    check_conservation,
    random_commuting_block_unitary,
    random_conserving_unitary,
)
from .errors import NasepError
from .experiments import (
    default_sweep_config,
    fig5_trajectory_pair,
    no_current_instance,
    pauli_charge_set,
    qubit_unitary,
    run_sweep,
)
from .instance import Instance
from .numerics import TOLS
from .pointer import estimate_weak_value
from .quasiprob import Trajectory
from .sep import (
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
from .thermal import DensityOperator, GgeSpec, initial_product_state


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    details: dict = field(default_factory=dict)


def _fig_instances() -> list[Instance]:
    cfg3 = default_sweep_config(3)
    cfg4 = default_sweep_config(4)
    cfg5 = default_sweep_config(5)
    return [
        cfg3.instance.with_overrides({"unitary.theta": math.pi / 5}).build(),
        cfg4.instance.with_overrides({"beta_A.2": 1.0, "beta_A.0": 1.0}).build(),
        cfg5.instance.with_overrides({"beta_A.2": 1.0, "beta_A.1": 0.02}).build(),
    ]


def _random_instances(seeds: int) -> list[Instance]:
    cs = pauli_charge_set()
    out = []
    for seed in range(seeds):
        rng = np.random.default_rng(1000 + seed)
        spec_a = GgeSpec(tuple(rng.uniform(-1.0, 1.0, cs.n_charges)))
        spec_b = GgeSpec(tuple(rng.uniform(-1.0, 1.0, cs.n_charges)))
        u = random_conserving_unitary(cs, 5000 + seed)
        out.append(Instance.product(cs, spec_a, spec_b, u))
    return out


def _random_commuting_instance(seed: int) -> Instance:
    """Commuting charges diagonal in a random shared basis, block-random unitary."""
    rng = np.random.default_rng(9000 + seed)
    d = 2 + seed % 2  # alternate qubit and qutrit systems
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    basis, _ = np.linalg.qr(z)
    mats = []
    for _ in range(2):
        spectrum = np.sort(rng.uniform(-1.0, 1.0, d))
        while np.diff(spectrum).min() < 0.2:
            spectrum = np.sort(rng.uniform(-1.0, 1.0, d))
        mats.append(basis @ np.diag(spectrum) @ basis.conj().T)
    cs = build_charge_set(mats)
    spec_a = GgeSpec(tuple(rng.uniform(-1.0, 1.0, 2)))
    spec_b = GgeSpec(tuple(rng.uniform(-1.0, 1.0, 2)))
    u = random_commuting_block_unitary(cs, 7000 + seed)
    return Instance.product(cs, spec_a, spec_b, u)


def check_kdq_normalization(seeds: int = 25) -> CheckResult:
    worst = 0.0
    for inst in _fig_instances() + _random_instances(seeds):
        for dist in (inst.forward, inst.reverse, inst.symmetrized):
            worst = max(worst, abs(dist.sum() - 1.0))
    return CheckResult("kdq_normalization", worst <= 1e-9, worst, {"instances": seeds + 3})


def check_detailed_conservation(n_commuting: int = 50) -> CheckResult:
    worst = 0.0
    for seed in range(n_commuting):
        inst = _random_commuting_instance(seed)
        w = inst.forward.weights
        mask = inst.forward.conserving_flags
        if (~mask).any():
            worst = max(worst, float(np.abs(w[~mask]).max()))
    return CheckResult(
        "detailed_charge_conservation", worst <= 1e-10, worst, {"instances": n_commuting}
    )


def check_violation_witness() -> CheckResult:
    cfg3 = default_sweep_config(3)
    inst = cfg3.instance.with_overrides({"unitary.theta": math.pi / 5}).build()
    w = inst.forward.weights
    mask = inst.forward.conserving_flags
    peak = float(np.abs(w[~mask]).max())
    return CheckResult("nonconserving_weight_witness", peak > 1e-3, peak, {"theta": math.pi / 5})


def check_commuting_collapse(n_commuting: int = 50) -> CheckResult:
    worst = 0.0
    for seed in range(n_commuting):
        inst = _random_commuting_instance(seed)
        cs = inst.charge_set
        chrg = sigma_chrg_values(cs, inst.spec_a, inst.spec_b)
        surp = sigma_surp_values(inst.rho, cs, 0)
        traj = _broadcast_pair_table(
            sigma_traj_pair_table(inst.rho, inst.unitary, cs, "principal"), cs.n_charges
        )
        live = np.abs(inst.forward.weights) > 1e-10
        worst = max(worst, float(np.abs(chrg[live] - surp[live]).max()))
        worst = max(worst, float(np.abs(chrg[live] - traj[live]).max()))
    return CheckResult("commuting_collapse", worst <= 1e-8, worst, {"instances": n_commuting})


def check_ft_chrg(seeds: int = 25) -> CheckResult:
    worst = 0.0
    details = {}
    for inst in _fig_instances() + _random_instances(seeds):
        report = ft_chrg(inst)
        worst = max(
            worst,
            report.residual,
            report.checks["closed_form_trace_residual"],
            report.checks["lhs_trace_residual"],
        )
    cfg3 = default_sweep_config(3)
    at_zero = ft_chrg(cfg3.instance.with_overrides({"unitary.theta": 0.0}).build())
    details["theta0_first_term_error"] = abs(at_zero.closed_form_term - 1.0)
    details["theta0_correction"] = abs(at_zero.correction)
    passed = (
        worst <= 1e-8
        and details["theta0_first_term_error"] <= 1e-10
        and details["theta0_correction"] <= 1e-10
    )
    return CheckResult("ft_chrg_ledger", passed, worst, details)


def check_ft_surp(seeds: int = 25) -> CheckResult:
    worst = 0.0
    for inst in _fig_instances() + _random_instances(seeds):
        worst = max(worst, ft_surp(inst, 0).residual)
    # Diagonal-in-basis state: correction must vanish.
    cs = pauli_charge_set()
    diag = Instance.product(
        cs, GgeSpec((0.8, 0.0, 0.0)), GgeSpec((0.3, 0.0, 0.0)), qubit_unitary(0.9)
    )
    report = ft_surp(diag, 0)
    diag_corr = abs(report.correction)
    passed = worst <= 1e-8 and diag_corr <= 1e-10 and abs(report.lhs - 1.0) <= 1e-10
    return CheckResult("ft_surp", passed, worst, {"diagonal_correction": diag_corr})


def check_ft_traj(seeds: int = 25) -> CheckResult:
    worst = 0.0
    for inst in _fig_instances() + _random_instances(seeds):
        worst = max(worst, ft_traj(inst).residual)
    return CheckResult("ft_traj", worst <= 1e-8, worst, {"instances": seeds + 3})


def check_second_law(seeds: int = 10) -> CheckResult:
    worst = 0.0
    min_chrg = math.inf
    min_traj = math.inf
    for inst in _fig_instances() + _random_instances(seeds):
        avg = avg_sigma_chrg(inst)
        worst = max(
            worst,
            abs(avg.via_trajectories - avg.via_flows),
            abs(avg.via_flows - avg.via_relent),
        )
        min_chrg = min(min_chrg, avg.via_relent)
    cs = pauli_charge_set()
    for seed in range(seeds):
        inst = Instance.pure_with_gge_marginals(
            cs,
            GgeSpec((0.5, 1.0, 0.7)),
            GgeSpec((0.6, 0.2, 0.1)),
            random_conserving_unitary(cs, 300 + seed),
            seed=400 + seed,
        )
        avg_t = avg_sigma_traj(inst)
        worst = max(
            worst,
            abs(avg_t.via_trajectories.real - avg_t.via_pure_formula.real),
            abs(avg_t.via_trajectories.imag - avg_t.via_pure_formula.imag),
            avg_t.log_imag_residue,
            avg_t.phase_imag_residue,
        )
        min_traj = min(min_traj, avg_t.via_trajectories.real)
    passed = worst <= 1e-7 and min_chrg >= -1e-9 and min_traj >= -1e-9
    return CheckResult(
        "second_law_forms",
        passed,
        worst,
        {"min_avg_sigma_chrg": min_chrg, "min_re_avg_sigma_traj": min_traj},
    )


def check_no_current() -> CheckResult:
    """Global-phase unitary: all averages 0, all FTs 1, no witnesses."""
    inst = no_current_instance()
    worst = 0.0
    avg_c = avg_sigma_chrg(inst)
    avg_s = avg_sigma_surp(inst, 0)
    avg_t = avg_sigma_traj(inst)
    worst = max(worst, abs(avg_c.via_trajectories), abs(avg_s.via_trajectories))
    worst = max(worst, abs(avg_t.via_trajectories))
    worst = max(worst, abs(ft_chrg(inst).lhs - 1.0), abs(ft_surp(inst, 0).lhs - 1.0))
    worst = max(worst, abs(ft_traj(inst).lhs - 1.0))
    witness = contextuality_witness(inst)
    passed = worst <= 1e-9 and not witness.entries and not witness.average_flag
    return CheckResult("no_current_limit", passed, worst, {"witnesses": len(witness.entries)})


def check_weak_pointer(n_instances: int = 20) -> CheckResult:
    cs = pauli_charge_set()
    g_min = 0.02
    tol = max(1e-4, 10.0 * g_min * g_min)
    worst = 0.0
    slopes = []
    master = np.random.default_rng(2024)
    for _ in range(n_instances):
        seed = int(master.integers(0, 2**31))
        rng = np.random.default_rng(seed)
        rho = initial_product_state(
            cs,
            GgeSpec(tuple(rng.uniform(-1.0, 1.0, 3))),
            GgeSpec(tuple(rng.uniform(-1.0, 1.0, 3))),
        )
        u = random_conserving_unitary(cs, seed)
        i1 = f1 = ProductIndex(0, 0)
        pair = None
        for _ in range(64):
            i1 = ProductIndex(int(rng.integers(2)), int(rng.integers(2)))
            f1 = ProductIndex(int(rng.integers(2)), int(rng.integers(2)))
            try:
                pair = weak_values(i1, f1, rho, u, cs)
            except NasepError:
                continue
            if abs(pair.wv_forward) > 0.05:
                break
        est = estimate_weak_value(rho, u, i1, f1, cs, g_schedule=(0.08, 0.04, g_min))
        worst = max(worst, abs(est.value - pair.wv_forward))
        errors = [abs(r - pair.wv_forward) for r in est.raw_estimates]
        if max(errors) > 1e-8:
            slope = np.polyfit(np.log(np.array(est.couplings)), np.log(errors), 1)[0]
            slopes.append(float(slope))
    slope_ok = all(1.8 <= s <= 2.2 for s in slopes)
    return CheckResult(
        "weak_pointer_oracle",
        worst <= tol and slope_ok,
        worst,
        {"tolerance": tol, "slopes": [round(s, 3) for s in slopes]},
    )


def check_degenerate_demo() -> CheckResult:
    """Rank-weighted surprisal on a degenerate single charge vs its closed form."""
    lam = np.array([1.0, 1.0, 2.0])
    projectors = [np.diag([1.0, 1.0, 0.0]).astype(complex), np.diag([0.0, 0.0, 1.0]).astype(complex)]
    ranks = np.array([2.0, 1.0])
    beta_a, beta_b = 0.7, 0.25
    z_a = float(np.sum(np.exp(-beta_a * lam)))
    z_b = float(np.sum(np.exp(-beta_b * lam)))
    rho_a = np.diag(np.exp(-beta_a * lam)) / z_a
    rho_b = np.diag(np.exp(-beta_b * lam)) / z_b
    rho = DensityOperator(np.kron(rho_a, rho_b))
    eig = np.array([1.0, 2.0])  # eigenvalue of each supplied projector
    traj = Trajectory(initial=(ProductIndex(0, 0),), final=(ProductIndex(1, 1),))
    demo = sigma_surp_degenerate_demo(traj, projectors, rho)
    i, f = traj.initial[0], traj.final[0]
    chrg = beta_a * (eig[f.k_a] - eig[i.k_a]) + beta_b * (eig[f.k_b] - eig[i.k_b])
    closed = chrg + math.log(
        (ranks[i.k_a] * ranks[i.k_b]) / (ranks[f.k_a] * ranks[f.k_b])
    )
    residual = abs(demo - closed)
    separated = abs(demo - chrg) > 1e-6
    return CheckResult(
        "degenerate_rank_demo",
        residual <= 1e-12 and separated,
        residual,
        {"demo": demo, "closed_form": closed, "sigma_chrg": chrg},
    )


def check_contextuality_witness() -> CheckResult:
    cfg5 = default_sweep_config(5)
    inst = cfg5.instance.with_overrides({"beta_A.2": 1.0, "beta_A.1": 0.02}).build()
    cs = inst.charge_set
    i1, f1 = fig5_trajectory_pair(cs)
    d = cs.dim
    table = sigma_traj_pair_table(inst.rho, inst.unitary, cs, "principal")
    target = table[i1.k_a * d + i1.k_b, f1.k_a * d + f1.k_b]
    witness = contextuality_witness(inst)
    has_target = any(e.i1 == i1 and e.f1 == f1 for e in witness.entries)
    passed = abs(target.imag) > 1e-3 and has_target
    return CheckResult(
        "contextuality_witness",
        passed,
        abs(target.imag),
        {"entries": len(witness.entries), "target_im": target.imag},
    )


def check_unitary_conservation(instance_config=None) -> CheckResult:
    """Conservation of the configured unitary (fault-injection surface)."""
    if instance_config is None:
        cfg3 = default_sweep_config(3)
        instance_config = cfg3.instance.with_overrides({"unitary.theta": math.pi / 5})
    cs = instance_config.charge_set()
    try:
        u = instance_config.unitary()
        report = check_conservation(u, cs)
        residual = max(report.residuals)
        return CheckResult("unitary_conservation", report.passed, residual, {})
    except NasepError as exc:
        return CheckResult("unitary_conservation", False, math.inf, {"error": str(exc)})


def check_sweep_determinism() -> CheckResult:
    from .configio import AxisConfig, SweepConfig

    cfg = default_sweep_config(3)
    small = SweepConfig(
        instance=cfg.instance,
        axis1=AxisConfig(path="unitary.theta", lo=0.0, hi=math.pi / 2, steps=9),
        axis2=None,
        outputs=cfg.outputs,
    )
    with tempfile.TemporaryDirectory() as tmp:
        p1 = os.path.join(tmp, "a.csv")
        p2 = os.path.join(tmp, "b.csv")
        run_sweep(3, p1, small)
        run_sweep(3, p2, small)
        with open(p1, "rb") as fh:
            b1 = fh.read()
        with open(p2, "rb") as fh:
            b2 = fh.read()
    return CheckResult("sweep_determinism", b1 == b2, 0.0 if b1 == b2 else 1.0, {})


def run_verification(instance_config=None, seeds: int = 25) -> dict:
    """Run every check; returns a JSON-serializable report."""
    n_comm = max(seeds, 50)
    checks = [
        check_unitary_conservation(instance_config),
        check_kdq_normalization(seeds),
        check_detailed_conservation(n_comm),
        check_violation_witness(),
        check_commuting_collapse(n_comm),
        check_ft_chrg(seeds),
        check_ft_surp(seeds),
        check_ft_traj(seeds),
        check_second_law(min(seeds, 10)),
        check_no_current(),
        check_weak_pointer(20),
        check_degenerate_demo(),
        check_contextuality_witness(),
        check_sweep_determinism(),
    ]
    return {
        "passed": all(c.passed for c in checks),
        "seeds": seeds,
        "checks": [asdict(c) for c in checks],
    }
