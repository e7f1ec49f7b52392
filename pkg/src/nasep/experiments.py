"""Two-qubit experiment presets and deterministic CSV sweeps.

Charge order everywhere is (sigma_z, sigma_y, sigma_x): the first charge is
sigma_z and beta vectors read (beta_z, beta_y, beta_x).  Sweep axes address
instance parameters by dotted path (e.g. "unitary.theta", "beta_A.2"); each
cell rebuilds a validated instance, so every row's distribution passes the
normalization check.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .charges import ChargeSet, ProductIndex, charge_set_from_preset, product_index_of, swap_operator
from .errors import ConfigError
from .instance import Instance
from .numerics import thread_count
from .sep import avg_sigma_chrg, avg_sigma_surp, ft_chrg, sigma_traj_pair_table, weak_values


def qubit_unitary(theta: float) -> np.ndarray:
    """cos(theta) 1 + i sin(theta) SWAP: the two-qubit charge-conserving family."""
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    return np.cos(theta) * np.eye(4, dtype=complex) + 1j * np.sin(theta) * swap_operator(2)


def pauli_charge_set() -> ChargeSet:
    return charge_set_from_preset("pauli-xyz")


def fig5_trajectory_pair(cs: ChargeSet) -> tuple[ProductIndex, ProductIndex]:
    """First-charge index pair for |i1> = |01> and |f1> = |00> (computational kets)."""
    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([0.0, 1.0], dtype=complex)
    return product_index_of(cs, 0, e0, e1), product_index_of(cs, 0, e0, e0)


FIG3_COLUMNS = (
    "theta",
    "ekappa_re",
    "ekappa_im",
    "correction_re",
    "correction_im",
    "sigma_chrg_avg",
    "ft_residual",
)
FIG4_COLUMNS = (
    "beta_x_A",
    "beta_z_A",
    "sigma_surp_avg_traj",
    "sigma_surp_avg_relent",
    "dual_path_residual",
)
FIG5_COLUMNS = (
    "beta_x_A",
    "beta_y_A",
    "sigma_traj_re",
    "sigma_traj_im",
    "phi_F",
    "phi_R",
)


def default_sweep_config(figure: int):
    """Built-in sweep description reproducing one of the shipped figures."""
    from .configio import AxisConfig, InstanceConfig, SweepConfig

    if figure == 3:
        instance = InstanceConfig.from_dict(
            {
                "charges": "pauli-xyz",
                "beta_A": [0.5, 1.0, 0.7],
                "beta_B": [0.6, 0.2, 0.1],
                "unitary": {"theta": 0.0},
            }
        )
        return SweepConfig(
            instance=instance,
            axis1=AxisConfig(path="unitary.theta", lo=0.0, hi=math.pi / 2, steps=65),
            axis2=None,
            outputs=FIG3_COLUMNS,
        )
    if figure == 4:
        instance = InstanceConfig.from_dict(
            {
                "charges": "pauli-xyz",
                "beta_A": [0.02, 0.0, 0.02],
                "beta_B": [0.1, 1.6, 0.0],
                "unitary": {"theta": math.pi / 5},
                "alpha_surp": 1,
            }
        )
        return SweepConfig(
            instance=instance,
            axis1=AxisConfig(path="beta_A.2", lo=0.02, hi=2.0, steps=41),
            axis2=AxisConfig(path="beta_A.0", lo=0.02, hi=2.0, steps=41),
            outputs=FIG4_COLUMNS,
        )
    if figure == 5:
        instance = InstanceConfig.from_dict(
            {
                "charges": "pauli-xyz",
                "beta_A": [0.01, 0.02, 0.02],
                "beta_B": [0.01, 1.0, 0.01],
                "unitary": {"theta": 0.5},
            }
        )
        return SweepConfig(
            instance=instance,
            axis1=AxisConfig(path="beta_A.2", lo=0.02, hi=2.0, steps=41),
            axis2=AxisConfig(path="beta_A.1", lo=0.02, hi=2.0, steps=41),
            outputs=FIG5_COLUMNS,
        )
    raise ConfigError(f"unknown figure {figure}; choose 3, 4, or 5")


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _parallel_map(fn, items) -> list:
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _select_outputs(columns, rows, outputs):
    if outputs is None or tuple(outputs) == tuple(columns):
        return columns, rows
    missing = [c for c in outputs if c not in columns]
    if missing:
        raise ConfigError(f"unknown output columns {missing}; available: {list(columns)}")
    picks = [columns.index(c) for c in outputs]
    return tuple(outputs), [[row[p] for p in picks] for row in rows]


def _fig3_row(instance_cfg, theta: float):
    inst = instance_cfg.with_overrides({"unitary.theta": theta}).build()
    report = ft_chrg(inst)
    avg = avg_sigma_chrg(inst)
    return (
        theta,
        report.closed_form_term.real,
        report.closed_form_term.imag,
        report.correction.real,
        report.correction.imag,
        avg.via_trajectories,
        report.residual,
    )


def _fig4_row(instance_cfg, alpha: int, cell):
    v1, v2, path1, path2 = cell
    inst = instance_cfg.with_overrides({path1: v1, path2: v2}).build()
    avg = avg_sigma_surp(inst, alpha=alpha)
    return (v1, v2, avg.via_trajectories, avg.via_relent, abs(avg.via_trajectories - avg.via_relent))


def _fig5_row(instance_cfg, pair, cell):
    v1, v2, path1, path2 = cell
    inst = instance_cfg.with_overrides({path1: v1, path2: v2}).build()
    i1, f1 = pair
    d = inst.charge_set.dim
    table = sigma_traj_pair_table(inst.rho, inst.unitary, inst.charge_set, "principal")
    val = table[i1.k_a * d + i1.k_b, f1.k_a * d + f1.k_b]
    try:
        wv = weak_values(i1, f1, inst.rho, inst.unitary, inst.charge_set)
        phi_f = wv.phi_f if abs(wv.wv_forward) > 1e-14 else float("nan")
        phi_r = wv.phi_r if abs(wv.wv_reverse) > 1e-14 else float("nan")
    except Exception:
        phi_f = phi_r = float("nan")
    return (v1, v2, val.real, val.imag, phi_f, phi_r)


def run_sweep(figure: int, out_path, config=None) -> int:
    """Run one figure sweep and write its CSV; returns the row count."""
    cfg = config if config is not None else default_sweep_config(figure)
    if figure == 3:
        values = list(cfg.axis1.values())
        rows = _parallel_map(lambda v: _fig3_row(cfg.instance, float(v)), values)
        columns = FIG3_COLUMNS
    elif figure in (4, 5):
        if cfg.axis2 is None:
            raise ConfigError(f"figure {figure} requires two axes")
        cells = [
            (float(v1), float(v2), cfg.axis1.path, cfg.axis2.path)
            for v1 in cfg.axis1.values()
            for v2 in cfg.axis2.values()
        ]
        if figure == 4:
            alpha = cfg.instance.alpha_surp()
            rows = _parallel_map(lambda cell: _fig4_row(cfg.instance, alpha, cell), cells)
            columns = FIG4_COLUMNS
        else:
            pair = fig5_trajectory_pair(cfg.instance.charge_set())
            rows = _parallel_map(lambda cell: _fig5_row(cfg.instance, pair, cell), cells)
            columns = FIG5_COLUMNS
    else:
        raise ConfigError(f"unknown figure {figure}; choose 3, 4, or 5")
    columns, rows = _select_outputs(columns, rows, cfg.outputs)
    _write_csv(out_path, columns, rows)
    return len(rows)


def sweep_fig3(out_path, config=None) -> int:
    return run_sweep(3, out_path, config)


def sweep_fig4(out_path, config=None) -> int:
    return run_sweep(4, out_path, config)


def sweep_fig5(out_path, config=None) -> int:
    return run_sweep(5, out_path, config)


def no_current_instance(phase: float = 0.7) -> Instance:
    """Pauli-triple instance whose unitary is a global phase: no charge currents."""
    from .thermal import GgeSpec

    cs = pauli_charge_set()
    u = np.exp(1j * phase) * np.eye(4, dtype=complex)
    return Instance.product(cs, GgeSpec((0.5, 1.0, 0.7)), GgeSpec((0.6, 0.2, 0.1)), u)
