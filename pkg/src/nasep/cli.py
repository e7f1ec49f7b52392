"""Command-line interface: verify, sweep, kdq, instance."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .configio import SweepConfig, load_instance_config, load_json
from .errors import NasepError
from .experiments import default_sweep_config, run_sweep
from .quasiprob import export_csv, reverse_kdq, symmetrized_kdq
from .sep import (
    avg_sigma_chrg,
    avg_sigma_surp,
    avg_sigma_traj,
    contextuality_witness,
    ft_chrg,
    ft_surp,
    ft_traj,
)
from .verify import run_verification


def _complex_json(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _cmd_verify(args) -> int:
    instance_config = load_instance_config(args.config) if args.config else None
    report = run_verification(instance_config, seeds=args.seeds)
    text = json.dumps(report, indent=2, default=str)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report["passed"] else 1


def _cmd_sweep(args) -> int:
    defaults = default_sweep_config(args.figure)
    config = defaults
    if args.config:
        config = SweepConfig.from_dict(load_json(args.config), defaults)
    rows = run_sweep(args.figure, args.out, config)
    print(f"wrote {rows} rows to {args.out}")
    return 0


def _cmd_kdq(args) -> int:
    cfg = load_instance_config(args.config)
    inst = cfg.build()
    if args.kind == "forward":
        dist = inst.forward
    elif args.kind == "reverse":
        dist = reverse_kdq(inst.rho, inst.unitary, inst.charge_set)
    else:
        dist = symmetrized_kdq(inst.rho, inst.unitary, inst.charge_set)
    export_csv(dist, args.out)
    print(f"wrote {dist.weights.size} trajectories to {args.out}")
    return 0


def _cmd_instance(args) -> int:
    cfg = load_instance_config(args.config)
    inst = cfg.build()
    alpha = cfg.alpha_surp()
    branch = cfg.branch()
    avg_c = avg_sigma_chrg(inst)
    avg_s = avg_sigma_surp(inst, alpha)
    avg_t = avg_sigma_traj(inst, branch)
    r_c = ft_chrg(inst)
    r_s = ft_surp(inst, alpha)
    r_t = ft_traj(inst)
    witness = contextuality_witness(inst)
    report = {
        "state_kind": inst.state_kind,
        "alpha_surp": alpha + 1,
        "averages": {
            "sigma_chrg": {
                "via_trajectories": avg_c.via_trajectories,
                "via_flows": avg_c.via_flows,
                "via_relent": avg_c.via_relent,
            },
            "sigma_surp": {
                "via_trajectories": avg_s.via_trajectories,
                "via_relent": avg_s.via_relent,
            },
            "sigma_traj": {
                "via_trajectories": _complex_json(avg_t.via_trajectories),
                "via_pure_formula": (
                    None
                    if avg_t.via_pure_formula is None
                    else _complex_json(avg_t.via_pure_formula)
                ),
                "branch": avg_t.branch,
            },
        },
        "fluctuation_theorems": {
            name: {
                "lhs": _complex_json(rep.lhs),
                "closed_form_term": _complex_json(rep.closed_form_term),
                "correction": _complex_json(rep.correction),
                "residual": rep.residual,
                "checks": rep.checks,
            }
            for name, rep in (("chrg", r_c), ("surp", r_s), ("traj", r_t))
        },
        "contextuality": {
            "n_witnesses": len(witness.entries),
            "average_flag": witness.average_flag,
            "witness_tol": witness.witness_tol,
            "entries": [
                {
                    "i1": list(e.i1),
                    "f1": list(e.f1),
                    "sigma": _complex_json(e.sigma),
                }
                for e in witness.entries
            ],
        },
        "normalization": {
            "forward": abs(inst.forward.sum() - 1.0),
            "reverse": abs(inst.reverse.sum() - 1.0),
        },
    }
    text = json.dumps(report, indent=2)
    with open(args.report, "w") as fh:
        fh.write(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nasep",
        description="Stochastic entropy production for noncommuting-charge exchanges",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the verification suite, emit a JSON report")
    p_verify.add_argument("--config", help="instance config JSON (checked for conservation)")
    p_verify.add_argument("--seeds", type=int, default=25)
    p_verify.add_argument("--out", help="also write the JSON report here")
    p_verify.set_defaults(func=_cmd_verify)

    p_sweep = sub.add_parser("sweep", help="reproduce a figure sweep as CSV")
    p_sweep.add_argument("--figure", type=int, required=True, choices=(3, 4, 5))
    p_sweep.add_argument("--config", help="sweep config JSON overriding the defaults")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_kdq = sub.add_parser("kdq", help="dump a quasiprobability distribution as CSV")
    p_kdq.add_argument("--config", required=True)
    p_kdq.add_argument("--out", required=True)
    p_kdq.add_argument(
        "--kind", choices=("forward", "reverse", "symmetrized"), default="forward"
    )
    p_kdq.set_defaults(func=_cmd_kdq)

    p_inst = sub.add_parser("instance", help="SEP averages and FTs for one instance")
    p_inst.add_argument("--config", required=True)
    p_inst.add_argument("--report", required=True)
    p_inst.set_defaults(func=_cmd_instance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NasepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
