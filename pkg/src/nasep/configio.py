"""JSON configuration parsing for instances and sweeps.

Unknown keys are rejected at every level.  Charge indices in configs are
1-based (alpha_surp = 1 is the first charge); matrices are nested lists
whose entries are numbers or [re, im] pairs.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .charges import ChargeSet, build_charge_set, charge_set_from_preset, CHARGE_PRESETS
from .errors import ConfigError
from .experiments import qubit_unitary
from .instance import Instance
from .charges import random_conserving_unitary
from .thermal import GgeSpec

_INSTANCE_KEYS = {"charges", "beta_A", "beta_B", "unitary", "state", "alpha_surp", "branch"}
_SWEEP_KEYS = {"instance", "axis1", "axis2", "outputs", "out_path"}
_AXIS_KEYS = {"path", "min", "max", "steps"}


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _entry_to_complex(entry) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, list) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise ConfigError(f"matrix entries must be numbers or [re, im] pairs, got {entry!r}")


def parse_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ConfigError("a matrix must be a non-empty list of rows")
    mat = np.array([[_entry_to_complex(e) for e in row] for row in rows], dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ConfigError(f"matrix must be square, got shape {mat.shape}")
    return mat


@dataclass
class InstanceConfig:
    """Validated instance description; ``raw`` keeps the resolvable dict form."""

    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceConfig":
        if not isinstance(data, dict):
            raise ConfigError("instance config must be a JSON object")
        _reject_unknown(data, _INSTANCE_KEYS, "instance config")
        cfg = cls(raw=copy.deepcopy(data))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        self.charge_set()
        self.specs()
        self.unitary()
        state = self.raw.get("state", "product")
        if isinstance(state, str):
            if state not in ("product", "pure_with_gge_marginals"):
                raise ConfigError(f"unknown state kind {state!r}")
            if state == "pure_with_gge_marginals":
                raise ConfigError("pure_with_gge_marginals requires a seed: use an object form")
        elif isinstance(state, dict):
            _reject_unknown(state, {"kind", "seed"}, "state")
            kind = state.get("kind")
            if kind == "product":
                pass
            elif kind == "pure_with_gge_marginals":
                if "seed" not in state:
                    raise ConfigError("pure_with_gge_marginals requires a seed")
            else:
                raise ConfigError(f"unknown state kind {kind!r}")
        else:
            raise ConfigError("state must be a string or object")
        alpha = self.raw.get("alpha_surp", 1)
        if not isinstance(alpha, int) or not (1 <= alpha <= self.charge_set().n_charges):
            raise ConfigError(f"alpha_surp must be a 1-based charge index, got {alpha!r}")
        branch = self.raw.get("branch", None)
        if branch is not None and branch not in ("principal", "pure_decomposed"):
            raise ConfigError(f"unknown branch {branch!r}")

    def charge_set(self) -> ChargeSet:
        charges = self.raw.get("charges", "pauli-xyz")
        if isinstance(charges, str):
            if charges not in CHARGE_PRESETS:
                raise ConfigError(
                    f"unknown charge preset {charges!r}; known: {sorted(CHARGE_PRESETS)}"
                )
            return charge_set_from_preset(charges)
        if isinstance(charges, list):
            return build_charge_set([parse_matrix(m) for m in charges])
        raise ConfigError("charges must be a preset name or a list of matrices")

    def specs(self) -> tuple[GgeSpec, GgeSpec]:
        cs = self.charge_set()
        out = []
        for key in ("beta_A", "beta_B"):
            betas = self.raw.get(key)
            if betas is None:
                raise ConfigError(f"{key} is required")
            if not isinstance(betas, list) or len(betas) != cs.n_charges:
                raise ConfigError(f"{key} must list one beta per charge ({cs.n_charges})")
            out.append(GgeSpec(tuple(float(b) for b in betas)))
        return out[0], out[1]

    def unitary(self) -> np.ndarray:
        cs = self.charge_set()
        spec = self.raw.get("unitary")
        if spec is None:
            raise ConfigError("unitary is required")
        if not isinstance(spec, dict):
            raise ConfigError("unitary must be an object")
        _reject_unknown(spec, {"theta", "matrix", "random_seed"}, "unitary")
        if len(spec) != 1:
            raise ConfigError("unitary takes exactly one of theta, matrix, random_seed")
        if "theta" in spec:
            if cs.dim != 2:
                raise ConfigError("theta unitaries are defined for qubit charge sets")
            return qubit_unitary(float(spec["theta"]))
        if "matrix" in spec:
            return parse_matrix(spec["matrix"])
        return random_conserving_unitary(cs, int(spec["random_seed"]))

    def alpha_surp(self) -> int:
        return int(self.raw.get("alpha_surp", 1)) - 1

    def branch(self) -> str | None:
        return self.raw.get("branch", None)

    def build(self) -> Instance:
        cs = self.charge_set()
        spec_a, spec_b = self.specs()
        u = self.unitary()
        state = self.raw.get("state", "product")
        if isinstance(state, dict) and state.get("kind") == "pure_with_gge_marginals":
            return Instance.pure_with_gge_marginals(cs, spec_a, spec_b, u, int(state["seed"]))
        return Instance.product(cs, spec_a, spec_b, u)

    def with_overrides(self, assignments: dict[str, float]) -> "InstanceConfig":
        """New config with dotted-path values set, e.g. {"beta_A.2": 0.3}."""
        raw = copy.deepcopy(self.raw)
        for path, value in assignments.items():
            _assign_path(raw, path, value)
        return InstanceConfig.from_dict(raw)


def _assign_path(raw: dict, path: str, value: float) -> None:
    parts = path.split(".")
    target = raw
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        key = int(part) if part.lstrip("-").isdigit() else part
        if last:
            try:
                target[key] = value
            except (IndexError, KeyError, TypeError):
                raise ConfigError(f"parameter path {path!r} does not resolve")
        else:
            try:
                target = target[key]
            except (IndexError, KeyError, TypeError):
                raise ConfigError(f"parameter path {path!r} does not resolve")


@dataclass
class AxisConfig:
    path: str
    lo: float
    hi: float
    steps: int

    @classmethod
    def from_dict(cls, data: dict, where: str) -> "AxisConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"{where} must be an object")
        _reject_unknown(data, _AXIS_KEYS, where)
        for key in ("path", "min", "max", "steps"):
            if key not in data:
                raise ConfigError(f"{where} requires {key}")
        steps = int(data["steps"])
        if steps < 2:
            raise ConfigError(f"{where}.steps must be >= 2")
        return cls(path=str(data["path"]), lo=float(data["min"]), hi=float(data["max"]), steps=steps)

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass
class SweepConfig:
    instance: InstanceConfig
    axis1: AxisConfig
    axis2: AxisConfig | None
    outputs: tuple[str, ...] | None

    @classmethod
    def from_dict(cls, data: dict, defaults: "SweepConfig") -> "SweepConfig":
        if not isinstance(data, dict):
            raise ConfigError("sweep config must be a JSON object")
        _reject_unknown(data, _SWEEP_KEYS, "sweep config")
        instance = defaults.instance
        if "instance" in data:
            merged = copy.deepcopy(defaults.instance.raw)
            inst_data = data["instance"]
            if not isinstance(inst_data, dict):
                raise ConfigError("sweep instance must be an object")
            merged.update(inst_data)
            instance = InstanceConfig.from_dict(merged)
        axis1 = (
            AxisConfig.from_dict(data["axis1"], "axis1") if "axis1" in data else defaults.axis1
        )
        axis2 = defaults.axis2
        if "axis2" in data:
            axis2 = (
                None if data["axis2"] is None else AxisConfig.from_dict(data["axis2"], "axis2")
            )
        outputs = defaults.outputs
        if "outputs" in data:
            if not isinstance(data["outputs"], list):
                raise ConfigError("outputs must be a list of column names")
            outputs = tuple(str(c) for c in data["outputs"])
        cfg = cls(instance=instance, axis1=axis1, axis2=axis2, outputs=outputs)
        # Paths must resolve against the instance config.
        probe = {cfg.axis1.path: cfg.axis1.lo}
        if cfg.axis2 is not None:
            probe[cfg.axis2.path] = cfg.axis2.lo
        cfg.instance.with_overrides(probe)
        return cfg


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_instance_config(path) -> InstanceConfig:
    return InstanceConfig.from_dict(load_json(path))
