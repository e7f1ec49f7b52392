"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nasep.charges import ChargeSet, build_charge_set, preset_charges, product_projector
from nasep.instance import Instance
from nasep.linalg import dagger
from nasep.quasiprob import Trajectory, trajectory_from_flat
from nasep.thermal import DensityOperator, GgeSpec


@pytest.fixture
def pauli_set() -> ChargeSet:
    return build_charge_set(preset_charges("pauli-xyz"))


@pytest.fixture
def fig3_specs() -> tuple[GgeSpec, GgeSpec]:
    return GgeSpec((0.5, 1.0, 0.7)), GgeSpec((0.6, 0.2, 0.1))


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def random_density(rng: np.random.Generator, d: int) -> DensityOperator:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = z @ z.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def commuting_charge_set(seed: int, d: int = 3, n_charges: int = 2) -> ChargeSet:
    """Charges diagonal in one random shared orthonormal basis."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    basis, _ = np.linalg.qr(z)
    mats = []
    for _ in range(n_charges):
        spectrum = np.sort(rng.uniform(-1.0, 1.0, d))
        while np.diff(spectrum).min() < 0.2:
            spectrum = np.sort(rng.uniform(-1.0, 1.0, d))
        mats.append(basis @ np.diag(spectrum) @ basis.conj().T)
    return build_charge_set(mats)


def kdq_trace_oracle(inst_rho, U, cs: ChargeSet, traj: Trajectory, reverse: bool = False) -> complex:
    """Quasiprobability of one trajectory by explicit dense projector chains."""
    dsq = cs.dim**2
    final_chain = np.eye(dsq, dtype=complex)
    for alpha in range(cs.n_charges):
        final_chain = final_chain @ product_projector(cs, alpha, traj.final[alpha])
    initial_chain = np.eye(dsq, dtype=complex)
    for alpha in reversed(range(cs.n_charges)):
        initial_chain = initial_chain @ product_projector(cs, alpha, traj.initial[alpha])
    if reverse:
        return complex(np.trace(final_chain @ U @ initial_chain @ dagger(U) @ inst_rho))
    return complex(np.trace(dagger(U) @ final_chain @ U @ initial_chain @ inst_rho))


def born_rule_distribution(rho: np.ndarray, U: np.ndarray, cs: ChargeSet) -> dict[int, float]:
    """Sequential strong-measurement joint distribution (two-point scheme).

    Measures every charge's product basis in order 1..c, applies U, measures
    in order c..1.  Returns flat-trajectory-index -> probability with the
    final indices stored in canonical charge order.
    """
    d, c = cs.dim, cs.n_charges
    dsq = d * d
    projectors = [
        [product_projector(cs, alpha, (k // d, k % d)) for k in range(dsq)] for alpha in range(c)
    ]
    out: dict[int, float] = {}

    def measure(state, prob, alphas, record, phase):
        if not alphas:
            if phase == "initial":
                evolved = U @ state @ dagger(U)
                measure(evolved, prob, list(reversed(range(c))), record, "final")
            else:
                initial, final_rev = record[:c], record[c:]
                final = list(reversed(final_rev))
                idx = 0
                for k in initial + final:
                    idx = idx * dsq + k
                out[idx] = out.get(idx, 0.0) + prob
            return
        alpha = alphas[0]
        for k in range(dsq):
            proj = projectors[alpha][k]
            p = float(np.trace(proj @ state).real)
            if p <= 1e-15:
                continue
            collapsed = proj @ state @ proj / p
            measure(collapsed, prob * p, alphas[1:], record + [k], phase)

    measure(rho, 1.0, list(range(c)), [], "initial")
    return out


def flat_traj(idx: int, cs: ChargeSet) -> Trajectory:
    return trajectory_from_flat(idx, cs.dim, cs.n_charges)


def make_commuting_instance(seed: int) -> Instance:
    """Commuting charges, diagonal product GGE, block-random conserving unitary."""
    from nasep.charges import random_commuting_block_unitary

    rng = np.random.default_rng(10_000 + seed)
    d = 2 + seed % 2
    cs = commuting_charge_set(20_000 + seed, d=d)
    spec_a = GgeSpec(tuple(rng.uniform(-1.0, 1.0, cs.n_charges)))
    spec_b = GgeSpec(tuple(rng.uniform(-1.0, 1.0, cs.n_charges)))
    u = random_commuting_block_unitary(cs, 30_000 + seed)
    return Instance.product(cs, spec_a, spec_b, u)
