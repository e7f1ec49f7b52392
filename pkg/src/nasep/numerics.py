"""Global numerics configuration: one tunable surface for every tolerance."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass
class Tolerances:
    """Numeric tolerances shared across the package.

    All Frobenius-norm tests are relative to max(1, norm of the operand)
    unless noted otherwise.
    """

    herm: float = 1e-10          # Hermiticity / unitarity residual
    reconstruction: float = 1e-10  # eigendecomposition reassembly residual
    gap: float = 1e-8            # spectral-gap floor for nondegenerate charges
    independence: float = 1e-10  # min eigenvalue of the charge Gram matrix
    commuting: float = 1e-10     # absolute commutator norm for the commuting flag
    conserve: float = 1e-9       # conservation residual and eigenvalue-sum matching
    normalization: float = 1e-9  # quasiprobability sum-to-one residual
    log_cutoff: float = 1e-12    # eigenvalues at or below contribute zero to herm_log
    support_cutoff: float = 1e-12  # absolute cutoff for relative-entropy support checks
    rank_floor: float = 1e-10    # full-rank requirement for matrix inverses
    weight_floor: float = 1e-14  # quasiprobability magnitude treated as structurally zero
    amp_floor: float = 1e-14     # amplitude magnitude below which SEP logs are undefined
    witness: float = 1e-6        # |Im sigma_traj| threshold for the contextuality witness
    residue: float = 1e-9        # allowed imaginary residue on provably real averages
    trajectory_cap: int = 10_000_000
    permutation_cap: int = 720   # c! cap for symmetrization (c <= 6)
    exp_radius: float = 700.0    # spectral-radius guard for thermal exponentials


TOLS = Tolerances()


def thread_count() -> int:
    """Worker count for sweep parallelism; NASEP_THREADS overrides the core count."""
    env = os.environ.get("NASEP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            return 1
        return max(1, n)
    return os.cpu_count() or 1
