"""Generalized Gibbs ensembles, dephasing, entropies, and the coherent difference."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charges import ChargeSet
from .errors import (
    DimensionMismatchError,
    NonHermitianError,
    OverflowGuardError,
    SingularStateError,
    SupportViolationError,
)
from .linalg import dagger, frobenius, herm_eig, herm_exp, partial_trace, tensor_product
from .numerics import TOLS


@dataclass(frozen=True)
class GgeSpec:
    """Generalized inverse temperatures, one per charge, in charge order."""

    betas: tuple[float, ...]

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if not all(np.isfinite(betas)):
            raise ValueError("generalized inverse temperatures must be finite")
        object.__setattr__(self, "betas", betas)

    def __len__(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"density operator must be square, got {m.shape}")
        if frobenius(m - dagger(m)) > TOLS.herm * max(1.0, frobenius(m)):
            raise NonHermitianError("density operator is not Hermitian")
        trace = np.trace(m).real
        if abs(trace - 1.0) > TOLS.herm * 10:
            raise DimensionMismatchError(f"density operator trace {trace} != 1")
        min_eig = float(np.linalg.eigvalsh((m + dagger(m)) / 2).min())
        if min_eig < -TOLS.herm:
            raise NonHermitianError(f"density operator min eigenvalue {min_eig:.3e} < 0")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", m.shape[0])

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self, tol: float = 1e-10) -> bool:
        return self.purity() >= 1.0 - tol


def gge_state(cs: ChargeSet, spec: GgeSpec) -> DensityOperator:
    """exp(-sum_alpha beta_alpha Q_alpha) / Z on one system; full rank."""
    if len(spec) != cs.n_charges:
        raise DimensionMismatchError(
            f"spec has {len(spec)} betas for {cs.n_charges} charges"
        )
    exponent = np.zeros((cs.dim, cs.dim), dtype=complex)
    for beta, charge in zip(spec.betas, cs.charges):
        exponent -= beta * charge.matrix
    radius = float(np.abs(np.linalg.eigvalsh(exponent)).max()) if cs.dim else 0.0
    if radius > TOLS.exp_radius:
        raise OverflowGuardError(
            f"thermal exponent spectral radius {radius:.1f} exceeds {TOLS.exp_radius}"
        )
    unnorm = herm_exp(exponent)
    return DensityOperator(unnorm / np.trace(unnorm).real)


def initial_product_state(cs: ChargeSet, spec_a: GgeSpec, spec_b: GgeSpec) -> DensityOperator:
    """Product of the two systems' thermal states on the composite space."""
    rho_a = gge_state(cs, spec_a)
    rho_b = gge_state(cs, spec_b)
    return DensityOperator(tensor_product(rho_a.matrix, rho_b.matrix))


def dephase(rho: DensityOperator, cs: ChargeSet, alpha: int) -> DensityOperator:
    """Pinch in the alpha-th product basis; kills coherences relative to it."""
    basis = cs.composite_basis(alpha)
    in_basis = dagger(basis) @ rho.matrix @ basis
    pinched = np.diag(np.diag(in_basis).real).astype(complex)
    return DensityOperator(basis @ pinched @ dagger(basis))


def product_basis_probabilities(rho: DensityOperator, cs: ChargeSet, alpha: int) -> np.ndarray:
    """Tr(Pi_{alpha,k} rho) over composite indices k = k_a*d + k_b."""
    basis = cs.composite_basis(alpha)
    return np.real(np.einsum("ik,ij,jk->k", basis.conj(), rho.matrix, basis))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-sum lambda log lambda in nats, with 0*log(0) = 0."""
    vals = np.linalg.eigvalsh(rho.matrix)
    vals = np.clip(vals.real, 0.0, None)
    positive = vals[vals > TOLS.support_cutoff]
    return float(-np.sum(positive * np.log(positive)))


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Tr(rho [log rho - log sigma]) in nats; requires supp(rho) within supp(sigma)."""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError("relative entropy operands differ in dimension")
    if frobenius(rho.matrix - sigma.matrix) <= 1e-9:
        return 0.0
    cutoff = TOLS.support_cutoff
    sig = herm_eig(sigma.matrix)
    # Any sigma-kernel direction carrying rho weight makes D diverge.
    for k, val in enumerate(sig.eigenvalues):
        if val <= cutoff:
            vec = sig.eigenvectors[:, k]
            leak = float((vec.conj() @ rho.matrix @ vec).real)
            if leak > cutoff:
                raise SupportViolationError(
                    f"rho has weight {leak:.3e} outside sigma's support"
                )
    rho_sys = herm_eig(rho.matrix)
    rho_vals = np.clip(rho_sys.eigenvalues, 0.0, None)
    ent = 0.0
    for k, val in enumerate(rho_vals):
        if val > cutoff:
            ent += val * np.log(val)
    sig_log_vals = np.where(
        sig.eigenvalues > cutoff, np.log(np.maximum(sig.eigenvalues, cutoff)), 0.0
    )
    log_sigma = (sig.eigenvectors * sig_log_vals) @ dagger(sig.eigenvectors)
    cross = float(np.trace(rho.matrix @ log_sigma).real)
    return ent - cross


def coherent_difference(rho: DensityOperator, cs: ChargeSet, alpha: int) -> np.ndarray:
    """Phi_alpha(rho)^{-1} - rho^{-1}; zero iff rho is diagonal in basis alpha.

    Stated with true inverses, so both rho and its dephased form must be
    strictly full rank.
    """
    dephased = dephase(rho, cs, alpha)
    inv_deph = _full_rank_inverse(dephased.matrix, "dephased state")
    inv_rho = _full_rank_inverse(rho.matrix, "state")
    diff = inv_deph - inv_rho
    return (diff + dagger(diff)) / 2


def _full_rank_inverse(m: np.ndarray, name: str) -> np.ndarray:
    system = herm_eig(m)
    if float(system.eigenvalues.min()) <= TOLS.rank_floor:
        raise SingularStateError(
            f"{name} has eigenvalue {system.eigenvalues.min():.3e} <= {TOLS.rank_floor:.1e}"
        )
    v = system.eigenvectors
    return (v / system.eigenvalues) @ dagger(v)


def reduced_states(rho: DensityOperator, d: int) -> tuple[DensityOperator, DensityOperator]:
    return (
        DensityOperator(partial_trace(rho.matrix, (d, d), "A")),
        DensityOperator(partial_trace(rho.matrix, (d, d), "B")),
    )
