"""One exchange experiment: charge set, inverse temperatures, unitary, state.

Caches the forward/reverse/symmetrized distributions and reduced states so
SEP averages and fluctuation theorems share one evaluation.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .charges import ChargeSet, require_conserving
from .errors import NasepError
from .linalg import dagger, frobenius, herm_log, tensor_product
from .quasiprob import QuasiDistribution, forward_kdq, reverse_kdq, symmetrized_kdq
from .thermal import DensityOperator, GgeSpec, gge_state, initial_product_state, reduced_states


class Instance:
    """Immutable experiment description with cached derived objects."""

    def __init__(
        self,
        charge_set: ChargeSet,
        spec_a: GgeSpec,
        spec_b: GgeSpec,
        unitary: np.ndarray,
        rho: DensityOperator,
        state_kind: str,
    ):
        self.charge_set = charge_set
        self.spec_a = spec_a
        self.spec_b = spec_b
        self.unitary = require_conserving(unitary, charge_set)
        self.rho = rho
        self.state_kind = state_kind

    @classmethod
    def product(cls, charge_set: ChargeSet, spec_a: GgeSpec, spec_b: GgeSpec, unitary) -> "Instance":
        rho = initial_product_state(charge_set, spec_a, spec_b)
        return cls(charge_set, spec_a, spec_b, np.asarray(unitary, complex), rho, "product")

    @classmethod
    def pure_with_gge_marginals(
        cls,
        charge_set: ChargeSet,
        spec_a: GgeSpec,
        spec_b: GgeSpec,
        unitary,
        seed: int,
    ) -> "Instance":
        """Pure global state with thermal marginals, random purifying phases.

        The A marginal is exactly the spec_a ensemble.  A bipartite pure
        state's marginals are isospectral, so the B marginal carries spec_b's
        eigenbasis with spec_a's spectrum; its exact generalized inverse
        temperatures are refit from the marginal and replace spec_b, keeping
        the flow/relative-entropy identities exact.
        """
        d = charge_set.dim
        gge_a = gge_state(charge_set, spec_a)
        gge_b = gge_state(charge_set, spec_b)
        from .linalg import herm_eig

        sys_a = herm_eig(gge_a.matrix)
        sys_b = herm_eig(gge_b.matrix)
        rng = np.random.default_rng(seed)
        phases = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=d))
        psi = np.zeros(d * d, dtype=complex)
        for k in range(d):
            amp = np.sqrt(max(sys_a.eigenvalues[k], 0.0)) * phases[k]
            psi += amp * np.kron(sys_a.eigenvectors[:, k], sys_b.eigenvectors[:, k])
        psi /= np.linalg.norm(psi)
        rho = DensityOperator(np.outer(psi, psi.conj()))
        marg_b = DensityOperator(
            (sys_b.eigenvectors * sys_a.eigenvalues) @ dagger(sys_b.eigenvectors)
        )
        betas_b, residual = fit_effective_betas(charge_set, marg_b)
        if residual > 1e-8:
            raise NasepError(
                f"B marginal is not expressible as a GGE over the charges "
                f"(fit residual {residual:.3e})"
            )
        return cls(charge_set, spec_a, GgeSpec(tuple(betas_b)), np.asarray(unitary, complex), rho, "pure")

    @property
    def is_product(self) -> bool:
        return self.state_kind == "product"

    @cached_property
    def rho_f(self) -> DensityOperator:
        u = self.unitary
        return DensityOperator(u @ self.rho.matrix @ dagger(u))

    @cached_property
    def reduced(self) -> tuple[DensityOperator, DensityOperator]:
        return reduced_states(self.rho, self.charge_set.dim)

    @cached_property
    def reduced_final(self) -> tuple[DensityOperator, DensityOperator]:
        return reduced_states(self.rho_f, self.charge_set.dim)

    @cached_property
    def marginal_product(self) -> DensityOperator:
        rho_a, rho_b = self.reduced
        return DensityOperator(tensor_product(rho_a.matrix, rho_b.matrix))

    @cached_property
    def forward(self) -> QuasiDistribution:
        return forward_kdq(self.rho, self.unitary, self.charge_set)

    @cached_property
    def reverse(self) -> QuasiDistribution:
        return reverse_kdq(self.rho, self.unitary, self.charge_set)

    @cached_property
    def symmetrized(self) -> QuasiDistribution:
        return symmetrized_kdq(self.rho, self.unitary, self.charge_set)


def fit_effective_betas(cs: ChargeSet, rho_x: DensityOperator) -> tuple[np.ndarray, float]:
    """Least-squares betas with -log(rho) = c0*I + sum_alpha beta_alpha Q_alpha.

    Returns the fitted betas and the Frobenius residual of the fit
    (relative to max(1, ||log rho||)).
    """
    neg_log = -herm_log(rho_x.matrix)
    basis = [np.eye(cs.dim, dtype=complex)] + [ch.matrix for ch in cs.charges]
    n = len(basis)
    gram = np.empty((n, n))
    rhs = np.empty(n)
    for a in range(n):
        for b in range(n):
            gram[a, b] = np.trace(dagger(basis[a]) @ basis[b]).real
        rhs[a] = np.trace(dagger(basis[a]) @ neg_log).real
    coeffs = np.linalg.solve(gram, rhs)
    fitted = sum(c * b for c, b in zip(coeffs, basis))
    residual = frobenius(neg_log - fitted) / max(1.0, frobenius(neg_log))
    return coeffs[1:], float(residual)
