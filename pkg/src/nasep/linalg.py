"""Dense complex matrix algebra on small Hilbert spaces.

Tensor products, partial traces, Hermitian eigendecomposition with a
deterministic phase convention, and operator exp/log through the
eigendecomposition.  Everything is dense; shipped experiments use d <= 4
per system, where trajectory enumeration, not linear algebra, dominates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonHermitianError
from .numerics import TOLS


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def _as_square(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


def require_hermitian(m, tol: float | None = None, name: str = "matrix") -> np.ndarray:
    a = _as_square(m, name)
    tol = TOLS.herm if tol is None else tol
    residual = frobenius(a - dagger(a))
    if residual > tol * max(1.0, frobenius(a)):
        raise NonHermitianError(f"{name} is not Hermitian (residual {residual:.3e})")
    return a


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with system A on the left and system B on the right."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(m: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Reduced operator of the kept subsystem ("A" or "B"); trace preserved."""
    d_a, d_b = dims
    a = _as_square(m)
    if a.shape[0] != d_a * d_b:
        raise DimensionMismatchError(
            f"matrix dimension {a.shape[0]} != d_A*d_B = {d_a * d_b}"
        )
    blocks = a.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ibjb->ij", blocks)
    if keep == "B":
        return np.einsum("aiaj->ij", blocks)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True)
class HermitianEigensystem:
    """Ascending eigenvalues with orthonormal, phase-fixed eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def herm_eig(h: np.ndarray) -> HermitianEigensystem:
    """Eigendecompose a Hermitian matrix with a deterministic phase convention.

    Each eigenvector's largest-magnitude component is made real positive;
    magnitude ties break toward the lowest index.
    """
    a = require_hermitian(h)
    vals, vecs = np.linalg.eigh(a)
    vecs = np.array(vecs, dtype=complex)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        k = int(np.argmax(np.abs(col)))
        pivot = col[k]
        mag = abs(pivot)
        if mag > 0.0:
            vecs[:, j] = col * (pivot.conjugate() / mag)
    system = HermitianEigensystem(eigenvalues=vals, eigenvectors=vecs)
    residual = frobenius(a - system.reconstruct())
    if residual > TOLS.reconstruction * max(1.0, frobenius(a)):
        raise NonHermitianError(
            f"eigendecomposition reassembly residual {residual:.3e} exceeds tolerance"
        )
    return system


def herm_exp(h: np.ndarray) -> np.ndarray:
    """exp(H) for Hermitian H via the eigendecomposition; positive definite."""
    system = herm_eig(h)
    v = system.eigenvectors
    return (v * np.exp(system.eigenvalues)) @ dagger(v)


def unitary_from_hermitian(h: np.ndarray) -> np.ndarray:
    """exp(iH) for Hermitian H."""
    system = herm_eig(h)
    v = system.eigenvectors
    return (v * np.exp(1j * system.eigenvalues)) @ dagger(v)


def herm_log(p: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    """log(P) for Hermitian PSD P, restricted to eigenvalues above ``cutoff``.

    Eigenvalues at or below the cutoff contribute zero on their eigenspace;
    the 0*log(0) = 0 convention is applied by callers.  Eigenvalues below
    -cutoff are rejected.
    """
    cutoff = TOLS.log_cutoff if cutoff is None else cutoff
    system = herm_eig(p)
    vals = system.eigenvalues
    if np.any(vals < -cutoff):
        raise NonHermitianError(
            f"matrix has negative eigenvalue {vals.min():.3e}; not positive semidefinite"
        )
    log_vals = np.where(vals > cutoff, np.log(np.maximum(vals, cutoff)), 0.0)
    v = system.eigenvectors
    return (v * log_vals) @ dagger(v)
