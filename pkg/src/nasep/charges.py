"""Charge sets: eigenstructure, product-basis projectors, conservation checks.

Both systems carry identical copies of every charge.  Charges are validated
to be Hermitian, nondegenerate, and linearly independent; the commuting
flag is computed from pairwise commutator norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    AmbiguousAlignmentError,
    ConservationError,
    DegenerateChargeError,
    DimensionMismatchError,
    LinearlyDependentError,
    NonUnitaryError,
)
from .linalg import (
    HermitianEigensystem,
    dagger,
    frobenius,
    herm_eig,
    tensor_product,
    unitary_from_hermitian,
)
from .numerics import TOLS

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: Named charge presets.  "pauli-xyz" follows the two-qubit example's charge
#: order (sigma_z, sigma_y, sigma_x), so the first charge is sigma_z;
#: "pauli-xz" measures sigma_x first, then sigma_z.
CHARGE_PRESETS = {
    "pauli-xyz": (("z", PAULI_Z), ("y", PAULI_Y), ("x", PAULI_X)),
    "pauli-xz": (("x", PAULI_X), ("z", PAULI_Z)),
}


class ProductIndex(NamedTuple):
    k_a: int
    k_b: int


@dataclass(frozen=True)
class Charge:
    """One single-system charge with its eigenstructure."""

    label: str
    matrix: np.ndarray
    eigensystem: HermitianEigensystem
    spectral_gap: float


@dataclass(frozen=True)
class ChargeSet:
    dim: int
    charges: tuple[Charge, ...]
    commuting: bool

    @property
    def n_charges(self) -> int:
        return len(self.charges)

    def eigenvalues(self, alpha: int) -> np.ndarray:
        return self.charges[alpha].eigensystem.eigenvalues

    def eigenvectors(self, alpha: int) -> np.ndarray:
        return self.charges[alpha].eigensystem.eigenvectors

    def composite_basis(self, alpha: int) -> np.ndarray:
        """d^2 x d^2 matrix whose column k_a*d + k_b is |alpha_{k_a}> x |alpha_{k_b}>."""
        v = self.eigenvectors(alpha)
        return np.kron(v, v)

    def composite_eigensums(self, alpha: int) -> np.ndarray:
        """Eigenvalue sums lambda[k_a] + lambda[k_b] over composite indices."""
        lam = self.eigenvalues(alpha)
        return (lam[:, None] + lam[None, :]).reshape(-1)


def build_charge_set(
    matrices,
    gap_tol: float | None = None,
    labels: list[str] | None = None,
) -> ChargeSet:
    """Validate charge matrices and assemble a ChargeSet."""
    gap_tol = TOLS.gap if gap_tol is None else gap_tol
    mats = [np.asarray(m, dtype=complex) for m in matrices]
    if not mats:
        raise DimensionMismatchError("at least one charge matrix is required")
    dim = mats[0].shape[0]
    charges = []
    for idx, mat in enumerate(mats):
        label = labels[idx] if labels else f"Q{idx + 1}"
        if mat.shape != (dim, dim):
            raise DimensionMismatchError(
                f"charge {label} has shape {mat.shape}, expected ({dim}, {dim})"
            )
        system = herm_eig(mat)
        gaps = np.diff(system.eigenvalues)
        gap = float(gaps.min()) if gaps.size else 0.0
        if gap <= gap_tol:
            raise DegenerateChargeError(
                f"charge {label} has spectral gap {gap:.3e} <= {gap_tol:.1e}"
            )
        charges.append(Charge(label=label, matrix=mat, eigensystem=system, spectral_gap=gap))

    gram = np.empty((len(mats), len(mats)))
    for a, qa in enumerate(mats):
        for b, qb in enumerate(mats):
            gram[a, b] = np.trace(dagger(qa) @ qb).real
    min_eig = float(np.linalg.eigvalsh(gram).min())
    if min_eig <= TOLS.independence:
        raise LinearlyDependentError(
            f"charge Gram matrix min eigenvalue {min_eig:.3e}; charges linearly dependent"
        )

    commuting = all(
        frobenius(mats[a] @ mats[b] - mats[b] @ mats[a]) <= TOLS.commuting
        for a in range(len(mats))
        for b in range(a + 1, len(mats))
    )
    return ChargeSet(dim=dim, charges=tuple(charges), commuting=commuting)


def preset_charges(name: str) -> list[np.ndarray]:
    try:
        entries = CHARGE_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown charge preset {name!r}; known: {sorted(CHARGE_PRESETS)}")
    return [mat for _, mat in entries]


def charge_set_from_preset(name: str) -> ChargeSet:
    entries = CHARGE_PRESETS[name] if name in CHARGE_PRESETS else None
    if entries is None:
        raise KeyError(f"unknown charge preset {name!r}; known: {sorted(CHARGE_PRESETS)}")
    return build_charge_set([m for _, m in entries], labels=[lab for lab, _ in entries])


def product_projector(cs: ChargeSet, alpha: int, k) -> np.ndarray:
    """Rank-one projector |alpha_k><alpha_k| on the composite space."""
    k = ProductIndex(*k)
    d = cs.dim
    if not (0 <= alpha < cs.n_charges):
        raise IndexError(f"charge index {alpha} out of range")
    if not (0 <= k.k_a < d and 0 <= k.k_b < d):
        raise IndexError(f"product index {k} out of range for d={d}")
    vec = composite_vector(cs, alpha, k)
    return np.outer(vec, vec.conj())


def composite_vector(cs: ChargeSet, alpha: int, k) -> np.ndarray:
    k = ProductIndex(*k)
    v = cs.eigenvectors(alpha)
    return np.kron(v[:, k.k_a], v[:, k.k_b])


def product_index_of(cs: ChargeSet, alpha: int, ket_a: np.ndarray, ket_b: np.ndarray) -> ProductIndex:
    """Product index whose eigenvectors have maximal overlap with the given kets."""
    v = cs.eigenvectors(alpha)
    k_a = int(np.argmax(np.abs(dagger(v) @ np.asarray(ket_a, dtype=complex))))
    k_b = int(np.argmax(np.abs(dagger(v) @ np.asarray(ket_b, dtype=complex))))
    return ProductIndex(k_a, k_b)


def global_charge(cs: ChargeSet, alpha: int) -> np.ndarray:
    """Q_alpha (x) I + I (x) Q_alpha."""
    q = cs.charges[alpha].matrix
    eye = np.eye(cs.dim, dtype=complex)
    return tensor_product(q, eye) + tensor_product(eye, q)


@dataclass(frozen=True)
class ConservationReport:
    residuals: tuple[float, ...]
    passed: bool
    tol: float


def check_conservation(U: np.ndarray, cs: ChargeSet, tol: float | None = None) -> ConservationReport:
    """Per-charge commutator residuals ||[U, Q_alpha^tot]||_F against the global charges."""
    tol = TOLS.conserve if tol is None else tol
    u = np.asarray(U, dtype=complex)
    dsq = cs.dim**2
    if u.shape != (dsq, dsq):
        raise DimensionMismatchError(f"unitary has shape {u.shape}, expected ({dsq}, {dsq})")
    unit_residual = frobenius(dagger(u) @ u - np.eye(dsq))
    if unit_residual > tol * max(1.0, np.sqrt(dsq)):
        raise NonUnitaryError(f"U is not unitary (residual {unit_residual:.3e})")
    residuals = []
    passed = True
    for alpha in range(cs.n_charges):
        q_tot = global_charge(cs, alpha)
        res = frobenius(u @ q_tot - q_tot @ u)
        residuals.append(res)
        if res > tol * max(1.0, frobenius(q_tot)):
            passed = False
    return ConservationReport(residuals=tuple(residuals), passed=passed, tol=tol)


def require_conserving(U: np.ndarray, cs: ChargeSet, tol: float | None = None) -> np.ndarray:
    report = check_conservation(U, cs, tol=tol)
    if not report.passed:
        raise ConservationError(
            "unitary fails charge conservation; residuals "
            + ", ".join(f"{r:.3e}" for r in report.residuals)
        )
    return np.asarray(U, dtype=complex)


def swap_operator(d: int) -> np.ndarray:
    """SWAP |j,k> = |k,j> on the composite space."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            s[k * d + j, j * d + k] = 1.0
    return s


def conserving_unitary_from_params(
    cs: ChargeSet, swap_angle: float, charge_angles, phase: float
) -> np.ndarray:
    """exp(i(a*SWAP + sum_central b_alpha Q_alpha^tot + c*I)).

    SWAP commutes with every symmetric observable Q (x) I + I (x) Q, so it is
    admissible for any charge set.  A Q_alpha^tot term is admissible only when
    Q_alpha commutes with every other charge (otherwise exp(i b Q_alpha^tot)
    rotates the noncommuting global charges), so non-central charge angles are
    dropped.
    """
    d = cs.dim
    gen = swap_angle * swap_operator(d) + phase * np.eye(d * d, dtype=complex)
    mats = [ch.matrix for ch in cs.charges]
    for alpha, angle in enumerate(charge_angles):
        central = all(
            frobenius(mats[alpha] @ m - m @ mats[alpha]) <= TOLS.commuting for m in mats
        )
        if central:
            gen = gen + angle * global_charge(cs, alpha)
    return unitary_from_hermitian(gen)


def random_conserving_unitary(cs: ChargeSet, rng_seed: int) -> np.ndarray:
    """Seeded random charge-conserving unitary from the SWAP + central-charge family."""
    rng = np.random.default_rng(rng_seed)
    a = rng.uniform(-np.pi, np.pi)
    b = rng.uniform(-np.pi, np.pi, size=cs.n_charges)
    c = rng.uniform(-np.pi, np.pi)
    u = conserving_unitary_from_params(cs, a, b, c)
    return require_conserving(u, cs)


def basis_alignment(cs: ChargeSet, tol: float = 1e-8) -> list[np.ndarray]:
    """Permutations mapping charge-0 eigenbasis indices to each charge's indices.

    Valid only when all product bases coincide up to index permutation (the
    commuting case).  Raises AmbiguousAlignmentError when an overlap matrix is
    not a clean permutation matrix.
    """
    v0 = cs.eigenvectors(0)
    perms = []
    for alpha in range(cs.n_charges):
        overlap = np.abs(dagger(cs.eigenvectors(alpha)) @ v0)
        perm = np.argmax(overlap, axis=0)
        ok = len(set(perm.tolist())) == cs.dim and all(
            overlap[perm[j], j] >= 1.0 - tol for j in range(cs.dim)
        )
        if not ok:
            raise AmbiguousAlignmentError(
                f"eigenbasis of charge {cs.charges[alpha].label} does not align with "
                f"charge {cs.charges[0].label} by a clean permutation"
            )
        perms.append(perm)
    return perms


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def _cluster_ids(values: np.ndarray, tol: float) -> np.ndarray:
    """Map values to integer cluster ids, merging entries within ``tol``."""
    order = np.argsort(values, kind="stable")
    ids = np.empty(values.size, dtype=int)
    current = 0
    prev = None
    for pos in order:
        val = values[pos]
        if prev is not None and abs(val - prev) > tol:
            current += 1
        ids[pos] = current
        prev = val
    return ids


def random_commuting_block_unitary(cs: ChargeSet, rng_seed: int) -> np.ndarray:
    """Haar-random block unitary respecting every eigenvalue-sum sector.

    Product-basis vectors are grouped by the tuple of per-charge eigenvalue
    sums; an independent Haar-random unitary is drawn on each block.
    """
    if not cs.commuting:
        raise ConservationError("block unitary construction requires a commuting charge set")
    perms = basis_alignment(cs)
    d = cs.dim
    # Eigenvalues of every charge expressed on charge-0's eigenvector order.
    aligned = [cs.eigenvalues(alpha)[perms[alpha]] for alpha in range(cs.n_charges)]
    keys = []
    for alpha in range(cs.n_charges):
        lam = aligned[alpha]
        sums = (lam[:, None] + lam[None, :]).reshape(-1)
        keys.append(_cluster_ids(sums, TOLS.conserve))
    key_tuples = list(zip(*keys))
    blocks: dict[tuple, list[int]] = {}
    for idx, key in enumerate(key_tuples):
        blocks.setdefault(key, []).append(idx)

    rng = np.random.default_rng(rng_seed)
    dsq = d * d
    u_block = np.zeros((dsq, dsq), dtype=complex)
    # Iterate blocks by first appearance for a deterministic draw order.
    for key in sorted(blocks, key=lambda k: blocks[k][0]):
        members = blocks[key]
        sub = _haar_unitary(len(members), rng)
        for i, row in enumerate(members):
            for j, col in enumerate(members):
                u_block[row, col] = sub[i, j]
    basis = cs.composite_basis(0)
    u = basis @ u_block @ dagger(basis)
    return require_conserving(u, cs)
