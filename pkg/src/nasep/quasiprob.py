"""Trajectory enumeration and Kirkwood-Dirac quasiprobability distributions.

A stochastic trajectory is the index list (i_1..i_c ; f_1..f_c), each entry a
composite ProductIndex.  Storage keeps charge order 1..c for both lists; the
reversed measurement order of the final projectors is applied inside the
evaluator.  Weights are evaluated by rank-one amplitude contraction rather
than dense projector chains: per trajectory the cost is a handful of complex
multiplications against precomputed overlap tables.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
import string
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .charges import ChargeSet, ProductIndex, require_conserving
from .errors import CapExceededError, NasepError, NonfiniteValueError
from .linalg import dagger
from .numerics import TOLS
from .thermal import DensityOperator


@dataclass(frozen=True)
class Trajectory:
    initial: tuple[ProductIndex, ...]
    final: tuple[ProductIndex, ...]

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(ProductIndex(*k) for k in self.initial))
        object.__setattr__(self, "final", tuple(ProductIndex(*k) for k in self.final))


def trajectory_count(cs: ChargeSet) -> int:
    return (cs.dim**2) ** (2 * cs.n_charges)


def _require_under_cap(cs: ChargeSet) -> int:
    count = trajectory_count(cs)
    if count > TOLS.trajectory_cap:
        raise CapExceededError(
            f"{count} trajectories exceed the cap of {TOLS.trajectory_cap}"
        )
    return count


def flat_index(traj: Trajectory, d: int) -> int:
    idx = 0
    for k in traj.initial + traj.final:
        idx = idx * d * d + (k.k_a * d + k.k_b)
    return idx


def trajectory_from_flat(idx: int, d: int, c: int) -> Trajectory:
    digits = []
    for _ in range(2 * c):
        digits.append(idx % (d * d))
        idx //= d * d
    digits.reverse()
    composite = [ProductIndex(k // d, k % d) for k in digits]
    return Trajectory(initial=tuple(composite[:c]), final=tuple(composite[c:]))


def enumerate_trajectories(cs: ChargeSet) -> Iterator[Trajectory]:
    """All trajectories in lexicographic order over (i_1..i_c, f_1..f_c)."""
    count = _require_under_cap(cs)
    d, c = cs.dim, cs.n_charges
    for idx in range(count):
        yield trajectory_from_flat(idx, d, c)


def is_conserving(traj: Trajectory, cs: ChargeSet, tol: float | None = None) -> bool:
    """Per-charge eigenvalue sums match between the trajectory's ends."""
    tol = TOLS.conserve if tol is None else tol
    for alpha in range(cs.n_charges):
        lam = cs.eigenvalues(alpha)
        i, f = traj.initial[alpha], traj.final[alpha]
        if abs(lam[i.k_a] + lam[i.k_b] - lam[f.k_a] - lam[f.k_b]) > tol:
            return False
    return True


def conserving_mask(cs: ChargeSet, tol: float | None = None) -> np.ndarray:
    """Flat boolean mask over all trajectories, True where conserving."""
    tol = TOLS.conserve if tol is None else tol
    _require_under_cap(cs)
    dsq = cs.dim**2
    c = cs.n_charges
    shape = (dsq,) * (2 * c)
    mask = np.ones(shape, dtype=bool)
    for alpha in range(c):
        sums = cs.composite_eigensums(alpha)
        view_i = sums.reshape((1,) * alpha + (dsq,) + (1,) * (2 * c - alpha - 1))
        view_f = sums.reshape((1,) * (c + alpha) + (dsq,) + (1,) * (c - alpha - 1))
        mask &= np.abs(view_i - view_f) <= tol
    return mask.reshape(-1)


def _kdq_array(rho: np.ndarray, U: np.ndarray, cs: ChargeSet, tail: str) -> np.ndarray:
    """Dense KDQ tensor with axes (i_1..i_c, f_1..f_c), each of size d^2.

    tail "forward" contracts <1_i1| rho U^dag |1_f1>; "reverse" contracts
    <1_i1| U^dag rho |1_f1>.  All other factors are shared between the two
    protocols.
    """
    c = cs.n_charges
    bases = [cs.composite_basis(alpha) for alpha in range(c)]
    chain = [dagger(bases[a]) @ bases[a + 1] for a in range(c - 1)]
    bridge = dagger(bases[c - 1]) @ U @ bases[c - 1]
    if tail == "forward":
        tail_mat = dagger(bases[0]) @ (rho @ dagger(U)) @ bases[0]
    elif tail == "reverse":
        tail_mat = dagger(bases[0]) @ (dagger(U) @ rho) @ bases[0]
    else:
        raise ValueError(f"unknown tail {tail!r}")

    letters = string.ascii_lowercase
    i_l, f_l = letters[:c], letters[c : 2 * c]
    subs, ops = [], []
    for a in range(c - 1):
        subs.append(i_l[a] + i_l[a + 1])
        ops.append(np.conj(chain[a]))
    for a in range(c - 1):
        subs.append(f_l[a] + f_l[a + 1])
        ops.append(chain[a])
    subs.append(f_l[c - 1] + i_l[c - 1])
    ops.append(bridge)
    subs.append(i_l[0] + f_l[0])
    ops.append(tail_mat)
    return np.einsum(",".join(subs) + "->" + i_l + f_l, *ops, optimize=True)


class QuasiDistribution:
    """Complex trajectory weights stored densely by mixed-radix flat index."""

    def __init__(
        self,
        kind: str,
        weights: np.ndarray,
        charge_set: ChargeSet,
        unitary: np.ndarray,
        rho: DensityOperator,
    ):
        self.kind = kind
        self.weights = weights
        self.charge_set = charge_set
        self.unitary = unitary
        self.rho = rho
        total = weights.sum()
        if abs(total - 1.0) > TOLS.normalization:
            raise NasepError(
                f"{kind} distribution sums to {total}; normalization residual "
                f"{abs(total - 1.0):.3e} exceeds {TOLS.normalization:.1e}"
            )
        self._conserving: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.charge_set.dim

    @property
    def n_charges(self) -> int:
        return self.charge_set.n_charges

    @property
    def array(self) -> np.ndarray:
        dsq = self.dim**2
        return self.weights.reshape((dsq,) * (2 * self.n_charges))

    @property
    def conserving_flags(self) -> np.ndarray:
        if self._conserving is None:
            self._conserving = conserving_mask(self.charge_set)
        return self._conserving

    def weight(self, traj: Trajectory) -> complex:
        return complex(self.weights[flat_index(traj, self.dim)])

    def trajectories(self) -> Iterator[Trajectory]:
        return enumerate_trajectories(self.charge_set)

    def sum(self) -> complex:
        return complex(self.weights.sum())


def forward_kdq(rho: DensityOperator, U: np.ndarray, cs: ChargeSet) -> QuasiDistribution:
    """Forward-protocol KDQ over all trajectories, normalized to 1."""
    _require_under_cap(cs)
    u = require_conserving(U, cs)
    arr = _kdq_array(rho.matrix, u, cs, "forward")
    return QuasiDistribution("forward", arr.reshape(-1), cs, u, rho)


def reverse_kdq(rho: DensityOperator, U: np.ndarray, cs: ChargeSet) -> QuasiDistribution:
    """Reverse-protocol KDQ, keyed by the forward trajectory whose reversal it is.

    The weight stored at canonical key (i_1..i_c ; f_1..f_c) is the reverse
    quasiprobability of the trajectory that starts at the f's and ends at the
    i's, so forward/reverse weights for a trajectory pair are one aligned
    lookup apart.
    """
    _require_under_cap(cs)
    u = require_conserving(U, cs)
    arr = _kdq_array(rho.matrix, u, cs, "reverse")
    return QuasiDistribution("reverse", arr.reshape(-1), cs, u, rho)


def symmetrized_kdq(rho: DensityOperator, U: np.ndarray, cs: ChargeSet) -> QuasiDistribution:
    """Average of the forward KDQ over all charge-label permutations."""
    c = cs.n_charges
    n_perm = math.factorial(c)
    if n_perm > TOLS.permutation_cap:
        raise CapExceededError(f"{n_perm} permutations exceed cap {TOLS.permutation_cap}")
    _require_under_cap(cs)
    u = require_conserving(U, cs)
    dsq = cs.dim**2
    acc = np.zeros((dsq,) * (2 * c), dtype=complex)
    for tau in itertools.permutations(range(c)):
        cs_perm = dataclasses.replace(cs, charges=tuple(cs.charges[t] for t in tau))
        arr = _kdq_array(rho.matrix, u, cs_perm, "forward")
        # arr axis a holds i_{tau[a]}; transpose back to canonical charge order.
        inverse = [tau.index(j) for j in range(c)]
        axes = inverse + [c + a for a in inverse]
        acc += np.transpose(arr, axes=axes)
    acc /= n_perm
    return QuasiDistribution("symmetrized", acc.reshape(-1), cs, u, rho)


def restricted_sums(
    dist: QuasiDistribution,
    values: np.ndarray,
    floor: float | None = None,
) -> tuple[complex, complex, complex]:
    """(total, conserving, nonconserving) sums of weight*value.

    Trajectories with |weight| <= floor are skipped; entries whose value is
    NaN on a retained trajectory raise.  The total is defined as the sum of
    the two restricted parts, so the decomposition is exact by construction.
    """
    floor = TOLS.weight_floor if floor is None else floor
    w = dist.weights
    live = np.abs(w) > floor
    vals = np.asarray(values)
    bad = live & ~np.isfinite(vals.real if np.iscomplexobj(vals) else vals)
    if np.iscomplexobj(vals):
        bad |= live & ~np.isfinite(vals.imag)
    if bad.any():
        raise NonfiniteValueError(
            f"{int(bad.sum())} non-negligible trajectories carry a nonfinite value"
        )
    cons = dist.conserving_flags
    prod = w * vals
    cons_sum = complex(prod[live & cons].sum())
    noncons_sum = complex(prod[live & ~cons].sum())
    return cons_sum + noncons_sum, cons_sum, noncons_sum


def quasi_average(
    dist: QuasiDistribution,
    fn: Callable[[Trajectory], complex],
    restrict: str = "all",
) -> complex:
    """Sum of weight * fn(trajectory) over the restricted trajectory set.

    ``restrict`` is "all", "conserving", or "nonconserving"; the "all" value
    equals conserving + nonconserving exactly (same summation order).
    """
    floor = TOLS.weight_floor
    w = dist.weights
    d, c = dist.dim, dist.n_charges
    cons = dist.conserving_flags
    cons_sum = 0.0 + 0.0j
    noncons_sum = 0.0 + 0.0j
    for idx in np.nonzero(np.abs(w) > floor)[0]:
        val = complex(fn(trajectory_from_flat(int(idx), d, c)))
        if not (np.isfinite(val.real) and np.isfinite(val.imag)):
            raise NonfiniteValueError(
                f"fn is nonfinite on trajectory {idx} with weight {w[idx]}"
            )
        if cons[idx]:
            cons_sum += w[idx] * val
        else:
            noncons_sum += w[idx] * val
    if restrict == "all":
        return cons_sum + noncons_sum
    if restrict == "conserving":
        return cons_sum
    if restrict == "nonconserving":
        return noncons_sum
    raise ValueError(f"unknown restriction {restrict!r}")


@dataclass(frozen=True)
class Marginal:
    values: np.ndarray
    guaranteed_real: bool


def single_index_marginal(dist: QuasiDistribution, stage: str, alpha: int) -> Marginal:
    """Marginal over one index, all others summed out.

    Only (initial, 1st charge) and (final, 1st charge) are flagged guaranteed
    real for forward distributions; other requests are computed but flagged
    potentially complex.
    """
    c = dist.n_charges
    if stage == "initial":
        axis = alpha
    elif stage == "final":
        axis = c + alpha
    else:
        raise ValueError(f"stage must be 'initial' or 'final', got {stage!r}")
    other = tuple(a for a in range(2 * c) if a != axis)
    values = dist.array.sum(axis=other)
    guaranteed = dist.kind == "forward" and alpha == 0
    if guaranteed:
        residue = float(np.abs(values.imag).max())
        if residue > 1e-10:
            raise NasepError(f"guaranteed-real marginal has imaginary residue {residue:.3e}")
        return Marginal(values=values.real, guaranteed_real=True)
    return Marginal(values=values, guaranteed_real=False)


def export_csv(dist: QuasiDistribution, path) -> None:
    """Write trajectories as CSV: index columns, re/im weight, conserving flag."""
    c, d = dist.n_charges, dist.dim
    header = []
    for a in range(1, c + 1):
        header += [f"i_{a}A", f"i_{a}B"]
    for a in range(1, c + 1):
        header += [f"f_{a}A", f"f_{a}B"]
    header += ["re_weight", "im_weight", "conserving"]
    cons = dist.conserving_flags
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, w in enumerate(dist.weights):
            traj = trajectory_from_flat(idx, d, c)
            row = [str(k) for pair in traj.initial for k in pair]
            row += [str(k) for pair in traj.final for k in pair]
            row += [repr(float(w.real)), repr(float(w.imag)), str(int(cons[idx]))]
            writer.writerow(row)
