"""Pointer-based weak measurement oracle for weak values.

Simulates the full system-plus-detector unitary exactly (no linear-Kraus
approximation): a detector qubit prepared in |0> couples to a rank-one
system projector through exp(-i g Pi (x) sigma_y), the system evolves under
U, and the system is postselected.  The detector's sigma_x / sigma_y
expectation shifts carry 2g Re/Im of the weak value to O(g^2); Richardson
extrapolation in g^2 recovers the weak value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charges import ChargeSet, ProductIndex, product_projector
from .errors import ExtrapolationError, ZeroPostselectionError
from .linalg import dagger
from .numerics import TOLS
from .thermal import DensityOperator


@dataclass(frozen=True)
class PointerProtocol:
    rho: DensityOperator
    projector: np.ndarray
    unitary: np.ndarray
    postselect: np.ndarray
    coupling: float

    def __post_init__(self):
        if not 0.0 <= self.coupling <= 0.5:
            raise ValueError(f"coupling must lie in [0, 0.5], got {self.coupling}")


@dataclass(frozen=True)
class PointerReadout:
    pointer_x_shift: float
    pointer_y_shift: float
    postselect_prob: float


def pointer_run(p: PointerProtocol) -> PointerReadout:
    """Exact coupled-unitary simulation of one weak-measurement run.

    The coupling exp(-i g Pi (x) sigma_y) splits into detector branches with
    system-side Kraus operators K0 = 1 - (1-cos g) Pi and K1 = sin(g) Pi;
    after U and postselection the detector state's off-diagonal element
    carries the weak-value signal.
    """
    g = p.coupling
    proj = np.asarray(p.projector, dtype=complex)
    u = np.asarray(p.unitary, dtype=complex)
    post = np.asarray(p.postselect, dtype=complex)
    eye = np.eye(proj.shape[0], dtype=complex)
    k0 = u @ (eye - (1.0 - np.cos(g)) * proj)
    k1 = u @ (np.sin(g) * proj)
    rho = p.rho.matrix
    t00 = complex(np.trace(post @ k0 @ rho @ dagger(k0)))
    t11 = complex(np.trace(post @ k1 @ rho @ dagger(k1)))
    t10 = complex(np.trace(post @ k1 @ rho @ dagger(k0)))
    prob = t00.real + t11.real
    if prob < TOLS.amp_floor:
        raise ZeroPostselectionError(f"postselection probability {prob:.3e}")
    # Detector starts at <sx> = <sy> = 0; final values are the shifts.
    return PointerReadout(
        pointer_x_shift=2.0 * t10.real / prob,
        pointer_y_shift=2.0 * t10.imag / prob,
        postselect_prob=prob,
    )


@dataclass(frozen=True)
class WeakValueEstimate:
    value: complex
    fitted_c: float
    raw_estimates: tuple[complex, ...]
    couplings: tuple[float, ...]


def _neville_at_zero(h: np.ndarray, y: np.ndarray) -> complex:
    """Polynomial extrapolation of samples y(h) to h = 0."""
    t = list(y)
    n = len(t)
    for m in range(1, n):
        for k in range(n - 1, m - 1, -1):
            t[k] = t[k] + (t[k] - t[k - 1]) * h[k] / (h[k - m] - h[k])
    return complex(t[-1])


def estimate_weak_value(
    rho: DensityOperator,
    U: np.ndarray,
    i1,
    f1,
    cs: ChargeSet,
    g_schedule=(0.08, 0.04, 0.02),
) -> WeakValueEstimate:
    """Richardson-extrapolated weak value from pointer shifts at several couplings.

    Raw estimates carry an even error series in g, so extrapolation runs in
    h = g^2.  Raises when the raw error is not decreasing along the schedule.
    """
    gs = sorted((float(g) for g in g_schedule), reverse=True)
    if len(gs) < 2:
        raise ValueError("g_schedule needs at least two couplings")
    if any(abs(a - b) < 1e-12 for a, b in zip(gs, gs[1:])):
        raise ValueError("g_schedule couplings must be distinct")
    proj = product_projector(cs, 0, ProductIndex(*i1))
    post = product_projector(cs, 0, ProductIndex(*f1))
    raw = []
    for g in gs:
        out = pointer_run(PointerProtocol(rho, proj, np.asarray(U, complex), post, g))
        if out.postselect_prob < 1e-10:
            raise ZeroPostselectionError(
                f"postselection probability {out.postselect_prob:.3e} at g={g}"
            )
        raw.append((out.pointer_x_shift + 1j * out.pointer_y_shift) / (2.0 * np.sin(g)))
    h = np.array([g * g for g in gs])
    estimate = _neville_at_zero(h, np.array(raw, dtype=complex))
    if not (np.isfinite(estimate.real) and np.isfinite(estimate.imag)):
        raise ExtrapolationError("extrapolated weak value is not finite")
    errors = [abs(r - estimate) for r in raw]
    for earlier, later in zip(errors, errors[1:]):
        if later > earlier * 1.05 + 1e-12:
            raise ExtrapolationError(
                "raw estimate error does not decrease along the coupling schedule: "
                + ", ".join(f"{e:.3e}" for e in errors)
            )
    fitted_c = max(err / (g * g) for err, g in zip(errors, gs))
    return WeakValueEstimate(
        value=estimate,
        fitted_c=float(fitted_c),
        raw_estimates=tuple(raw),
        couplings=tuple(gs),
    )
