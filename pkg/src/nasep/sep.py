"""Three stochastic entropy production species over KDQ trajectories.

Per-trajectory values (charge, surprisal, trajectory, and the kappa term),
their averages through independent closed forms, the three fluctuation
theorems with corrections, weak values, and the contextuality witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charges import ChargeSet, ProductIndex, composite_vector
from .errors import (
    DimensionMismatchError,
    NasepError,
    NonfiniteValueError,
    SupportViolationError,
    ZeroPostselectionError,
)
from .instance import Instance
from .linalg import dagger, frobenius, herm_exp, tensor_product
from .numerics import TOLS
from .quasiprob import Trajectory, restricted_sums, trajectory_from_flat
from .thermal import (
    DensityOperator,
    GgeSpec,
    dephase,
    product_basis_probabilities,
    relative_entropy,
)

# ---------------------------------------------------------------------------
# Per-trajectory values
# ---------------------------------------------------------------------------


def sigma_chrg(traj: Trajectory, cs: ChargeSet, specs: tuple[GgeSpec, GgeSpec]) -> float:
    """Charge SEP: beta-weighted eigenvalue changes on both systems."""
    spec_a, spec_b = specs
    total = 0.0
    for alpha in range(cs.n_charges):
        lam = cs.eigenvalues(alpha)
        i, f = traj.initial[alpha], traj.final[alpha]
        total += spec_a.betas[alpha] * (lam[f.k_a] - lam[i.k_a])
        total += spec_b.betas[alpha] * (lam[f.k_b] - lam[i.k_b])
    return total


def kappa(traj: Trajectory, cs: ChargeSet, specs: tuple[GgeSpec, GgeSpec]) -> float:
    """First fluctuation-theorem term's exponent: temperature-difference part.

    Equals sigma_chrg on conserving trajectories.
    """
    spec_a, spec_b = specs
    total = 0.0
    for alpha in range(cs.n_charges):
        lam = cs.eigenvalues(alpha)
        i, f = traj.initial[alpha], traj.final[alpha]
        total += (spec_a.betas[alpha] - spec_b.betas[alpha]) * (lam[f.k_a] - lam[i.k_a])
    return total


def sigma_surp(traj: Trajectory, alpha: int, rho: DensityOperator, cs: ChargeSet) -> float:
    """Surprisal SEP log(p(i_alpha)/p(f_alpha)); +/-inf and NaN sentinels."""
    probs = product_basis_probabilities(rho, cs, alpha)
    d = cs.dim
    i, f = traj.initial[alpha], traj.final[alpha]
    p_i = probs[i.k_a * d + i.k_b]
    p_f = probs[f.k_a * d + f.k_b]
    floor = TOLS.amp_floor
    if p_i <= floor and p_f <= floor:
        return float("nan")
    if p_f <= floor:
        return float("inf")
    if p_i <= floor:
        return float("-inf")
    return float(np.log(p_i) - np.log(p_f))


def sigma_surp_degenerate_demo(traj: Trajectory, projectors, rho: DensityOperator) -> float:
    """Surprisal SEP with caller-supplied (possibly rank > 1) projectors.

    The main path rejects degenerate charges; this relaxed entry point takes
    an explicit complete orthogonal single-system family and evaluates the
    probability-ratio surprisal on one composite index pair, exhibiting the
    rank-weighted departure from the charge SEP.
    """
    projs = [np.asarray(p, dtype=complex) for p in projectors]
    d = projs[0].shape[0]
    total = sum(projs)
    if frobenius(total - np.eye(d)) > 1e-10:
        raise DimensionMismatchError("projector family does not sum to the identity")
    for a, pa in enumerate(projs):
        for b, pb in enumerate(projs):
            expect = pa if a == b else np.zeros_like(pa)
            if frobenius(pa @ pb - expect) > 1e-10:
                raise DimensionMismatchError("projector family is not orthogonal/idempotent")
    if len(traj.initial) != 1 or len(traj.final) != 1:
        raise DimensionMismatchError("degenerate demo covers a single charge")
    i, f = traj.initial[0], traj.final[0]
    p_i = np.trace(tensor_product(projs[i.k_a], projs[i.k_b]) @ rho.matrix).real
    p_f = np.trace(tensor_product(projs[f.k_a], projs[f.k_b]) @ rho.matrix).real
    return float(np.log(p_i) - np.log(p_f))


def sigma_traj(
    traj: Trajectory,
    rho: DensityOperator,
    U: np.ndarray,
    cs: ChargeSet,
    branch: str = "principal",
) -> complex:
    """Trajectory SEP from the first-charge amplitude ratio; NaN when undefined."""
    table = sigma_traj_pair_table(rho, U, cs, branch)
    d = cs.dim
    i, f = traj.initial[0], traj.final[0]
    return complex(table[i.k_a * d + i.k_b, f.k_a * d + f.k_b])


@dataclass(frozen=True)
class WeakValuePair:
    wv_forward: complex
    wv_reverse: complex
    phi_f: float
    phi_r: float


def weak_values(i1, f1, rho: DensityOperator, U: np.ndarray, cs: ChargeSet) -> WeakValuePair:
    """Forward/reverse weak values for the first charge's index pair.

    Polar conventions: wv_forward = |.| e^{i phi_f}, wv_reverse = |.| e^{-i phi_r}.
    """
    vi = composite_vector(cs, 0, ProductIndex(*i1))
    vf = composite_vector(cs, 0, ProductIndex(*f1))
    u = np.asarray(U, dtype=complex)
    rho_m = rho.matrix
    den_f = (vf.conj() @ (u @ rho_m @ dagger(u)) @ vf).real
    den_r = (vi.conj() @ (dagger(u) @ rho_m @ u) @ vi).real
    if den_f <= TOLS.amp_floor or den_r <= TOLS.amp_floor:
        raise ZeroPostselectionError("weak-value postselection probability is zero")
    amp_fu = vf.conj() @ u @ vi
    wv_f = amp_fu * (vi.conj() @ rho_m @ dagger(u) @ vf) / den_f
    wv_r = amp_fu.conjugate() * (vf.conj() @ rho_m @ u @ vi) / den_r
    return WeakValuePair(
        wv_forward=complex(wv_f),
        wv_reverse=complex(wv_r),
        phi_f=float(np.angle(wv_f)),
        phi_r=float(-np.angle(wv_r)),
    )


# ---------------------------------------------------------------------------
# Vectorized per-trajectory tables over the flat index
# ---------------------------------------------------------------------------


def _axis_view(vec: np.ndarray, axis: int, n_axes: int) -> np.ndarray:
    shape = [1] * n_axes
    shape[axis] = vec.size
    return vec.reshape(shape)


def sigma_chrg_values(cs: ChargeSet, spec_a: GgeSpec, spec_b: GgeSpec) -> np.ndarray:
    """sigma_chrg over all trajectories, flat."""
    c, dsq = cs.n_charges, cs.dim**2
    out = np.zeros((dsq,) * (2 * c))
    for alpha in range(c):
        lam = cs.eigenvalues(alpha)
        w = (spec_a.betas[alpha] * lam)[:, None] + (spec_b.betas[alpha] * lam)[None, :]
        w = w.reshape(-1)
        out = out + _axis_view(w, c + alpha, 2 * c) - _axis_view(w, alpha, 2 * c)
    return out.reshape(-1)


def kappa_values(cs: ChargeSet, spec_a: GgeSpec, spec_b: GgeSpec) -> np.ndarray:
    """kappa over all trajectories, flat."""
    c, dsq = cs.n_charges, cs.dim**2
    out = np.zeros((dsq,) * (2 * c))
    for alpha in range(c):
        lam = cs.eigenvalues(alpha)
        dbeta = spec_a.betas[alpha] - spec_b.betas[alpha]
        w = np.repeat(dbeta * lam, cs.dim)  # depends on the A component only
        out = out + _axis_view(w, c + alpha, 2 * c) - _axis_view(w, alpha, 2 * c)
    return out.reshape(-1)


def sigma_surp_values(rho: DensityOperator, cs: ChargeSet, alpha: int) -> np.ndarray:
    """sigma_surp over all trajectories, flat, with +/-inf and NaN sentinels."""
    c = cs.n_charges
    probs = product_basis_probabilities(rho, cs, alpha)
    with np.errstate(divide="ignore"):
        logs = np.where(probs > TOLS.amp_floor, np.log(np.maximum(probs, 1e-300)), -np.inf)
    with np.errstate(invalid="ignore"):
        table = _axis_view(logs, alpha, 2 * c) - _axis_view(logs, c + alpha, 2 * c)
        dsq = cs.dim**2
        table = np.broadcast_to(table, (dsq,) * (2 * c))
    return np.ascontiguousarray(table).reshape(-1)


def sigma_traj_pair_table(
    rho: DensityOperator, U: np.ndarray, cs: ChargeSet, branch: str = "principal"
) -> np.ndarray:
    """(d^2, d^2) table of sigma_traj over (i_1, f_1); NaN where undefined.

    branch "principal" takes the principal log of the amplitude ratio (cut
    along the negative real axis); "pure_decomposed" (pure states only)
    assembles the imaginary part from the four per-index principal arguments,
    the branch under which the phase average is provably real.
    """
    basis = cs.composite_basis(0)
    u = np.asarray(U, dtype=complex)
    amp_f = dagger(basis) @ (rho.matrix @ dagger(u)) @ basis
    amp_r = dagger(basis) @ (dagger(u) @ rho.matrix) @ basis
    defined = (np.abs(amp_f) > TOLS.amp_floor) & (np.abs(amp_r) > TOLS.amp_floor)
    out = np.full(amp_f.shape, complex(np.nan, np.nan))
    if branch == "principal":
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(defined, amp_f / np.where(defined, amp_r, 1.0), 1.0)
            out[defined] = np.log(ratio[defined])
        return out
    if branch == "pure_decomposed":
        if not rho.is_pure():
            raise NasepError("pure_decomposed branch requires a pure state")
        psi = _dominant_vector(rho)
        a1 = dagger(basis) @ psi          # <1_k|psi>
        uf = dagger(basis) @ (u @ psi)    # <1_k|U|psi>
        b1 = dagger(basis) @ (dagger(u) @ psi)  # <1_k|U^dag|psi>
        with np.errstate(divide="ignore", invalid="ignore"):
            re = np.log(np.abs(amp_f)) - np.log(np.abs(amp_r))
        phase = (
            _axis_view(np.angle(a1) - np.angle(b1), 0, 2)
            + _axis_view(np.angle(uf.conj()) - np.angle(a1.conj()), 1, 2)
        )
        vals = re + 1j * np.broadcast_to(phase, amp_f.shape)
        out[defined] = vals[defined]
        return out
    raise ValueError(f"unknown branch {branch!r}")


def _dominant_vector(rho: DensityOperator) -> np.ndarray:
    from .linalg import herm_eig

    system = herm_eig(rho.matrix)
    return system.eigenvectors[:, -1]


def _broadcast_pair_table(table: np.ndarray, c: int) -> np.ndarray:
    """Expand an (i_1, f_1) table to the full flat trajectory array."""
    dsq = table.shape[0]
    expanded = table.reshape((dsq,) + (1,) * (c - 1) + (dsq,) + (1,) * (c - 1))
    return np.ascontiguousarray(np.broadcast_to(expanded, (dsq,) * (2 * c))).reshape(-1)


# ---------------------------------------------------------------------------
# Averages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AvgSigmaChrg:
    via_trajectories: float
    via_flows: float
    via_relent: float
    imag_residue: float


def _real_with_residue(value: complex, what: str) -> tuple[float, float]:
    residue = abs(value.imag)
    if residue > TOLS.residue:
        raise NasepError(f"{what} has imaginary residue {residue:.3e}")
    return float(value.real), float(residue)


def avg_sigma_chrg(inst: Instance) -> AvgSigmaChrg:
    """<sigma_chrg> three ways: trajectory sum, charge flows, relative entropy."""
    vals = sigma_chrg_values(inst.charge_set, inst.spec_a, inst.spec_b)
    total, _, _ = restricted_sums(inst.forward, vals)
    via_traj, residue = _real_with_residue(total, "<sigma_chrg>")

    flows = 0.0
    rho_a, _ = inst.reduced
    rho_fa, _ = inst.reduced_final
    for alpha in range(inst.charge_set.n_charges):
        q = inst.charge_set.charges[alpha].matrix
        dq = np.trace(q @ (rho_fa.matrix - rho_a.matrix)).real
        flows += (inst.spec_a.betas[alpha] - inst.spec_b.betas[alpha]) * dq

    if inst.is_product:
        via_relent = relative_entropy(inst.rho_f, inst.rho)
    else:
        ref = inst.marginal_product
        via_relent = relative_entropy(inst.rho_f, ref) - relative_entropy(inst.rho, ref)
    return AvgSigmaChrg(via_traj, float(flows), via_relent, residue)


@dataclass(frozen=True)
class AvgSigmaSurp:
    via_trajectories: float
    via_relent: float
    imag_residue: float


def avg_sigma_surp(inst: Instance, alpha: int = 0) -> AvgSigmaSurp:
    """<sigma_surp> via the trajectory sum and via dephased relative entropies."""
    vals = sigma_surp_values(inst.rho, inst.charge_set, alpha)
    total, _, _ = restricted_sums(inst.forward, vals)
    via_traj, residue = _real_with_residue(total, "<sigma_surp>")
    pinched = dephase(inst.rho, inst.charge_set, alpha)
    via_relent = relative_entropy(inst.rho_f, pinched) - relative_entropy(inst.rho, pinched)
    return AvgSigmaSurp(via_traj, via_relent, residue)


@dataclass(frozen=True)
class AvgSigmaTraj:
    via_trajectories: complex
    via_pure_formula: complex | None
    log_imag_residue: float
    phase_imag_residue: float
    branch: str


def avg_sigma_traj(inst: Instance, branch: str | None = None) -> AvgSigmaTraj:
    """<sigma_traj> as the trajectory sum, plus the pure-state closed form.

    The sum runs over trajectories with defined sigma_traj and non-negligible
    forward weight.  For mixed states only the principal-branch sum is
    reported (its value is branch-convention dependent).
    """
    pure = inst.rho.is_pure()
    if branch is None:
        branch = "pure_decomposed" if pure else "principal"
    cs = inst.charge_set
    table = sigma_traj_pair_table(inst.rho, inst.unitary, cs, branch)
    vals = _broadcast_pair_table(table, cs.n_charges)
    w = inst.forward.weights
    live = (np.abs(w) > TOLS.weight_floor) & np.isfinite(vals.real) & np.isfinite(vals.imag)
    log_sum = complex((w[live] * vals.real[live]).sum())
    phase_sum = complex((w[live] * vals.imag[live]).sum())
    via_traj = log_sum + 1j * phase_sum

    via_pure = None
    if pure and branch == "pure_decomposed":
        via_pure = _pure_traj_closed_form(inst)
    return AvgSigmaTraj(
        via_trajectories=via_traj,
        via_pure_formula=via_pure,
        log_imag_residue=abs(log_sum.imag),
        phase_imag_residue=abs(phase_sum.imag),
        branch=branch,
    )


def _pure_traj_closed_form(inst: Instance) -> complex:
    """Half-sum of four dephasing relative entropies plus i<phi_F - phi_R>.

    The phase average is taken against the single-index marginals, which are
    genuine probabilities, so it is manifestly real.
    """
    cs = inst.charge_set
    u = inst.unitary
    rho, rho_f = inst.rho, inst.rho_f
    rho_back = DensityOperator(dagger(u) @ rho.matrix @ u)
    phi_rho = dephase(rho, cs, 0)
    conj_phi = DensityOperator(dagger(u) @ phi_rho.matrix @ u)
    re_part = 0.5 * (
        relative_entropy(rho, dephase(rho_back, cs, 0))
        + relative_entropy(rho, conj_phi)
        - relative_entropy(rho, phi_rho)
        - relative_entropy(rho_f, dephase(rho_f, cs, 0))
    )
    basis = cs.composite_basis(0)
    psi = _dominant_vector(rho)
    a1 = dagger(basis) @ psi
    uf = dagger(basis) @ (u @ psi)
    b1 = dagger(basis) @ (dagger(u) @ psi)
    p_init = np.abs(a1) ** 2
    p_final = np.abs(uf) ** 2
    phase = 0.0
    for k in range(p_init.size):
        if p_init[k] > TOLS.amp_floor:
            phase += p_init[k] * (np.angle(a1[k]) - np.angle(b1[k]))
        if p_final[k] > TOLS.amp_floor:
            phase += p_final[k] * (np.angle(uf[k].conj()) - np.angle(a1[k].conj()))
    return complex(re_part, phase)


# ---------------------------------------------------------------------------
# Fluctuation theorems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluctuationReport:
    lhs: complex
    closed_form_term: complex
    correction: complex
    residual: float
    checks: dict[str, float] = field(default_factory=dict)


def _exp_chain_trace(inst: Instance, a_signs: np.ndarray, b_signs: np.ndarray) -> complex:
    """Tr(U^dag X_1 ... X_c U Y_c ... Y_1 rho) with X/Y single-charge exponentials.

    X_alpha = exp(a_signs[alpha] Q_alpha) (x) exp(b_signs[alpha] Q_alpha) and
    Y_alpha the same with flipped signs.
    """
    cs = inst.charge_set
    eye = np.eye(cs.dim, dtype=complex)
    mat = dagger(inst.unitary)
    for alpha in range(cs.n_charges):
        q = cs.charges[alpha].matrix
        left = herm_exp(a_signs[alpha] * q)
        right = herm_exp(b_signs[alpha] * q) if b_signs[alpha] != 0.0 else eye
        mat = mat @ tensor_product(left, right)
    mat = mat @ inst.unitary
    for alpha in reversed(range(cs.n_charges)):
        q = cs.charges[alpha].matrix
        left = herm_exp(-a_signs[alpha] * q)
        right = herm_exp(-b_signs[alpha] * q) if b_signs[alpha] != 0.0 else eye
        mat = mat @ tensor_product(left, right)
    return complex(np.trace(mat @ inst.rho.matrix))


def ft_chrg(inst: Instance) -> FluctuationReport:
    """Charge-SEP fluctuation theorem ledger.

    lhs = <e^{-sigma_chrg}>; the closed-form term is <e^{-kappa}>, which must
    match its exponential-chain trace; the correction is the average of
    e^{-sigma_chrg} - e^{-kappa} over nonconserving trajectories only.  The
    exact all-trajectory trace identity for the lhs is recorded as a check.
    """
    cs, spec_a, spec_b = inst.charge_set, inst.spec_a, inst.spec_b
    e_sig = np.exp(-sigma_chrg_values(cs, spec_a, spec_b))
    e_kap = np.exp(-kappa_values(cs, spec_a, spec_b))
    lhs, _, _ = restricted_sums(inst.forward, e_sig)
    ekap, _, _ = restricted_sums(inst.forward, e_kap)
    _, _, correction = restricted_sums(inst.forward, e_sig - e_kap)
    residual = abs(lhs - ekap - correction)

    dbeta = np.array(spec_a.betas) - np.array(spec_b.betas)
    kappa_trace = _exp_chain_trace(inst, -dbeta, np.zeros_like(dbeta))
    lhs_trace = _exp_chain_trace(inst, -np.array(spec_a.betas), -np.array(spec_b.betas))
    return FluctuationReport(
        lhs=lhs,
        closed_form_term=ekap,
        correction=correction,
        residual=residual,
        checks={
            "closed_form_trace_residual": abs(ekap - kappa_trace),
            "lhs_trace_residual": abs(lhs - lhs_trace),
        },
    )


def ft_surp(inst: Instance, alpha: int = 0) -> FluctuationReport:
    """Surprisal-SEP fluctuation theorem: lhs = 1 + coherent-difference trace."""
    from .thermal import coherent_difference

    vals = sigma_surp_values(inst.rho, inst.charge_set, alpha)
    with np.errstate(over="ignore"):
        e_vals = np.exp(-vals)  # +inf sentinel maps to a harmless factor 0
    try:
        lhs, _, _ = restricted_sums(inst.forward, e_vals)
    except NonfiniteValueError as exc:
        raise SupportViolationError(
            "e^{-sigma_surp} diverges on a non-negligible trajectory "
            "(initial-basis probability vanishes)"
        ) from exc
    delta = coherent_difference(inst.rho, inst.charge_set, alpha)
    pinched = dephase(inst.rho, inst.charge_set, alpha)
    correction = complex(
        np.trace(
            dagger(inst.unitary) @ pinched.matrix @ inst.unitary @ delta @ inst.rho.matrix
        )
    )
    residual = abs(lhs - 1.0 - correction)
    return FluctuationReport(
        lhs=lhs, closed_form_term=1.0 + 0.0j, correction=correction, residual=residual
    )


def ft_traj(inst: Instance) -> FluctuationReport:
    """Correction-free trajectory-SEP fluctuation theorem: <e^{-sigma_traj}> = 1.

    Evaluated from the stored aligned forward/reverse weights (never by
    exponentiating logs); trajectories with negligible forward weight
    contribute their reverse weight directly.
    """
    w_f = inst.forward.weights
    w_r = inst.reverse.weights
    live = np.abs(w_f) > TOLS.weight_floor
    lhs = complex((w_f[live] * (w_r[live] / w_f[live])).sum() + w_r[~live].sum())
    return FluctuationReport(
        lhs=lhs,
        closed_form_term=1.0 + 0.0j,
        correction=0.0 + 0.0j,
        residual=abs(lhs - 1.0),
    )


# ---------------------------------------------------------------------------
# Symmetrized variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetrizedSepReport:
    which: str
    values: np.ndarray
    average: complex
    reference_average: float | None


def symmetrized_seps(inst: Instance, which: str) -> SymmetrizedSepReport:
    """Symmetrized surprisal or trajectory SEP, averaged under the symmetrized KDQ.

    "surp" averages the per-charge surprisal over bases and checks against
    the mean of dephased relative-entropy differences; "traj" averages the
    per-charge amplitude log-ratios (the c-term reduction of the
    permutation-averaged ratio).
    """
    cs = inst.charge_set
    c = cs.n_charges
    if which == "surp":
        acc = np.zeros((cs.dim**2) ** (2 * c))
        for alpha in range(c):
            with np.errstate(invalid="ignore"):
                acc = acc + sigma_surp_values(inst.rho, cs, alpha)
        vals = acc / c
        total, _, _ = restricted_sums(inst.symmetrized, vals)
        reference = 0.0
        for alpha in range(c):
            pinched = dephase(inst.rho, cs, alpha)
            reference += relative_entropy(inst.rho_f, pinched) - relative_entropy(
                inst.rho, pinched
            )
        reference /= c
        return SymmetrizedSepReport(which, vals, total, float(reference))
    if which == "traj":
        dsq = cs.dim**2
        acc = np.zeros((dsq,) * (2 * c), dtype=complex)
        u = inst.unitary
        for alpha in range(c):
            basis = cs.composite_basis(alpha)
            amp_f = dagger(basis) @ (inst.rho.matrix @ dagger(u)) @ basis
            amp_r = dagger(basis) @ (dagger(u) @ inst.rho.matrix) @ basis
            defined = (np.abs(amp_f) > TOLS.amp_floor) & (np.abs(amp_r) > TOLS.amp_floor)
            table = np.full(amp_f.shape, complex(np.nan, np.nan))
            with np.errstate(divide="ignore", invalid="ignore"):
                table[defined] = np.log(amp_f[defined] / amp_r[defined])
            view = table.reshape(
                (1,) * alpha + (dsq,) + (1,) * (c - 1) + (dsq,) + (1,) * (c - alpha - 1)
            )
            acc = acc + view
        vals = (acc / c).reshape(-1)
        w = inst.symmetrized.weights
        live = (np.abs(w) > TOLS.weight_floor) & np.isfinite(vals.real) & np.isfinite(vals.imag)
        total = complex((w[live] * vals[live]).sum())
        return SymmetrizedSepReport(which, vals, total, None)
    raise ValueError(f"which must be 'surp' or 'traj', got {which!r}")


# ---------------------------------------------------------------------------
# Contextuality witness and per-trajectory samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessEntry:
    i1: ProductIndex
    f1: ProductIndex
    sigma: complex


@dataclass(frozen=True)
class WitnessReport:
    entries: tuple[WitnessEntry, ...]
    average: complex
    average_flag: bool
    witness_tol: float


def contextuality_witness(inst: Instance, witness_tol: float | None = None) -> WitnessReport:
    """Index pairs with |Im sigma_traj| above tolerance, plus the average flag."""
    tol = TOLS.witness if witness_tol is None else witness_tol
    cs = inst.charge_set
    d = cs.dim
    table = sigma_traj_pair_table(inst.rho, inst.unitary, cs, "principal")
    entries = []
    for i_flat in range(d * d):
        for f_flat in range(d * d):
            val = table[i_flat, f_flat]
            if np.isfinite(val.real) and abs(val.imag) > tol:
                entries.append(
                    WitnessEntry(
                        i1=ProductIndex(i_flat // d, i_flat % d),
                        f1=ProductIndex(f_flat // d, f_flat % d),
                        sigma=complex(val),
                    )
                )
    avg = avg_sigma_traj(inst)
    average = avg.via_trajectories
    return WitnessReport(
        entries=tuple(entries),
        average=average,
        average_flag=abs(average.imag) > tol,
        witness_tol=tol,
    )


@dataclass(frozen=True)
class SepSample:
    trajectory: Trajectory
    sigma_chrg: float
    kappa: float
    sigma_surp: float
    sigma_traj: complex
    weight: complex
    conserving: bool


def sep_samples(inst: Instance, alpha: int = 0, branch: str = "principal") -> list[SepSample]:
    """Per-trajectory SEP table for every trajectory, sentinels included."""
    cs = inst.charge_set
    chrg = sigma_chrg_values(cs, inst.spec_a, inst.spec_b)
    kap = kappa_values(cs, inst.spec_a, inst.spec_b)
    surp = sigma_surp_values(inst.rho, cs, alpha)
    traj_vals = _broadcast_pair_table(
        sigma_traj_pair_table(inst.rho, inst.unitary, cs, branch), cs.n_charges
    )
    w = inst.forward.weights
    cons = inst.forward.conserving_flags
    samples = []
    for idx in range(w.size):
        samples.append(
            SepSample(
                trajectory=trajectory_from_flat(idx, cs.dim, cs.n_charges),
                sigma_chrg=float(chrg[idx]),
                kappa=float(kap[idx]),
                sigma_surp=float(surp[idx]),
                sigma_traj=complex(traj_vals[idx]),
                weight=complex(w[idx]),
                conserving=bool(cons[idx]),
            )
        )
    return samples


def export_sep_csv(inst: Instance, path, alpha: int = 0, branch: str = "principal") -> None:
    """CSV of per-trajectory SEP values: indices, each SEP, weight, conserving flag."""
    import csv

    cs = inst.charge_set
    c = cs.n_charges
    header = []
    for a in range(1, c + 1):
        header += [f"i_{a}A", f"i_{a}B"]
    for a in range(1, c + 1):
        header += [f"f_{a}A", f"f_{a}B"]
    header += [
        "sigma_chrg",
        "kappa",
        "sigma_surp",
        "sigma_traj_re",
        "sigma_traj_im",
        "weight_re",
        "weight_im",
        "conserving",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in sep_samples(inst, alpha=alpha, branch=branch):
            row = [str(k) for pair in s.trajectory.initial for k in pair]
            row += [str(k) for pair in s.trajectory.final for k in pair]
            row += [
                repr(s.sigma_chrg),
                repr(s.kappa),
                repr(s.sigma_surp),
                repr(s.sigma_traj.real),
                repr(s.sigma_traj.imag),
                repr(s.weight.real),
                repr(s.weight.imag),
                str(int(s.conserving)),
            ]
            writer.writerow(row)
