"""Observable splitting, speeds via trace and covariance routes, every
per-instant speed limit (Cramer-Rao form, coherent/incoherent upper and lower
forms), the tightness ratio, entropy-rate and heat-flux bounds, the joint
system-environment energy-variance check, and the speed-operator basis.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import TrajectoryPoint, effective_hamiltonian, split_derivative
from .errors import (BoundViolationError, ContractError, DegenerateDriveError,
                     InternalConsistencyError)
from .information import SpeedOperators, speed_operators
from .operators import (DensityMatrix, HermitianOperator, MatrixLike,
                        SpectralFrame, as_matrix, partial_trace,
                        spectral_decompose, sym_covariance, variance)
from .tolerances import DEFAULT_TOL, ToleranceSet


@dataclass(frozen=True)
class ObservableSplit:
    """An observable and its frame-diagonal/off-diagonal parts with spreads."""

    total: HermitianOperator
    coh: HermitianOperator
    inc: HermitianOperator
    std: float
    std_coh: float
    std_inc: float


def split_observable(observable: MatrixLike, frame: SpectralFrame) -> ObservableSplit:
    """Split A into the frame-diagonal part and the rest, with standard deviations.

    The total spread is computed from tr(rho A^2) - tr(rho A)^2 directly, so
    std^2 = std_coh^2 + std_inc^2 stays a checkable identity rather than a
    definition.
    """
    a = as_matrix(observable)
    if a.shape[0] != frame.dim:
        raise ContractError("observable dimension does not match the frame")
    a_f = frame.to_frame(a)
    p = frame.probabilities
    diag = np.real(np.diagonal(a_f))
    inc = frame.from_frame(np.diag(diag.astype(complex)))
    inc = (inc + inc.conj().T) / 2
    coh = a - inc

    mean = float(np.sum(p * diag))
    var_inc = float(np.sum(p * diag**2) - mean * mean)
    off = np.abs(a_f) ** 2
    np.fill_diagonal(off, 0.0)
    var_coh = float(np.sum(p[:, None] * off))

    rho = frame.reconstruct()
    var_total = float(np.trace(rho @ a @ a).real - np.trace(rho @ a).real ** 2)

    return ObservableSplit(
        total=HermitianOperator(a),
        coh=HermitianOperator(coh),
        inc=HermitianOperator(inc),
        std=math.sqrt(max(var_total, 0.0)),
        std_coh=math.sqrt(max(var_coh, 0.0)),
        std_inc=math.sqrt(max(var_inc, 0.0)),
    )


def observable_speeds(split: ObservableSplit, point: TrajectoryPoint,
                      ops: SpeedOperators, tol: ToleranceSet = DEFAULT_TOL
                      ) -> tuple[float, float, float]:
    """Speeds of A, A_coh, A_inc; trace route returned, covariance route checked.

    Explicit time dependence of A is out of scope here: callers add <dA/dt>
    separately.
    """
    drho = point.drho.matrix
    a_dot = float(np.trace(split.total.matrix @ drho).real)
    a_dot_coh = float(np.trace(split.coh.matrix @ drho).real)
    a_dot_inc = float(np.trace(split.inc.matrix @ drho).real)

    rho = point.rho.matrix
    cov_coh = sym_covariance(rho, split.coh, ops.sld_coh)
    cov_inc = sym_covariance(rho, split.inc, ops.sld_inc)
    gap = max(abs(a_dot_coh - cov_coh), abs(a_dot_inc - cov_inc))
    if gap > tol.route_agreement:
        raise InternalConsistencyError(
            f"trace and covariance speed routes disagree by {gap:.3e}")
    return a_dot, a_dot_coh, a_dot_inc


def _timescale(spread: float, rate: float, tol: ToleranceSet) -> float:
    if abs(rate) < tol.zero_rate:
        return math.inf
    return spread / abs(rate)


def _ti_product(tau: float, fisher: float) -> float:
    if math.isinf(tau):
        return math.inf
    return tau * math.sqrt(max(fisher, 0.0))


@dataclass(frozen=True)
class SpeedReport:
    """Every per-instant speed bound for one observable at one instant."""

    a_dot: float
    a_dot_coh: float
    a_dot_inc: float
    bound_cr: float          # std(A) * sqrt(F)
    bound_coh: float         # std(A_coh) * sqrt(F_coh)
    bound_inc: float         # std(A_inc) * sqrt(F_inc)
    bound_upper: float       # min(|a_dot_coh| + bound_inc, |a_dot_inc| + bound_coh)
    bound_sum: float         # bound_coh + bound_inc (the loose additive form)
    bound_lower: float       # max(|a_dot_coh| - bound_inc, |a_dot_inc| - bound_coh, 0)
    bound_lower_raw: float   # same without the floor at zero
    ratio: float             # bound_cr / bound_sum, >= 1
    tau_a: float
    tau_coh: float
    tau_inc: float
    ti_a: float              # tau_a * sqrt(F), >= 1 whenever finite
    ti_coh: float
    ti_inc: float
    support_corr: float


def speed_report(split: ObservableSplit, point: TrajectoryPoint, ops: SpeedOperators,
                 support_corr: float = 0.0, tol: ToleranceSet = DEFAULT_TOL) -> SpeedReport:
    """Assemble all bounds; degenerate fields follow the inf/zero conventions."""
    a_dot, a_dot_coh, a_dot_inc = observable_speeds(split, point, ops, tol)
    sf = math.sqrt(max(ops.fisher, 0.0))
    sfc = math.sqrt(max(ops.fisher_coh, 0.0))
    sfi = math.sqrt(max(ops.fisher_inc, 0.0))
    bound_cr = split.std * sf
    bound_coh = split.std_coh * sfc
    bound_inc = split.std_inc * sfi
    bound_upper = min(abs(a_dot_coh) + bound_inc, abs(a_dot_inc) + bound_coh)
    bound_sum = bound_coh + bound_inc
    lower_raw = max(abs(a_dot_coh) - bound_inc, abs(a_dot_inc) - bound_coh)
    if bound_sum > 0.0:
        ratio = bound_cr / bound_sum
    elif bound_cr > tol.element:
        ratio = math.inf
    else:
        ratio = 1.0
    tau_a = _timescale(split.std, a_dot, tol)
    tau_coh = _timescale(split.std_coh, a_dot_coh, tol)
    tau_inc = _timescale(split.std_inc, a_dot_inc, tol)
    return SpeedReport(
        a_dot=a_dot, a_dot_coh=a_dot_coh, a_dot_inc=a_dot_inc,
        bound_cr=bound_cr, bound_coh=bound_coh, bound_inc=bound_inc,
        bound_upper=bound_upper, bound_sum=bound_sum,
        bound_lower=max(lower_raw, 0.0), bound_lower_raw=lower_raw,
        ratio=ratio, tau_a=tau_a, tau_coh=tau_coh, tau_inc=tau_inc,
        ti_a=_ti_product(tau_a, ops.fisher),
        ti_coh=_ti_product(tau_coh, ops.fisher_coh),
        ti_inc=_ti_product(tau_inc, ops.fisher_inc),
        support_corr=float(support_corr),
    )


@dataclass(frozen=True)
class EntropyReport:
    entropy: float
    entropy_rate: float
    entropy_std: float       # spread of the surprisal operator -ln(rho)
    bound: float             # entropy_std * sqrt(F_inc)
    entropy_std_cap: float   # sqrt((ln(d-1))^2 / 4 + 1)
    skipped_flow: float      # |pdot| mass on unsupported levels, not in the sums


def entropy_rate_bound(point: TrajectoryPoint, ops: SpeedOperators,
                       tol: ToleranceSet = DEFAULT_TOL) -> EntropyReport:
    """Entropy rate against the surprisal-spread bound, plus the dimension cap."""
    p = point.frame.probabilities
    supported = point.frame.supported
    ps = p[supported]
    logs = np.log(ps)
    entropy = float(-np.sum(ps * logs))
    entropy_rate = float(-np.sum(point.pdot[supported] * logs))
    var_s = float(np.sum(ps * logs**2) - entropy * entropy)
    entropy_std = math.sqrt(max(var_s, 0.0))
    bound = entropy_std * math.sqrt(max(ops.fisher_inc, 0.0))
    d = point.dim
    cap = math.sqrt(math.log(d - 1) ** 2 / 4 + 1) if d >= 2 else 1.0
    skipped = float(np.sum(np.abs(point.pdot[~supported])))
    report = EntropyReport(entropy=entropy, entropy_rate=entropy_rate,
                           entropy_std=entropy_std, bound=bound,
                           entropy_std_cap=cap, skipped_flow=skipped)
    if abs(entropy_rate) > bound + 1e-9:
        err = BoundViolationError(
            f"|dS/dt| = {abs(entropy_rate):.3e} exceeds dS*sqrt(F_inc) = {bound:.3e}")
        err.report = report
        raise err
    if entropy_std > cap + 1e-12:
        err = BoundViolationError(
            f"dS = {entropy_std:.6f} exceeds the dimension cap {cap:.6f}")
        err.report = report
        raise err
    return report


@dataclass(frozen=True)
class HeatFluxReport:
    flux: float              # tr(drho H)
    bound: float             # std(H_inc) * sqrt(F_inc); asserted when applicable
    bound_coh_form: float    # std(H_coh) * sqrt(F_coh); reported, never asserted
    coherent_flux: float     # tr(drho H_coh); the part outside the asserted bound
    asserted: bool


def heat_flux_bound(point: TrajectoryPoint, ops: SpeedOperators, h: MatrixLike,
                    tol: ToleranceSet = DEFAULT_TOL) -> HeatFluxReport:
    """Energy flux against the incoherent speed limit of the diagonal part of H.

    The inequality |flux| <= std(H_inc) sqrt(F_inc) only follows when the flux
    has no coherent contribution (tr(drho H_coh) ~ 0), so it is asserted only
    then; the coherent-form product is reported alongside without assertion.
    """
    split = split_observable(h, point.frame)
    flux = float(np.trace(point.drho.matrix @ split.total.matrix).real)
    flux_coh = float(np.trace(point.drho.matrix @ split.coh.matrix).real)
    bound = split.std_inc * math.sqrt(max(ops.fisher_inc, 0.0))
    bound_coh_form = split.std_coh * math.sqrt(max(ops.fisher_coh, 0.0))
    asserted = abs(flux_coh) <= 1e-9 * (1.0 + abs(flux))
    report = HeatFluxReport(flux=flux, bound=bound, bound_coh_form=bound_coh_form,
                            coherent_flux=flux_coh, asserted=asserted)
    if asserted and abs(flux) > bound + 1e-9:
        err = BoundViolationError(
            f"|flux| = {abs(flux):.3e} exceeds its incoherent bound {bound:.3e}")
        err.report = report
        raise err
    return report


@dataclass(frozen=True)
class EnergyVarianceReport:
    """Reduced Fisher informations against energy variances of a joint model.

    ``bound_sys`` is the literal reduced-state variance of the bare system
    Hamiltonian. ``bound_eff`` (variance of the recovered coherent generator)
    and ``bound_sys_int`` (joint variance of H_sys + H_int) are the two forms
    with airtight derivations; they are reported for every instant.
    """

    fisher_coh: float
    fisher_inc: float
    bound_sys: float         # 4 * Var_reduced(H_sys)
    bound_int: float         # 4 * Var_joint(H_int)
    bound_eff: Optional[float]   # 4 * Var_reduced(H_eff), None inside degenerate blocks
    bound_sys_int: float     # 4 * Var_joint(H_sys x 1 + H_int)
    ok_coh_sys: bool
    ok_inc: bool
    ok_inc_strict: bool


def energy_variance_check(joint_point: TrajectoryPoint, h_sys: MatrixLike,
                          h_int: MatrixLike, slack: float = 1e-8,
                          tol: ToleranceSet = DEFAULT_TOL) -> EnergyVarianceReport:
    """Check F_coh and F_inc of the reduced state against energy variances.

    Requires a unitarily evolving joint state (no eigenvalue flow). Raises
    BoundViolationError if an asserted inequality fails; the full report rides
    on the exception as ``report``.
    """
    h_s = as_matrix(h_sys)
    h_i = as_matrix(h_int)
    d = joint_point.dim
    d_s = h_s.shape[0]
    if d % d_s != 0:
        raise ContractError("system dimension does not divide the joint dimension")
    d_e = d // d_s
    if h_i.shape[0] != d:
        raise ContractError("interaction Hamiltonian must act on the joint space")
    if float(np.max(np.abs(joint_point.pdot))) > 1e-8:
        raise ContractError("joint generator is not unitary: eigenvalues flow")

    run_tol = dataclasses.replace(tol, psd=tol.evolve_psd)
    rho_s = partial_trace(joint_point.rho, (d_s, d_e), "S", run_tol)
    from .operators import _partial_trace_matrix
    drho_s = _partial_trace_matrix(joint_point.drho.matrix, (d_s, d_e), "S")
    frame_s = spectral_decompose(rho_s, tol=run_tol)
    coh, inc, pdot = split_derivative(drho_s, frame_s)
    reduced = TrajectoryPoint(t=joint_point.t, rho=rho_s, frame=frame_s,
                              drho=HermitianOperator(drho_s), coh=coh, inc=inc,
                              pdot=pdot)
    ops = speed_operators(reduced, tol)

    bound_sys = 4.0 * variance(rho_s, h_s)
    bound_int = 4.0 * variance(joint_point.rho, h_i)
    bound_sys_int = 4.0 * variance(
        joint_point.rho, np.kron(h_s, np.eye(d_e, dtype=complex)) + h_i)
    try:
        h_eff = effective_hamiltonian(coh, frame_s, gap_tol=tol.gap)
        bound_eff = 4.0 * variance(rho_s, h_eff)
    except DegenerateDriveError:
        bound_eff = None

    ok_coh_sys = ops.fisher_coh <= bound_sys + slack
    ok_inc = ops.fisher_inc <= bound_int + slack
    ok_inc_strict = ops.fisher_inc <= 1e-9 or ops.fisher_inc < bound_int
    report = EnergyVarianceReport(
        fisher_coh=ops.fisher_coh, fisher_inc=ops.fisher_inc,
        bound_sys=bound_sys, bound_int=bound_int, bound_eff=bound_eff,
        bound_sys_int=bound_sys_int, ok_coh_sys=ok_coh_sys, ok_inc=ok_inc,
        ok_inc_strict=ok_inc_strict)
    if not (ok_coh_sys and ok_inc and ok_inc_strict):
        err = BoundViolationError(
            f"energy-variance check failed: F_coh={ops.fisher_coh:.6g} vs "
            f"4Var(H_sys)={bound_sys:.6g}, F_inc={ops.fisher_inc:.6g} vs "
            f"4Var(H_int)={bound_int:.6g}")
        err.report = report
        raise err
    return report


@dataclass(frozen=True)
class SpeedOperatorBasis:
    """Covariance-orthogonal operator basis seeded with the two speed operators.

    ``still`` members have unit covariance norm but zero covariance with both
    speed operators, so their means are instantaneously frozen;
    ``still_degenerate`` collects zero-covariance-norm directions (identity,
    operators confined to unsupported blocks).
    """

    sld_coh: Optional[HermitianOperator]
    sld_inc: Optional[HermitianOperator]
    still: tuple[HermitianOperator, ...]
    still_degenerate: tuple[HermitianOperator, ...]
    alpha_coh: float
    alpha_inc: float
    residual_speed: float

    @property
    def members(self) -> tuple[HermitianOperator, ...]:
        speed = tuple(m for m in (self.sld_coh, self.sld_inc) if m is not None)
        return speed + self.still + self.still_degenerate


def _frame_cov(x: np.ndarray, y: np.ndarray, p: np.ndarray) -> float:
    w = 0.5 * (p[:, None] + p[None, :])
    mx = float(np.sum(p * np.real(np.diagonal(x))))
    my = float(np.sum(p * np.real(np.diagonal(y))))
    return float(np.sum(w * (x * y.conj())).real - mx * my)


def _hermitian_units(d: int) -> list[np.ndarray]:
    units = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        units.append(e)
    inv = 1 / math.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = inv
            units.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j * inv
            a[k, j] = 1j * inv
            units.append(a)
    return units


def speed_operator_basis(ops: SpeedOperators, frame: SpectralFrame,
                         observable: Optional[MatrixLike] = None,
                         tol: ToleranceSet = DEFAULT_TOL) -> SpeedOperatorBasis:
    """Orthogonalize the Hermitian-operator space under the covariance form.

    Modified Gram-Schmidt with covariance-norm pivoting, seeded with the speed
    operators; directions whose covariance norm vanishes are kept and labeled
    degenerate rather than discarded.
    """
    p = frame.probabilities
    rho = frame.reconstruct()
    accepted: list[np.ndarray] = []   # cov-normalized, frame coordinates
    seeds = []
    if ops.fisher_coh > 1e-12:
        seeds.append(frame.to_frame(ops.sld_coh) / math.sqrt(ops.fisher_coh))
    if ops.fisher_inc > 1e-12:
        seeds.append(frame.to_frame(ops.sld_inc) / math.sqrt(ops.fisher_inc))
    accepted.extend(seeds)

    residuals = []
    for cand in _hermitian_units(frame.dim):
        r = cand.copy()
        for q in accepted:
            r = r - _frame_cov(q, r, p) * q
        residuals.append(r)

    still: list[np.ndarray] = []
    degenerate: list[np.ndarray] = []
    while residuals:
        norms = []
        for r in residuals:
            e2 = float(np.sum(np.abs(r) ** 2))
            norms.append(_frame_cov(r, r, p) / e2 if e2 > 1e-20 else -1.0)
        i = int(np.argmax(norms))
        if norms[i] < 1e-10:
            break
        r = residuals.pop(i)
        # re-orthogonalize against everything accepted so far (modified GS)
        for q in accepted:
            r = r - _frame_cov(q, r, p) * q
        q = r / math.sqrt(_frame_cov(r, r, p))
        accepted.append(q)
        still.append(q)
        residuals = [s - _frame_cov(q, s, p) * q for s in residuals]

    # leftovers are covariance-null; keep a linearly independent set
    kept: list[np.ndarray] = []
    for r in residuals:
        v = r.copy()
        for b in kept:
            v = v - np.sum(b.conj() * v) * b
        nrm = math.sqrt(float(np.sum(np.abs(v) ** 2)))
        if nrm > 1e-8:
            kept.append(v / nrm)
    degenerate = kept

    alpha_coh = alpha_inc = 0.0
    residual_speed = 0.0
    if observable is not None:
        a = as_matrix(observable)
        a_dot = sym_covariance(rho, a, ops.sld)
        if ops.fisher_coh > 1e-12:
            alpha_coh = sym_covariance(rho, a, ops.sld_coh) / ops.fisher_coh
        if ops.fisher_inc > 1e-12:
            alpha_inc = sym_covariance(rho, a, ops.sld_inc) / ops.fisher_inc
        residual_speed = abs(a_dot - alpha_coh * ops.fisher_coh
                             - alpha_inc * ops.fisher_inc)

    wrap = lambda m: HermitianOperator(frame.from_frame(m))
    return SpeedOperatorBasis(
        sld_coh=ops.sld_coh if ops.fisher_coh > 1e-12 else None,
        sld_inc=ops.sld_inc if ops.fisher_inc > 1e-12 else None,
        still=tuple(wrap(m) for m in still),
        still_degenerate=tuple(wrap(m) for m in degenerate),
        alpha_coh=alpha_coh, alpha_inc=alpha_inc, residual_speed=residual_speed)
