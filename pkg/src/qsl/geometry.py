"""Fidelity, Bures distance and angle, path length, path divergence and its
coherent/incoherent split, integrated speed limits, and the fidelity speed
check for pure initial states.

All quadratures are trapezoidal on the trajectory grid; resolution is a test
knob, not a runtime feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import observable_speeds, split_observable
from .dynamics import Trajectory
from .errors import BoundViolationError, ContractError
from .information import speed_operators, support_correction
from .operators import MatrixLike, as_matrix
from .tolerances import DEFAULT_TOL, ToleranceSet

_trapz = getattr(np, "trapezoid", None) or np.trapz


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho1: MatrixLike, rho2: MatrixLike) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho2) rho1 sqrt(rho2)))^2, clamped to [0,1]."""
    a, b = as_matrix(rho1), as_matrix(rho2)
    if a.shape != b.shape:
        raise ContractError("states must share the dimension")
    s = np.linalg.svd(_sqrt_psd(a) @ _sqrt_psd(b), compute_uv=False)
    return float(min(max(np.sum(s) ** 2, 0.0), 1.0))


def bures_distance(rho1: MatrixLike, rho2: MatrixLike) -> float:
    return math.sqrt(2.0) * math.sqrt(max(1.0 - math.sqrt(fidelity(rho1, rho2)), 0.0))


def bures_angle(rho1: MatrixLike, rho2: MatrixLike) -> float:
    return math.acos(min(math.sqrt(fidelity(rho1, rho2)), 1.0))


@dataclass(frozen=True)
class MetricConvergence:
    """Strided comparison of squared Bures steps against (F/4) dt^2."""

    spacings: np.ndarray
    mean_sq_distance: np.ndarray
    order: float               # log-log slope; nan on a stationary trajectory
    prefactor_ratio: float     # median D_B^2 / ((F/4) dt^2) at the finest spacing
    skipped_points: int
    stationary: bool


def metric_consistency(traj: Trajectory, strides: tuple[int, ...] = (1, 2, 4, 8),
                       tol: ToleranceSet = DEFAULT_TOL) -> MetricConvergence:
    """Verify the squared Bures step matches (F/4) dt^2 as the grid refines.

    Points whose support is changing (probability flow on unsupported levels)
    are skipped: the metric expansion fails across rank boundaries. Constant
    support, including pure states, is fine.
    """
    n = len(traj)
    if n <= max(strides):
        raise ContractError("trajectory too short for the requested strides")
    ok = np.array([
        float(np.max(np.abs(pt.pdot[~pt.frame.supported]), initial=0.0)) <= tol.support_flow
        for pt in traj
    ])
    fishers = np.array([speed_operators(pt, tol).fisher for pt in traj])
    mats = [pt.rho.matrix for pt in traj]
    spacings, means, ratios_fine = [], [], []
    skipped = 0
    for s in strides:
        d2, expect = [], []
        for i in range(0, n - s):
            if not (ok[i] and ok[i + s]):
                skipped += 1
                continue
            d2.append(bures_distance(mats[i], mats[i + s]) ** 2)
            expect.append(0.25 * fishers[i] * (s * traj.dt) ** 2)
        if d2:
            spacings.append(s * traj.dt)
            means.append(float(np.mean(d2)))
            if s == strides[0]:
                ratios_fine = [d / e for d, e in zip(d2, expect) if e > 1e-30]
    spacings = np.array(spacings)
    means = np.array(means)
    stationary = bool(np.all(means < 1e-28)) if means.size else True
    if stationary or len(means) < 2:
        return MetricConvergence(spacings=spacings, mean_sq_distance=means,
                                 order=math.nan, prefactor_ratio=math.nan,
                                 skipped_points=skipped, stationary=stationary)
    slope = float(np.polyfit(np.log(spacings), np.log(means), 1)[0])
    ratio = float(np.median(ratios_fine)) if ratios_fine else math.nan
    return MetricConvergence(spacings=spacings, mean_sq_distance=means,
                             order=slope, prefactor_ratio=ratio,
                             skipped_points=skipped, stationary=stationary)


@dataclass(frozen=True)
class IntegratedReport:
    """Path quantities and every integrated bound for one observable."""

    horizon: float
    path_length: float
    geodesic_length: float
    divergence: float
    divergence_coh: float
    divergence_inc: float
    normalized_speed_integral: float   # integral of |a_dot| / std(A)
    skipped_instants: int              # instants with std(A) below threshold
    total_change: float
    total_change_coh: float
    total_change_inc: float
    change_bound: float                # integral of std(A) sqrt(F)
    change_bound_divergence: float     # 2 sqrt(J * mean std(A)^2)
    change_bound_coh: float
    change_bound_coh_divergence: float
    change_bound_inc: float
    change_bound_inc_divergence: float
    support_correction: float

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = v if not isinstance(v, float) or math.isfinite(v) else None
        return out


def _slack(scale: float) -> float:
    return 1e-7 * (1.0 + abs(scale))


def integrated_report(traj: Trajectory, observable: MatrixLike,
                      tol: ToleranceSet = DEFAULT_TOL) -> IntegratedReport:
    """Trapezoidal accumulation of every integrated bound along a trajectory."""
    if len(traj) < 3:
        raise ContractError("need at least 3 grid points")
    a = as_matrix(observable)
    ts = traj.times
    horizon = float(ts[-1] - ts[0])

    n = len(traj)
    f = np.zeros(n); fc = np.zeros(n); fi = np.zeros(n)
    sa = np.zeros(n); sac = np.zeros(n); sai = np.zeros(n)
    ad = np.zeros(n); adc = np.zeros(n); adi = np.zeros(n)
    corr = np.zeros(n)
    for i, pt in enumerate(traj):
        ops = speed_operators(pt, tol)
        split = split_observable(a, pt.frame)
        ad[i], adc[i], adi[i] = observable_speeds(split, pt, ops, tol)
        f[i], fc[i], fi[i] = ops.fisher, ops.fisher_coh, ops.fisher_inc
        sa[i], sac[i], sai[i] = split.std, split.std_coh, split.std_inc
        corr[i] = support_correction(pt, a, tol)

    usable = sa > 1e-12
    skipped = int(np.sum(~usable))
    norm_speed = np.where(usable, np.abs(ad) / np.where(usable, sa, 1.0), 0.0)

    path_length = 0.5 * float(_trapz(np.sqrt(np.clip(f, 0, None)), ts))
    geodesic = bures_angle(traj[0].rho, traj[-1].rho)
    div = horizon * float(_trapz(f, ts))
    div_c = horizon * float(_trapz(fc, ts))
    div_i = horizon * float(_trapz(fi, ts))
    lhs_speed = float(_trapz(norm_speed, ts))
    total = float(_trapz(ad, ts))
    total_c = float(_trapz(adc, ts))
    total_i = float(_trapz(adi, ts))
    sqf, sqfc, sqfi = (np.sqrt(np.clip(x, 0, None)) for x in (f, fc, fi))
    cb = float(_trapz(sa * sqf, ts))
    cb_c = float(_trapz(sac * sqfc, ts))
    cb_i = float(_trapz(sai * sqfi, ts))
    mean_sq = lambda arr: float(_trapz(arr ** 2, ts)) / horizon if horizon > 0 else 0.0
    cb_div = 2.0 * math.sqrt(max(div * mean_sq(sa), 0.0))
    cb_c_div = 2.0 * math.sqrt(max(div_c * mean_sq(sac), 0.0))
    cb_i_div = 2.0 * math.sqrt(max(div_i * mean_sq(sai), 0.0))
    corr_int = float(_trapz(corr, ts))

    checks = [
        ("normalized speed vs path length", lhs_speed, 2 * path_length),
        ("geodesic vs path length", geodesic, path_length),
        ("squared length vs divergence", path_length ** 2, div),
        ("total change vs fluctuation integral", abs(total), cb + corr_int),
        ("total change vs divergence form", abs(total), cb_div + corr_int),
        ("coherent change vs its integral", abs(total_c), cb_c + corr_int),
        ("coherent change vs divergence form", abs(total_c), cb_c_div + corr_int),
        ("incoherent change vs its integral", abs(total_i), cb_i + corr_int),
        ("incoherent change vs divergence form", abs(total_i), cb_i_div + corr_int),
    ]
    for name, lhs, rhs in checks:
        if lhs > rhs + _slack(rhs):
            raise BoundViolationError(
                f"integrated bound '{name}' violated: {lhs:.6e} > {rhs:.6e}")
    if abs(div - div_c - div_i) > 1e-8 * max(div, 1.0):
        raise BoundViolationError("divergence does not split into its parts")

    return IntegratedReport(
        horizon=horizon, path_length=path_length, geodesic_length=geodesic,
        divergence=div, divergence_coh=div_c, divergence_inc=div_i,
        normalized_speed_integral=lhs_speed, skipped_instants=skipped,
        total_change=total, total_change_coh=total_c, total_change_inc=total_i,
        change_bound=cb, change_bound_divergence=cb_div,
        change_bound_coh=cb_c, change_bound_coh_divergence=cb_c_div,
        change_bound_inc=cb_i, change_bound_inc_divergence=cb_i_div,
        support_correction=corr_int)


@dataclass(frozen=True)
class FidelitySpeedReport:
    times: np.ndarray
    fid: np.ndarray                # tr(rho_0 rho_t)
    dfid: np.ndarray               # analytic d/dt
    bound_split: np.ndarray        # std_coh sqrt(F_coh) + std_inc sqrt(F_inc)
    bound_full: np.ndarray         # std(rho_0) sqrt(F)
    angle_end: float               # arccos sqrt(fid) at the horizon
    intermediate_integral: float
    full_integral: float           # integral of sqrt(F/4)
    patched_instants: int          # instants where the split integrand was ill-posed


def fidelity_speed_check(traj: Trajectory, tol: ToleranceSet = DEFAULT_TOL
                         ) -> FidelitySpeedReport:
    """Bound the fidelity decay of a pure initial state, pointwise and integrated."""
    rho0 = traj[0].rho
    p0 = np.sort(np.linalg.eigvalsh(rho0.matrix))
    if p0[-1] <= 1 - 1e-9:
        raise ContractError("initial state is not pure")
    n = len(traj)
    ts = traj.times
    fid = np.zeros(n); dfid = np.zeros(n)
    b_split = np.zeros(n); b_full = np.zeros(n)
    integrand = np.zeros(n); full_integrand = np.zeros(n)
    patched = 0
    for i, pt in enumerate(traj):
        ops = speed_operators(pt, tol)
        split = split_observable(rho0, pt.frame)
        fid[i] = float(min(max(np.trace(rho0.matrix @ pt.rho.matrix).real, 0.0), 1.0))
        dfid[i] = float(np.trace(rho0.matrix @ pt.drho.matrix).real)
        sfc = math.sqrt(max(ops.fisher_coh, 0.0))
        sfi = math.sqrt(max(ops.fisher_inc, 0.0))
        b_split[i] = split.std_coh * sfc + split.std_inc * sfi
        b_full[i] = split.std * math.sqrt(max(ops.fisher, 0.0))
        full_integrand[i] = 0.5 * math.sqrt(max(ops.fisher, 0.0))
        if split.std > 1e-6:
            integrand[i] = 0.5 * b_split[i] / split.std
        else:
            # fid at 0 or 1 makes the normalized form 0/0; the loose integrand
            # keeps both integrated inequalities valid
            integrand[i] = full_integrand[i]
            patched += 1
        corr = support_correction(pt, rho0, tol)
        if abs(dfid[i]) > b_split[i] + corr + 1e-9 * (1 + b_split[i]):
            raise BoundViolationError(
                f"fidelity rate exceeds the split bound at t={pt.t!r}")
        if b_split[i] > b_full[i] + 1e-9 * (1 + b_full[i]):
            raise BoundViolationError(
                f"split bound exceeds the full bound at t={pt.t!r}")
    angle_end = math.acos(min(math.sqrt(fid[-1]), 1.0))
    mid = float(_trapz(integrand, ts))
    full = float(_trapz(full_integrand, ts))
    if angle_end > mid + _slack(mid):
        raise BoundViolationError("integrated fidelity bound (split form) violated")
    if mid > full + _slack(full):
        raise BoundViolationError("split integrand exceeds sqrt(F)/2 integral")
    return FidelitySpeedReport(times=ts, fid=fid, dfid=dfid, bound_split=b_split,
                               bound_full=b_full, angle_end=angle_end,
                               intermediate_integral=mid, full_integral=full,
                               patched_instants=patched)
