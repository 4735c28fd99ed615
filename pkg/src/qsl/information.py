"""Symmetric logarithmic derivative, its coherent/incoherent speed operators,
the matching Fisher informations, support-change corrections, and the
fixed-POVM classical Fisher information.

Unsupported eigenvalues (p below the rank threshold) are excluded from every
sum; the error this introduces when the support actually changes is surfaced
as a separate additive correction rather than folded into the operators.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import TrajectoryPoint
from .errors import ContractError, SingularOutcomeError, SupportWarning
from .operators import HermitianOperator, MatrixLike, as_matrix
from .tolerances import DEFAULT_TOL, ToleranceSet


@dataclass(frozen=True)
class SpeedOperators:
    """SLD and its split, with the Fisher informations they generate.

    ``fisher`` is the variance of the full SLD (computed independently of the
    split), so fisher ~ fisher_coh + fisher_inc is a real consistency check.
    """

    sld: HermitianOperator
    sld_coh: HermitianOperator
    sld_inc: HermitianOperator
    fisher: float
    fisher_coh: float
    fisher_inc: float


def _sld_frame(point: TrajectoryPoint, tol: ToleranceSet) -> np.ndarray:
    """Frame-basis SLD elements 2 <j|drho|k> / (p_j + p_k) on supported pairs."""
    p = point.frame.probabilities
    d_f = point.frame.to_frame(point.drho)
    psum = p[:, None] + p[None, :]
    mask = psum > tol.rank
    l_f = np.zeros_like(d_f)
    l_f[mask] = 2.0 * d_f[mask] / psum[mask]
    if np.max(np.abs(d_f)) > tol.element and np.max(np.abs(d_f[mask]), initial=0.0) <= tol.element:
        warnings.warn("derivative weight lies entirely on unsupported pairs; "
                      "returning a zero SLD", SupportWarning)
    return l_f


def sld(point: TrajectoryPoint, tol: ToleranceSet = DEFAULT_TOL) -> HermitianOperator:
    """Symmetric logarithmic derivative: {L, rho}/2 = d(rho)/dt on the support."""
    l_f = _sld_frame(point, tol)
    return HermitianOperator(point.frame.from_frame(l_f))


def speed_operators(point: TrajectoryPoint, tol: ToleranceSet = DEFAULT_TOL) -> SpeedOperators:
    """Split the SLD into coherent (off-diagonal) and incoherent (diagonal) parts."""
    frame = point.frame
    p = frame.probabilities
    supported = frame.supported
    pdot = point.pdot

    bad = (~supported) & (np.abs(pdot) > tol.support_flow)
    if np.any(bad):
        flow = float(np.sum(np.abs(pdot[bad])))
        w = SupportWarning(
            f"probability flows through {int(bad.sum())} unsupported level(s); "
            f"speed bounds need an additive correction of up to {flow:.3e} "
            f"times the observable's diagonal")
        w.unsupported_flow = flow
        warnings.warn(w)

    c_f = frame.to_frame(point.coh)
    psum = p[:, None] + p[None, :]
    pair_ok = psum > tol.rank
    np.fill_diagonal(pair_ok, False)
    l_coh_f = np.zeros_like(c_f)
    l_coh_f[pair_ok] = 2.0 * c_f[pair_ok] / psum[pair_ok]

    l_inc_diag = np.zeros(frame.dim)
    l_inc_diag[supported] = pdot[supported] / p[supported]

    fisher_inc = float(np.sum(pdot[supported] ** 2 / p[supported]))
    fisher_coh = float(np.sum(p[:, None] * np.abs(l_coh_f) ** 2))

    l_f = l_coh_f + np.diag(l_inc_diag.astype(complex))
    mean = float(np.sum(p * np.real(np.diagonal(l_f))))
    fisher = float(np.sum(p[:, None] * np.abs(l_f) ** 2) - mean * mean)

    return SpeedOperators(
        sld=HermitianOperator(frame.from_frame(l_f)),
        sld_coh=HermitianOperator(frame.from_frame(l_coh_f)),
        sld_inc=HermitianOperator(frame.from_frame(np.diag(l_inc_diag.astype(complex)))),
        fisher=fisher,
        fisher_coh=fisher_coh,
        fisher_inc=fisher_inc,
    )


def support_correction(point: TrajectoryPoint, observable: MatrixLike,
                       tol: ToleranceSet = DEFAULT_TOL) -> float:
    """Additive bound correction |sum_{p_j < rank_tol} pdot_j <j|A|j>|.

    Zero whenever the support is constant; nonzero only at instants where an
    unsupported level carries probability flow.
    """
    frame = point.frame
    unsupported = ~frame.supported
    if not np.any(unsupported):
        return 0.0
    a_f = frame.to_frame(observable)
    diag = np.real(np.diagonal(a_f))
    return float(abs(np.sum(point.pdot[unsupported] * diag[unsupported])))


def classical_fisher_povm(point: TrajectoryPoint, povm: Sequence[MatrixLike],
                          tol: ToleranceSet = DEFAULT_TOL) -> float:
    """Classical Fisher information of the outcome distribution of a fixed POVM."""
    dim = point.dim
    elements = [as_matrix(e) for e in povm]
    total = sum(elements)
    if float(np.max(np.abs(total - np.eye(dim)))) > 1e-9:
        raise ContractError("POVM elements do not sum to the identity")
    for e in elements:
        if float(np.min(np.linalg.eigvalsh((e + e.conj().T) / 2))) < -tol.psd:
            raise ContractError("POVM element is not positive semidefinite")
    rho = point.rho.matrix
    drho = point.drho.matrix
    out = 0.0
    for e in elements:
        q = float(np.trace(rho @ e).real)
        qdot = float(np.trace(drho @ e).real)
        if q < tol.rank:
            if abs(qdot) >= tol.support_flow:
                raise SingularOutcomeError(
                    f"outcome has probability {q:.3e} but current {qdot:.3e}")
            continue
        out += qdot * qdot / q
    return out
