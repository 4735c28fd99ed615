"""Time-dependent Lindblad generators, fixed-step evolution of density
matrices, and the split of d(rho)/dt into coherent (frame off-diagonal) and
incoherent (eigenvalue flow) parts.

Derivatives always come from the generator, never from finite differences of
the trajectory: differentiating eigenvalues numerically is ill-conditioned
near support boundaries.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ContractError, DegenerateDriveError, IntegrationDivergedError
from .operators import (DensityMatrix, HermitianOperator, MatrixLike,
                        SpectralFrame, as_matrix, spectral_decompose)
from .tolerances import DEFAULT_TOL, ToleranceSet

HamiltonianLike = Union[MatrixLike, Callable[[float], MatrixLike], None]


class Generator:
    """Hamiltonian (possibly time dependent) plus Lindblad channels.

    ``hamiltonian`` may be a constant matrix, a callable t -> matrix, or None;
    ``channels`` is a sequence of (rate, jump-operator) pairs. Generators must
    be pure functions of t so trajectories are reproducible.
    """

    __slots__ = ("_h", "channels", "dim", "time_dependent")

    def __init__(self, hamiltonian: HamiltonianLike,
                 channels: Sequence[tuple[float, MatrixLike]] = (),
                 dim: int | None = None):
        prepared = []
        for rate, op in channels:
            if rate < 0:
                raise ContractError(f"negative channel rate {rate!r}")
            g = as_matrix(op)
            prepared.append((float(rate), g, g.conj().T, g.conj().T @ g))
            dim = dim if dim is not None else g.shape[0]
        if callable(hamiltonian):
            self._h = lambda t: as_matrix(hamiltonian(t))
            self.time_dependent = True
            if dim is None:
                dim = self._h(0.0).shape[0]
        elif hamiltonian is None:
            if dim is None:
                raise ContractError("dim is required when there is no Hamiltonian")
            zero = np.zeros((dim, dim), dtype=complex)
            self._h = lambda t: zero
            self.time_dependent = False
        else:
            h0 = as_matrix(hamiltonian)
            self._h = lambda t: h0
            self.time_dependent = False
            if dim is None:
                dim = h0.shape[0]
        self.channels = tuple(prepared)
        self.dim = dim
        for _, g, _, _ in self.channels:
            if g.shape[0] != dim:
                raise ContractError("channel dimension mismatch")
        if self._h(0.0).shape[0] != dim:
            raise ContractError("Hamiltonian dimension mismatch")

    def hamiltonian(self, t: float) -> np.ndarray:
        return self._h(t)

    def derivative(self, rho: np.ndarray, t: float) -> np.ndarray:
        """-i[H(t), rho] + sum_a gamma_a (G rho G+ - {G+G, rho}/2), unsymmetrized."""
        h = self._h(t)
        out = -1j * (h @ rho - rho @ h)
        for rate, g, gd, gdg in self.channels:
            out = out + rate * (g @ rho @ gd - 0.5 * (gdg @ rho + rho @ gdg))
        return out


def lindblad_derivative(rho: MatrixLike, gen: Generator, t: float = 0.0) -> HermitianOperator:
    """Analytic d(rho)/dt under the generator; Hermitian and traceless."""
    m = as_matrix(rho)
    if m.shape[0] != gen.dim:
        raise ContractError("state dimension does not match the generator")
    d = gen.derivative(m, t)
    return HermitianOperator((d + d.conj().T) / 2)


@dataclass(frozen=True)
class TrajectoryPoint:
    """State, eigenframe, analytic derivative, and its split at one instant."""

    t: float
    rho: DensityMatrix
    frame: SpectralFrame
    drho: HermitianOperator
    coh: HermitianOperator
    inc: HermitianOperator
    pdot: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.dim


@dataclass(frozen=True)
class Trajectory:
    points: tuple[TrajectoryPoint, ...]
    dt: float

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i) -> TrajectoryPoint:
        return self.points[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([pt.t for pt in self.points])

    @property
    def dim(self) -> int:
        return self.points[0].dim


def split_derivative(drho: MatrixLike, frame: SpectralFrame
                     ) -> tuple[HermitianOperator, HermitianOperator, np.ndarray]:
    """Split d(rho)/dt into frame-off-diagonal (coh) and diagonal (inc) parts."""
    d = as_matrix(drho)
    if d.shape[0] != frame.dim:
        raise ContractError("derivative dimension does not match the frame")
    d_f = frame.to_frame(d)
    pdot = np.real(np.diagonal(d_f)).copy()
    inc = frame.from_frame(np.diag(pdot.astype(complex)))
    inc = (inc + inc.conj().T) / 2
    coh = d - inc
    return HermitianOperator(coh), HermitianOperator(inc), pdot


def make_point(t: float, rho: DensityMatrix, gen: Generator,
               prev_frame: SpectralFrame | None = None,
               tol: ToleranceSet = DEFAULT_TOL) -> TrajectoryPoint:
    """Assemble a TrajectoryPoint with analytic derivative and split."""
    frame = spectral_decompose(rho, prev=prev_frame, tol=tol)
    drho = lindblad_derivative(rho, gen, t)
    coh, inc, pdot = split_derivative(drho, frame)
    return TrajectoryPoint(t=t, rho=rho, frame=frame, drho=drho,
                           coh=coh, inc=inc, pdot=pdot)


def _rk4_step(rho: np.ndarray, gen: Generator, t: float, dt: float) -> np.ndarray:
    k1 = gen.derivative(rho, t)
    k2 = gen.derivative(rho + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = gen.derivative(rho + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = gen.derivative(rho + dt * k3, t + dt)
    out = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    out = (out + out.conj().T) / 2
    return out / np.trace(out).real


def evolve(rho0: DensityMatrix, gen: Generator, t_max: float, steps: int,
           tol: ToleranceSet = DEFAULT_TOL) -> Trajectory:
    """Fixed-step fourth-order integration on a uniform grid of ``steps`` steps.

    Every grid point carries the continuity-chained eigenframe, the analytic
    derivative, and its coherent/incoherent split. States are re-Hermitized
    and renormalized after each step; an eigenvalue below -tol.evolve_psd
    aborts with the offending step.
    """
    if steps < 2:
        raise ContractError("steps must be at least 2")
    if rho0.dim != gen.dim:
        raise ContractError("initial state does not match the generator")
    # mid-trajectory states may dip slightly negative; the hard floor is
    # evolve_psd, not the constructor default
    run_tol = dataclasses.replace(tol, psd=tol.evolve_psd)
    dt = float(t_max) / steps
    rho_m = rho0.matrix.copy()
    frame = None
    points = []
    for k in range(steps + 1):
        t = k * dt
        w = np.linalg.eigvalsh(rho_m)
        if w[0] < -tol.evolve_psd:
            raise IntegrationDivergedError(k, float(w[0]))
        rho = DensityMatrix(rho_m, run_tol)
        pt = make_point(t, rho, gen, prev_frame=frame, tol=run_tol)
        frame = pt.frame
        points.append(pt)
        if k < steps:
            rho_m = _rk4_step(rho_m, gen, t, dt)
    return Trajectory(points=tuple(points), dt=dt)


def effective_hamiltonian(coh: MatrixLike, frame: SpectralFrame,
                          gap_tol: float = DEFAULT_TOL.gap) -> HermitianOperator:
    """Recover the Hermitian generator of the coherent part, diagonal gauge zero.

    Off-diagonal elements <j|H|k> = i <j|coh|k> / (p_k - p_j) wherever the
    eigenvalue gap resolves; elements inside degenerate blocks are zeroed and
    must carry no drive, otherwise the generator is not recoverable there.
    """
    c_f = frame.to_frame(coh)
    p = frame.probabilities
    d = frame.dim
    h_f = np.zeros((d, d), dtype=complex)
    for j in range(d):
        for k in range(d):
            if j == k:
                continue
            gap = p[k] - p[j]
            if abs(gap) >= gap_tol:
                h_f[j, k] = 1j * c_f[j, k] / gap
            elif abs(c_f[j, k]) > 1e-9:
                raise DegenerateDriveError(
                    f"levels {j},{k} are degenerate (gap {gap:.3e}) but driven "
                    f"with |<j|coh|k>| = {abs(c_f[j, k]):.3e}")
    return HermitianOperator(frame.from_frame(h_f))
