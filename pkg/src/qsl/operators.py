"""Dense Hermitian algebra: validated operators and density matrices,
symmetrized covariance, partial trace, and a continuity-tracked
eigendecomposition that defines the coherent/incoherent split downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ContractError, InvalidStateError
from .tolerances import DEFAULT_TOL, ToleranceSet

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"sx": SIGMA_X, "sy": SIGMA_Y, "sz": SIGMA_Z}

MatrixLike = Union[np.ndarray, "HermitianOperator"]


def as_matrix(op: MatrixLike) -> np.ndarray:
    """Unwrap to a plain complex ndarray."""
    if isinstance(op, HermitianOperator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


class HermitianOperator:
    """A dim x dim complex matrix checked Hermitian at construction.

    The stored matrix is symmetrized and read-only; instances are safe to
    share across workers.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: MatrixLike, tol: ToleranceSet = DEFAULT_TOL):
        m = as_matrix(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractError(f"expected a square matrix, got shape {m.shape}")
        dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if dev > tol.hermitian:
            raise ContractError(f"matrix is not Hermitian: max deviation {dev:.3e}")
        self.matrix = _frozen((m + m.conj().T) / 2)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, rho: MatrixLike) -> float:
        return float(np.trace(as_matrix(rho) @ self.matrix).real)

    def __add__(self, other: MatrixLike) -> "HermitianOperator":
        return HermitianOperator(self.matrix + as_matrix(other))

    def __sub__(self, other: MatrixLike) -> "HermitianOperator":
        return HermitianOperator(self.matrix - as_matrix(other))

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "HermitianOperator":
        return HermitianOperator(-self.matrix)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianOperator):
    """Hermitian operator with unit trace and nonnegative spectrum."""

    __slots__ = ()

    def __init__(self, matrix: MatrixLike, tol: ToleranceSet = DEFAULT_TOL):
        super().__init__(matrix, tol)
        tr = float(np.trace(self.matrix).real)
        if abs(tr - 1.0) > tol.trace:
            raise InvalidStateError(f"trace is {tr!r}, not 1")
        w = np.linalg.eigvalsh(self.matrix)
        if w[0] < -tol.psd:
            raise InvalidStateError(f"negative eigenvalue {w[0]:.3e}")

    @classmethod
    def pure(cls, vec, tol: ToleranceSet = DEFAULT_TOL) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), tol)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float,
                   tol: ToleranceSet = DEFAULT_TOL) -> "DensityMatrix":
        m = 0.5 * (np.eye(2, dtype=complex) + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)
        return cls(m, tol)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def bloch(self) -> tuple[float, float, float]:
        if self.dim != 2:
            raise ContractError("Bloch coordinates need a qubit state")
        return tuple(float(np.trace(self.matrix @ s).real) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


@dataclass(frozen=True)
class SpectralFrame:
    """Eigendecomposition of a state: probabilities and a unitary of columns.

    Column order and phases follow the continuity convention applied by
    :func:`spectral_decompose`; ``continuity_lost`` marks frames whose greedy
    matching against the previous frame found only weak overlaps.
    """

    probabilities: np.ndarray
    basis: np.ndarray
    rank_tol: float = DEFAULT_TOL.rank
    continuity_lost: bool = False

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        u = np.asarray(self.basis, dtype=complex)
        object.__setattr__(self, "probabilities", _frozen(p.copy()))
        object.__setattr__(self, "basis", _frozen(u.copy()))
        if abs(p.sum() - 1.0) > DEFAULT_TOL.trace:
            raise InvalidStateError(f"probabilities sum to {p.sum()!r}")
        if p.min() < -DEFAULT_TOL.psd:
            raise InvalidStateError(f"negative probability {p.min():.3e}")
        dev = float(np.max(np.abs(u.conj().T @ u - np.eye(len(p)))))
        if dev > DEFAULT_TOL.unitary:
            raise ContractError(f"basis is not unitary: deviation {dev:.3e}")

    @property
    def dim(self) -> int:
        return len(self.probabilities)

    @property
    def supported(self) -> np.ndarray:
        return self.probabilities > self.rank_tol

    def to_frame(self, op: MatrixLike) -> np.ndarray:
        """Matrix elements <j|op|k> in the eigenbasis."""
        m = as_matrix(op)
        return self.basis.conj().T @ m @ self.basis

    def from_frame(self, m: np.ndarray) -> np.ndarray:
        return self.basis @ m @ self.basis.conj().T

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.probabilities) @ self.basis.conj().T


def _greedy_assignment(overlaps: np.ndarray) -> np.ndarray:
    """perm[i] = new column claimed by previous column i, largest overlaps first."""
    d = overlaps.shape[0]
    work = overlaps.copy()
    perm = np.full(d, -1)
    for _ in range(d):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        perm[i] = j
        work[i, :] = -1.0
        work[:, j] = -1.0
    return perm


def spectral_decompose(rho: Union[DensityMatrix, np.ndarray],
                       prev: Optional[SpectralFrame] = None,
                       tol: ToleranceSet = DEFAULT_TOL) -> SpectralFrame:
    """Eigendecompose a state, keeping labels and phases continuous with ``prev``.

    Without ``prev``, eigenpairs are ordered by descending probability (index
    tie-break). With ``prev``, columns are permuted by greedy maximum-overlap
    assignment and rephased so every <j_prev|j_now> is real and nonnegative.
    """
    m = as_matrix(rho)
    if prev is not None and prev.dim != m.shape[0]:
        raise ContractError("previous frame has a different dimension")
    w, v = np.linalg.eigh(m)
    if w[0] < -tol.psd:
        raise InvalidStateError(f"negative eigenvalue {w[0]:.3e}")
    lost = False
    if prev is None:
        order = np.argsort(-w, kind="stable")
        w, v = w[order], v[:, order]
    else:
        inner = prev.basis.conj().T @ v
        perm = _greedy_assignment(np.abs(inner))
        w, v = w[perm], v[:, perm].copy()
        matched = inner[np.arange(len(w)), perm]
        mags = np.abs(matched)
        lost = bool(np.all(mags < 0.5))
        phases = np.where(mags > tol.element, matched / np.where(mags > 0, mags, 1.0), 1.0)
        v = v * phases.conj()
    frame = SpectralFrame(np.real(w), v, rank_tol=tol.rank, continuity_lost=lost)
    resid = float(np.max(np.abs(frame.reconstruct() - m)))
    if resid > tol.reconstruction:
        raise InvalidStateError(f"frame does not rebuild the state: residual {resid:.3e}")
    return frame


def sym_covariance(rho: MatrixLike, a: MatrixLike, b: MatrixLike) -> float:
    """Symmetrized covariance tr(rho {A,B})/2 - tr(rho A) tr(rho B)."""
    r, am, bm = as_matrix(rho), as_matrix(a), as_matrix(b)
    if not (r.shape == am.shape == bm.shape):
        raise ContractError(
            f"dimension mismatch: {r.shape}, {am.shape}, {bm.shape}")
    mixed = 0.5 * float(np.trace(r @ (am @ bm + bm @ am)).real)
    return mixed - float(np.trace(r @ am).real) * float(np.trace(r @ bm).real)


def variance(rho: MatrixLike, a: MatrixLike) -> float:
    return sym_covariance(rho, a, a)


def std_dev(rho: MatrixLike, a: MatrixLike) -> float:
    return float(np.sqrt(max(variance(rho, a), 0.0)))


def _partial_trace_matrix(joint: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    d_s, d_e = dims
    if joint.shape[0] != d_s * d_e:
        raise ContractError(
            f"joint dimension {joint.shape[0]} is not {d_s}*{d_e}")
    t = joint.reshape(d_s, d_e, d_s, d_e)
    if keep in ("S", "s", 0):
        return np.einsum("iaja->ij", t)
    if keep in ("E", "e", 1):
        return np.einsum("iaib->ab", t)
    raise ContractError(f"keep must be 'S' or 'E', got {keep!r}")


def partial_trace(joint: Union[DensityMatrix, np.ndarray], dims: tuple[int, int],
                  keep: str = "S", tol: ToleranceSet = DEFAULT_TOL) -> DensityMatrix:
    """Reduced state on the kept tensor factor of a bipartite state."""
    return DensityMatrix(_partial_trace_matrix(as_matrix(joint), dims, keep), tol)


def operator_norm(a: MatrixLike) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))
