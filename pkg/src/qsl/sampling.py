"""Deterministic random instances for sweeps and property tests.

States draw Dirichlet(1,...,1) eigenvalues with a floor of 10x the rank
threshold so sweeps stay in the constant-support regime the bound chain
assumes; support-boundary behavior is exercised by the erasure scenario only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Generator, TrajectoryPoint, make_point
from .operators import DensityMatrix, HermitianOperator
from .tolerances import DEFAULT_TOL, ToleranceSet


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_probabilities(rng: np.random.Generator, dim: int,
                         floor: float = 10 * DEFAULT_TOL.rank) -> np.ndarray:
    p = rng.dirichlet(np.ones(dim))
    p = np.maximum(p, floor)
    return p / p.sum()


def random_density(rng: np.random.Generator, dim: int,
                   floor: float = 10 * DEFAULT_TOL.rank) -> DensityMatrix:
    p = random_probabilities(rng, dim, floor)
    u = random_unitary(rng, dim)
    return DensityMatrix((u * p) @ u.conj().T)


def random_pure(rng: np.random.Generator, dim: int) -> DensityMatrix:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityMatrix.pure(v)


def random_hermitian(rng: np.random.Generator, dim: int,
                     scale: float = 1.0) -> HermitianOperator:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(scale * (g + g.conj().T) / 2)


def random_generator(rng: np.random.Generator, dim: int, n_channels: int = 2,
                     rate_scale: float = 1.0) -> Generator:
    h = random_hermitian(rng, dim)
    channels = []
    for _ in range(n_channels):
        g = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(dim)
        channels.append((rate_scale * float(abs(rng.normal())), g))
    return Generator(h, channels)


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> list[np.ndarray]:
    """Random POVM: Wishart blocks whitened so they sum to the identity."""
    raw = []
    for _ in range(outcomes):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(g @ g.conj().T)
    total = sum(raw)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return [inv_sqrt @ e @ inv_sqrt for e in raw]


@dataclass(frozen=True)
class RandomInstance:
    point: TrajectoryPoint
    generator: Generator
    observable: HermitianOperator


def random_instance(rng: np.random.Generator, dim: int, unitary_only: bool = False,
                    pure_state: bool = False,
                    tol: ToleranceSet = DEFAULT_TOL) -> RandomInstance:
    """Random full-rank (or pure) state, generator, and observable at one instant."""
    rho = random_pure(rng, dim) if pure_state else random_density(rng, dim)
    gen = (Generator(random_hermitian(rng, dim), ())
           if unitary_only else random_generator(rng, dim))
    point = make_point(0.0, rho, gen, tol=tol)
    return RandomInstance(point=point, generator=gen,
                          observable=random_hermitian(rng, dim))
