"""Single record holding every numerical tolerance used by the package.

All tolerances are absolute on trace-one states (observables are whatever
scale the caller picks; chain inequalities carry their own relative slack).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class ToleranceSet:
    hermitian: float = 1e-12       # max-abs deviation from the conjugate transpose
    trace: float = 1e-10           # |tr(rho) - 1|
    psd: float = 1e-10             # eigenvalues of a state may dip to -psd
    rank: float = 1e-10            # p_j below this counts as unsupported
    gap: float = 1e-8              # |p_j - p_k| below this is a degenerate pair
    unitary: float = 1e-10         # frame basis orthonormality
    reconstruction: float = 1e-9   # frame must rebuild its state to this
    derivative_trace: float = 1e-11
    evolve_psd: float = 1e-6       # integrator aborts below -evolve_psd
    route_agreement: float = 1e-6  # trace vs covariance speed routes
    zero_rate: float = 1e-14       # below this a timescale is infinite
    support_flow: float = 1e-9     # |pdot| on an unsupported level that matters
    element: float = 1e-12         # matrix elements below this count as zero

    def scaled(self, factor: float) -> "ToleranceSet":
        """Uniformly rescale every tolerance (CLI --tol-scale)."""
        return ToleranceSet(
            **{f.name: getattr(self, f.name) * factor for f in dataclasses.fields(self)}
        )


DEFAULT_TOL = ToleranceSet()
