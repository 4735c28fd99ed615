"""Speed limits on observables of open quantum systems.

Evolves density matrices under Lindblad generators, splits dynamics and
observables into coherent and incoherent parts relative to the instantaneous
eigenframe, evaluates the per-instant and integrated speed limits, and
synthesizes the Hamiltonian that drives an observable at its coherent limit.
"""

from .bounds import (EnergyVarianceReport, EntropyReport, HeatFluxReport,
                     ObservableSplit, SpeedOperatorBasis, SpeedReport,
                     energy_variance_check, entropy_rate_bound,
                     heat_flux_bound, observable_speeds, speed_operator_basis,
                     speed_report, split_observable)
from .control import ErasureResult, SpeedupPolicy, erasure_scenario, speedup_hamiltonian
from .dynamics import (Generator, Trajectory, TrajectoryPoint,
                       effective_hamiltonian, evolve, lindblad_derivative,
                       make_point, split_derivative)
from .errors import (BoundViolationError, ContractError, DegenerateDriveError,
                     IntegrationDivergedError, InternalConsistencyError,
                     InvalidStateError, SingularOutcomeError, SupportWarning,
                     UnattainableSaturationError)
from .geometry import (FidelitySpeedReport, IntegratedReport, MetricConvergence,
                       bures_angle, bures_distance, fidelity,
                       fidelity_speed_check, integrated_report,
                       metric_consistency)
from .information import (SpeedOperators, classical_fisher_povm, sld,
                          speed_operators, support_correction)
from .operators import (PAULIS, SIGMA_X, SIGMA_Y, SIGMA_Z, DensityMatrix,
                        HermitianOperator, SpectralFrame, operator_norm,
                        partial_trace, spectral_decompose, std_dev,
                        sym_covariance, variance)
from .scenario import ScenarioConfig
from .tolerances import DEFAULT_TOL, ToleranceSet

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
