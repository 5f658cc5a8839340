"""qsirs: coupled quasispecies / two-strain SIRS simulation and analysis."""
from .model import (CouplingSnapshot, FullState, MacroState, MicroState,
                    ModelParams, NumericError, ValidationError,
                    coupling_snapshot, critical_mutation, effective_fitness,
                    prevalence, rhs_array, rhs_full, rhs_reduced_limit,
                    snapshot_of, transmission_rates)
from .integrate import (ConservationError, EndpointClass, EventKind,
                        IntegrationOptions, StiffnessError, Trajectory,
                        TrajectoryEvent, detect_endpoint, integrate)
from .equilibria import (Condition, CseFamily, EquilibriumPoint, Infeasible,
                         InfeasibleError, cse_continuation, cse_solve,
                         dfe_points, limit_equilibria, micro_equilibrium,
                         nme_feasibility_bound, nme_point, nmut_cases)
from .reproduction import ReproductionReport, ngm_spectral_radius, r0, rt_report
from .stability import (Spectrum, eigenvalues, jacobian_fd, quasi_period,
                        spectrum_at)
from .sweep import (Scenario, SweepAxis, principal_initial_state,
                    run_scenario, scenario, sweep)

__version__ = "0.1.0"

__all__ = [
    "Condition", "ConservationError", "CouplingSnapshot", "CseFamily",
    "EndpointClass", "EquilibriumPoint", "EventKind", "FullState",
    "Infeasible", "InfeasibleError", "IntegrationOptions", "MacroState",
    "MicroState", "ModelParams", "NumericError", "ReproductionReport",
    "Scenario", "Spectrum", "StiffnessError", "SweepAxis", "Trajectory",
    "TrajectoryEvent", "ValidationError", "__version__",
    "coupling_snapshot", "critical_mutation", "cse_continuation",
    "cse_solve", "detect_endpoint", "dfe_points", "effective_fitness",
    "eigenvalues", "integrate", "jacobian_fd", "limit_equilibria",
    "micro_equilibrium", "ngm_spectral_radius", "nme_feasibility_bound",
    "nme_point", "nmut_cases", "prevalence", "principal_initial_state",
    "quasi_period", "r0", "rhs_array", "rhs_full", "rhs_reduced_limit",
    "rt_report", "run_scenario", "scenario", "snapshot_of", "spectrum_at",
    "sweep", "transmission_rates",
]
