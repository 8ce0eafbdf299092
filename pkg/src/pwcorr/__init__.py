"""Bohmian trajectories versus Heisenberg-picture quantum mechanics for the 1D oscillator.

Three independent routes to the two-time correlation <q(s) q(t)>:
grid quantum mechanics (split-operator evolution), a truncated Fock-basis
oracle, and ensembles of Bohmian trajectories.
"""
from .bohm import (TrajectoryEnsemble, bohm_expectation, integrate_trajectories,
                   local_expectation, phase_field, quantum_potential,
                   sample_initial_positions, velocity_field)
from .config import RunConfig, load_config
from .correlators import (CorrelationRecord, bohm_two_time_correlation,
                          complex_expectation_decomposition, contradiction_report,
                          heisenberg_local_expectation, qm_symmetrized_correlation,
                          qm_two_time_correlation)
from .evolution import evolve, evolve_eigenstate_analytic
from .fock import build_fock_operators, heisenberg_operator, oracle_two_time_correlation
from .grid import (Grid, RealField, Wavefunction, apply_operator, continuity_residual,
                   inner_product, make_grid, probability_current, probability_density)
from .oscillator import (OscillatorParams, StateSpec, build_state, eigenstate,
                         oscillator_potential)

__version__ = "0.1.0"
