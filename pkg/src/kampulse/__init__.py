"""Superconvergent KAM propagators for pulse-driven quantum systems.

Fast exact-resummation path for two-level systems driven by a pulse with
bounded support, a general d x d engine for the same iteration, a
reference Schrodinger integrator, and CSV sweep drivers.
"""

from .su2 import (
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    PauliVector,
    StateVector2,
    Unitary2,
    cross_commutator,
    exp_traceless,
    pauli_to_matrix,
    r_norm,
    rotate_z,
)
from .pulses import PulseShape, area_at, load_pulse, sine_squared, tabulated
from .ode import (
    IntegrationError,
    StepUnderflowError,
    Trajectory,
    UnitarityBudgetError,
    UnitaryPropagation,
    integrate,
    propagate_unitary,
)
from .twolevel import (
    KamConfig,
    KamHierarchy,
    build_hierarchy,
    eps_power,
    kam_T,
    next_level,
    propagator_interaction,
    propagator_lab,
    v1_at,
    xi_gamma,
)
from .general import (
    EigenSystem,
    PulsedKamLevels,
    QuadratureError,
    as_hermitian,
    autonomous_average,
    hatv_general,
    pulsed_propagator_general,
    pulsed_s1_and_he1,
    pulsed_vbar,
    remainder_truncated,
    unitary_exp,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    SweepRecord,
    delta_n,
    drift_violations,
    format_csv,
    kam_state,
    reference_state,
    sweep_area,
    sweep_epsilon,
    sweep_iterations,
    write_csv,
)

__version__ = "0.1.0"
