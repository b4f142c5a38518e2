"""Original Bell inequality toolkit.

Quantum and classical bounds for the three-correlation Bell statistic and
CHSH, exhaustive local-hidden-variable oracles, noisy-model bound
calculators, and a seeded Monte Carlo Bell-test simulator.
"""
from .core import (
    CorrelationTriple,
    DeterministicStrategy,
    HiddenVariableModel,
    MeasurementSetting,
    NoiseParameters,
    SettingTriple,
    TrialRecord,
    make_setting,
    validate_model,
)
from .bounds import (
    BoundReport,
    chsh_bounds,
    feasibility_grid,
    ob_bounds,
    theorem2_bound,
    theorem3_bound,
    theorem4_bound,
    violation_feasible,
    white_noise_quantum_value,
)
from .quantum import (
    ObAngles,
    chsh_statistic,
    delta_q,
    delta_q_parametrized,
    maximize_chsh,
    maximize_delta_q,
    ob_statistic,
    sample_singlet_outcomes,
    singlet_correlation,
)
from .lhv import (
    classical_ob_maximum,
    detection_ob_maximum,
    enumerate_strategies,
    epsilon_ob_maximum,
    lhv_conditional_correlation,
    lhv_correlation,
    make_detection_model,
    make_epsilon_model,
)
from .experiment import ExperimentResult, ExperimentSpec, run_experiment, sweep

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
