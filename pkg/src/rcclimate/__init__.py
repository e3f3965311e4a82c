"""Gray-box RC state-space models of unheated buildings.

Build the thermal and hygric lumped-capacitance models, simulate them on
hourly climate data and identify their parameters from indoor measurements.
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    HygricParams,
    ParameterError,
    StateSpaceModel,
    ThermalParams,
    build_hygric_model,
    build_thermal_model,
    validate_params,
)
from .simulate import (  # noqa: E402
    DiscreteModel,
    SimulationResult,
    discretize_zoh,
    simulate,
    simulate_discrete,
    simulate_ode_reference,
)
from .expm import matrix_exponential  # noqa: E402
from .metrics import FitMetrics, goodness_of_fit, mae, mse  # noqa: E402

__all__ = [
    "DiscreteModel", "FitMetrics", "HygricParams", "ParameterError", "SimulationResult",
    "StateSpaceModel", "ThermalParams", "build_hygric_model", "build_thermal_model",
    "discretize_zoh", "goodness_of_fit", "mae", "matrix_exponential", "mse", "simulate",
    "simulate_discrete", "simulate_ode_reference", "validate_params",
]
