"""Two-level quantum kicked rotor on a finite momentum lattice.

The core objects are :class:`ModelParams`, :class:`SpinorState` and
:func:`evolve`; exact resonant solutions live in :mod:`qkr2l.closed_form`.
"""

__version__ = "0.1.0"

from .bessel import BesselEvaluator, bessel_j, bessel_row, turning_order
from .closed_form import (
    ResonantSolution,
    analytic_moments,
    antiresonant_state,
    closed_form_occupations,
    localized_resonant_state,
    resonant_state,
)
from .entanglement import ReducedDensityMatrix, entanglement_entropy, reduced_density
from .errors import (
    BesselRangeError,
    ConfigurationError,
    DimensionError,
    InvalidParameterError,
    NumericIntegrityError,
    QKRError,
    ResonanceConditionError,
)
from .evolution import Backend, StepOperator, Trajectory, evolve, propagate
from .lattice import BlochInit, ModelParams, SpinorState, bloch_state, make_params, moments

__all__ = [
    "Backend",
    "BesselEvaluator",
    "BesselRangeError",
    "BlochInit",
    "ConfigurationError",
    "DimensionError",
    "InvalidParameterError",
    "ModelParams",
    "NumericIntegrityError",
    "QKRError",
    "ReducedDensityMatrix",
    "ResonanceConditionError",
    "ResonantSolution",
    "SpinorState",
    "StepOperator",
    "Trajectory",
    "analytic_moments",
    "antiresonant_state",
    "bessel_j",
    "bessel_row",
    "bloch_state",
    "closed_form_occupations",
    "entanglement_entropy",
    "evolve",
    "localized_resonant_state",
    "make_params",
    "moments",
    "propagate",
    "reduced_density",
    "resonant_state",
    "turning_order",
]
