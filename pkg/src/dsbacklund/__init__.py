"""Binary Backlund (Darboux) dressing for the Davey-Stewartson system."""

from .backlund import EigenEvaluator, StepParams, apply_step, build_QP, invert_step
from .errors import ConfigInvalid, DSBTError, NumericalFailure
from .fields import CompactParams, FieldGrid, GridSpec, chain_fields, compact_q
from .laxpair import SeedParams, consistent_seed, seed_eigenfunction

__all__ = [
    "EigenEvaluator", "StepParams", "apply_step", "build_QP", "invert_step",
    "ConfigInvalid", "DSBTError", "NumericalFailure",
    "CompactParams", "FieldGrid", "GridSpec", "chain_fields", "compact_q",
    "SeedParams", "consistent_seed", "seed_eigenfunction",
]
