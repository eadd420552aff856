"""Clopen-set laboratory: comparison, equidecomposition, invariant states,
type monoids and unit systems for group actions on Cantor-type spaces."""

__version__ = "0.1.0"

from .actions import (FiniteAction, FullShift, GroupWord, Odometer, Product, SpecError,  # noqa: E402
                      Subshift, load_action, loads_action, odometer)
from .clopen import parse_clopen, parse_type, to_text  # noqa: E402
from .equidecomp import (SearchBudget, equidecompose, subequidecompose, type_leq,  # noqa: E402
                         verify_witness)
from .space_model import apply_word, equivalent, evaluate, is_empty  # noqa: E402
from .states_lp import comparison_gap, paradox_search  # noqa: E402

__all__ = [
    "__version__", "FiniteAction", "FullShift", "GroupWord", "Odometer", "Product", "SpecError",
    "Subshift", "load_action", "loads_action", "odometer", "parse_clopen", "parse_type", "to_text",
    "SearchBudget", "equidecompose", "subequidecompose", "type_leq", "verify_witness",
    "apply_word", "equivalent", "evaluate", "is_empty", "comparison_gap", "paradox_search",
]
