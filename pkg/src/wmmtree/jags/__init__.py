from .generate import (
    ROOT_PRIORS,
    JagsModelText,
    generate_model,
    member_ref,
    sibling_tuple_name,
)
from .parser import ParseSummary, parse_generated_model

__all__ = [
    "ROOT_PRIORS",
    "JagsModelText",
    "ParseSummary",
    "generate_model",
    "member_ref",
    "parse_generated_model",
    "sibling_tuple_name",
]
