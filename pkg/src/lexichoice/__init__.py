"""Lexicographic composition of choice functions and property verification."""
from .core import (
    INF,
    TOP,
    Capacity,
    ChoiceFunction,
    Composed,
    Empty,
    EquivalencePartition,
    ExclusionFunction,
    GroundSet,
    Identity,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
    UnderlineEquiv,
    UnionOfOrders,
    decompose,
)
from .compose import fold_left, fold_right, lex_compose
from .props import Condition, Property, check_choice, classify_tlcr, verify_preservation

__all__ = [
    "INF",
    "TOP",
    "Capacity",
    "ChoiceFunction",
    "Composed",
    "Empty",
    "EquivalencePartition",
    "ExclusionFunction",
    "GroundSet",
    "Identity",
    "ItemSet",
    "LinearOrder",
    "Mto1Responsive",
    "Responsive",
    "TableChoice",
    "TableExclusion",
    "Tlcr",
    "TlcrParams",
    "UnderlineEquiv",
    "UnionOfOrders",
    "decompose",
    "fold_left",
    "fold_right",
    "lex_compose",
    "Condition",
    "Property",
    "check_choice",
    "classify_tlcr",
    "verify_preservation",
]

__version__ = "0.1.0"
