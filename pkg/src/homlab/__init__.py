"""Executable homomorphism, deconstruction, and pebble-game toolkit for finite structures."""

from __future__ import annotations

from .errors import BudgetExceeded, GuardExceeded, HomlabError, PreconditionError, VocabularyMismatch
from .relstruct import Structure, core, find_hom, is_core, star_expand

__all__ = [
    "BudgetExceeded",
    "GuardExceeded",
    "HomlabError",
    "PreconditionError",
    "Structure",
    "VocabularyMismatch",
    "core",
    "find_hom",
    "is_core",
    "star_expand",
]

__version__ = "0.1.0"
