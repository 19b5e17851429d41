"""Exception types and size guards shared by every module."""

from __future__ import annotations

import os


class HomlabError(Exception):
    """Base class for all errors raised by homlab."""


class GuardExceeded(HomlabError):
    """An exponential operation was asked to run on an input above its guard."""


class BudgetExceeded(HomlabError):
    """A search ran out of its step budget before reaching a verdict."""


class VocabularyMismatch(HomlabError, ValueError):
    pass


class PreconditionError(HomlabError, ValueError):
    pass


DEFAULT_GUARDS = {
    "core": 8,          # |A| for is_core / core
    "treedepth": 12,    # vertices for tree_depth
    "width": 12,        # vertices for treewidth / pathwidth
    "minor": 20,        # vertices of the host graph in find_minor
    "pebbles": 6,       # total pebbles in a game vector
    "setvectors": 20000,
    "ph": 200000,       # partial-hom tuples in the deconstruction reduction
    "dnf": 64,          # disjuncts produced by existential_to_dpp
    "product": 256,     # product of tree counts in dpp_to_hom
    "arity": 4,
    "iso": 400,
}


def _env_overrides() -> dict[str, int]:
    raw = os.environ.get("HOMLAB_GUARD", "").strip()
    if not raw:
        return {}
    if raw.isdigit():
        return {name: int(raw) for name in DEFAULT_GUARDS}
    out = {}
    for item in raw.split(","):
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in DEFAULT_GUARDS or not value.strip().isdigit():
            raise HomlabError(f"bad HOMLAB_GUARD entry {item!r}")
        out[name] = int(value)
    return out


def guard(name: str, override: int | None = None) -> int:
    """Resolve a guard: explicit argument, then HOMLAB_GUARD, then default."""
    if override is not None:
        return override
    return _env_overrides().get(name, DEFAULT_GUARDS[name])


def check_guard(name: str, size: int, override: int | None = None, what: str = "input") -> None:
    limit = guard(name, override)
    if size > limit:
        raise GuardExceeded(f"{what} size {size} exceeds {name} guard {limit}")
