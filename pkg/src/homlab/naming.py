"""Element-name rendering for derived structures.

Every derived element is a string.  Components that contain a separator
character are wrapped in parentheses so that composite names stay unique.
"""

from __future__ import annotations

from collections.abc import Iterable

SPECIAL = set("()[]{},;|*.@:#<>/ ")


def wrap(part: str) -> str:
    if part == "" or any(ch in SPECIAL for ch in part):
        return f"({part})"
    return part


def join(parts: Iterable[str], sep: str) -> str:
    return sep.join(wrap(p) for p in parts)


def tagged(tag: str, name: str) -> str:
    """Render a disjoint-union element such as ``1.x``."""
    return f"{tag}.{wrap(name)}"


def product_name(x: str, y: str) -> str:
    return f"{wrap(x)}*{wrap(y)}"


def tuple_name(items: Iterable[str]) -> str:
    return "<" + join(items, ",") + ">"


def set_name(items: Iterable[str]) -> str:
    return "{" + join(sorted(items), ",") + "}"


def color(name: str) -> str:
    """Symbol name of the singleton colour attached to element ``name``."""
    return f"C_{name}"
