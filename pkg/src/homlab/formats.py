"""Reading and writing the on-disk formats.

* structures: the canonical JSON document of :class:`Structure`
* graphs: either that JSON, or text with one ``u v`` edge per line and
  isolated vertices on lines of their own (``#`` starts a comment)
* roots files: ``root u`` lines
* deconstructions, class facts, interpretations: JSON documents
* formulas: s-expressions
"""

from __future__ import annotations

import json
from pathlib import Path

from .decon import ClassFacts, Deconstruction
from .errors import PreconditionError
from .graphs import RootedForest, make_graph, require_graph
from .logic import Formula, Interpretation, parse
from .relstruct import Structure


def _read(path: str | Path) -> str:
    return Path(path).read_text()


def _json(path: str | Path):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def load_structure(path: str | Path) -> Structure:
    return Structure.from_dict(_json(path))


def parse_graph_text(text: str) -> Structure:
    vertices: list[str] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) == 1:
            vertices.append(line[0])
        elif len(line) == 2:
            vertices.extend(line)
            edges.append((line[0], line[1]))
        else:
            raise PreconditionError(f"line {lineno}: expected 'u v' or a single vertex")
    if not vertices:
        raise PreconditionError("graph text lists no vertices")
    return make_graph(vertices, edges)


def graph_text(g: Structure) -> str:
    require_graph(g)
    lines = []
    touched = set()
    for u, v in sorted(g.rel("E")):
        if u < v:
            lines.append(f"{u} {v}")
            touched.update((u, v))
    lines.extend(x for x in g.universe if x not in touched)
    return "\n".join(lines) + "\n"


def load_graph(path: str | Path) -> Structure:
    text = _read(path)
    if text.lstrip().startswith("{"):
        g = load_structure(path)
        require_graph(g)
        return g
    return parse_graph_text(text)


def parse_roots(text: str) -> list[str]:
    roots = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) != 2 or parts[0] != "root":
            raise PreconditionError(f"line {lineno}: expected 'root u'")
        roots.append(parts[1])
    return roots


def load_forest(graph_path: str | Path, roots_path: str | Path) -> RootedForest:
    return RootedForest(load_graph(graph_path), tuple(parse_roots(_read(roots_path))))


def roots_text(f: RootedForest) -> str:
    return "".join(f"root {r}\n" for r in f.roots)


def load_deconstruction(path: str | Path) -> Deconstruction:
    return Deconstruction.from_dict(_json(path))


def load_facts(path: str | Path) -> ClassFacts:
    data = _json(path)
    if not isinstance(data, dict):
        raise PreconditionError("facts file must hold a JSON object")
    return ClassFacts.from_dict(data)


def load_interpretation(path: str | Path) -> Interpretation:
    return Interpretation.from_dict(_json(path))


def load_formula(text_or_path: str) -> Formula:
    """Parse an inline s-expression, or the contents of a file when given a path."""
    if text_or_path.lstrip().startswith("("):
        return parse(text_or_path)
    return parse(_read(text_or_path))


def dumps(data) -> str:
    return json.dumps(data, indent=None, separators=(", ", ": "))
