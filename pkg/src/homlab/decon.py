"""Graph deconstructions and decompositions.

An H-deconstruction of G assigns a bag of G-vertices to every H-vertex.
Coverage asks that each edge (or vertex) of G lies in the union of two
adjacent (or equal) bags, and the bags holding any fixed vertex must form a
connected part of H.  Decomposition mode asks for each edge to sit inside a
single bag instead.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .errors import HomlabError, PreconditionError
from .graphs import (
    RootedForest,
    graph_problems,
    grid,
    height,
    is_acyclic,
    is_connected_subset,
    minor_map_problems,
    neighbors,
    property_P_nodes,
    refl_pairs,
    require_graph,
)
from .relstruct import Structure, component_sets

MODES = ("deconstruction", "decomposition")


@dataclass(frozen=True)
class Deconstruction:
    subject: Structure
    host: Structure
    bags: Mapping[str, frozenset]
    mode: str = "deconstruction"
    roots: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise PreconditionError(f"unknown mode {self.mode!r}")
        object.__setattr__(
            self, "bags", {h: frozenset(self.bags[h]) for h in sorted(self.bags)}
        )
        if self.roots is not None:
            object.__setattr__(self, "roots", tuple(sorted(self.roots)))

    def bag(self, h: str) -> frozenset:
        return self.bags.get(h, frozenset())

    def occurrences(self) -> dict[str, set[str]]:
        occ: dict[str, set[str]] = {g: set() for g in self.subject.universe}
        for h, b in self.bags.items():
            for g in b:
                if g in occ:
                    occ[g].add(h)
        return occ

    def rooted_host(self) -> RootedForest:
        if self.roots is None:
            raise PreconditionError("host is not rooted")
        return RootedForest(self.host, self.roots)

    def with_mode(self, mode: str) -> Deconstruction:
        return Deconstruction(self.subject, self.host, self.bags, mode, self.roots)

    def to_dict(self) -> dict:
        out = {
            "subject": self.subject.to_dict(),
            "host": self.host.to_dict(),
            "mode": self.mode,
            "bags": {h: sorted(b) for h, b in self.bags.items()},
        }
        if self.roots is not None:
            out["roots"] = list(self.roots)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> Deconstruction:
        try:
            return cls(
                Structure.from_dict(data["subject"]),
                Structure.from_dict(data["host"]),
                {h: frozenset(b) for h, b in data["bags"].items()},
                data.get("mode", "deconstruction"),
                tuple(data["roots"]) if data.get("roots") is not None else None,
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise PreconditionError(f"malformed deconstruction document: {exc}") from exc


def validate(d: Deconstruction) -> list[str]:
    """Violations of the mode's conditions; an empty list means valid."""
    problems = [f"subject: {p}" for p in graph_problems(d.subject)]
    problems += [f"host: {p}" for p in graph_problems(d.host)]
    if problems:
        return problems
    for h in d.host.universe:
        if h not in d.bags:
            problems.append(f"host vertex {h!r} has no bag")
    for h, b in d.bags.items():
        if h not in d.host:
            problems.append(f"bag for foreign host vertex {h!r}")
        foreign = sorted(x for x in b if x not in d.subject)
        if foreign:
            problems.append(f"bag {h!r} has foreign element {foreign[0]!r}")
    if problems:
        return problems
    occ = d.occurrences()
    hadj = {h: set(ns) for h, ns in neighbors(d.host).items()}
    for g, g2 in refl_pairs(d.subject):
        if g > g2:
            continue
        common = occ[g] & occ[g2]
        if d.mode == "decomposition":
            if not common:
                problems.append(f"pair ({g},{g2}) is not inside a single bag")
        elif not common and not any(hadj[h] & occ[g2] for h in occ[g]):
            problems.append(f"pair ({g},{g2}) is not covered by adjacent bags")
    for g in d.subject.universe:
        if occ[g] and not is_connected_subset(d.host, occ[g]):
            problems.append(f"occurrences of {g!r} are disconnected in the host")
    if d.roots is not None:
        try:
            d.rooted_host()
        except PreconditionError as exc:
            problems.append(f"roots: {exc}")
    return problems


def require_valid(d: Deconstruction) -> None:
    problems = validate(d)
    if problems:
        raise PreconditionError("invalid deconstruction: " + "; ".join(problems[:3]))


def width(d: Deconstruction) -> int:
    """Max bag-union over adjacent/equal hosts, or max bag size - 1 for decompositions."""
    require_valid(d)
    return raw_width(d)


def raw_width(d: Deconstruction) -> int:
    if d.mode == "decomposition":
        return max(len(d.bag(h)) for h in d.host.universe) - 1
    return max(len(d.bag(h) | d.bag(h2)) for h, h2 in refl_pairs(d.host))


def max_bag(d: Deconstruction) -> int:
    return max(len(d.bag(h)) for h in d.host.universe)


# -- constructions ---------------------------------------------------------------

def self_deconstruction(g: Structure) -> Deconstruction:
    require_graph(g)
    return Deconstruction(g, g, {x: {x} for x in g.universe})


def grid_deconstruction(g: Structure) -> Deconstruction:
    """Host is the n-by-n grid; bag (i, j) holds the i-th and j-th vertex."""
    require_graph(g)
    n = len(g.universe)
    host = grid(n)
    bags = {}
    for h in host.universe:
        i, j = (int(p) - 1 for p in h.split(","))
        bags[h] = {g.universe[i], g.universe[j]}
    return Deconstruction(g, host, bags)


def compose(d_gh: Deconstruction, d_hi: Deconstruction) -> Deconstruction:
    """G over H and H over I give G over I with bags C+_i = union of B_h for h in C_i."""
    if d_gh.host != d_hi.subject:
        raise PreconditionError("host of the first deconstruction must be the subject of the second")
    require_valid(d_gh.with_mode("deconstruction"))
    require_valid(d_hi.with_mode("deconstruction"))
    bags = {}
    for i in d_hi.host.universe:
        acc: set[str] = set()
        for h in d_hi.bag(i):
            acc |= d_gh.bag(h)
        bags[i] = acc
    return Deconstruction(d_gh.subject, d_hi.host, bags, "deconstruction", d_hi.roots)


def from_minor_map(m: Structure, g: Structure, mu: Mapping[str, Iterable[str]]) -> Deconstruction:
    """G-deconstruction of the minor M: B_g = {x in M : g in mu(x)}."""
    require_graph(m)
    require_graph(g)
    problems = minor_map_problems(m, g, mu)
    if problems:
        raise PreconditionError("invalid minor map: " + "; ".join(problems[:3]))
    bags: dict[str, set[str]] = {y: set() for y in g.universe}
    for x, branch in mu.items():
        for y in branch:
            bags[y].add(x)
    return Deconstruction(m, g, bags)


def _parent_map(host: Structure, roots: Iterable[str] | None) -> dict[str, str | None]:
    if not is_acyclic(host):
        raise PreconditionError("host must be a tree (or forest)")
    if roots is None:
        roots = [c[0] for c in component_sets(host)]
    return RootedForest(host, tuple(roots)).parent


def tree_decon_to_decomp(d: Deconstruction) -> Deconstruction:
    """Tree-hosted deconstruction to decomposition via C_h = B_h + B_parent(h)."""
    require_valid(d.with_mode("deconstruction"))
    parent = _parent_map(d.host, d.roots)
    bags = {h: d.bag(h) | (d.bag(p) if p is not None else frozenset()) for h, p in parent.items()}
    return Deconstruction(d.subject, d.host, bags, "decomposition", d.roots)


def decomp_from_treedepth_witness(g: Structure, t: RootedForest) -> Deconstruction:
    """Tree-depth witness to decomposition with B_t = ancestors of t."""
    require_graph(g)
    if set(t.universe) != set(g.universe):
        raise PreconditionError("witness must have the graph's vertex set")
    if not t.closure_contains(g):
        raise PreconditionError("witness closure does not contain every edge")
    bags = {x: set(t.ancestors(x)) for x in t.universe}
    return Deconstruction(g, t.graph, bags, "decomposition", t.roots)


# -- nice deconstructions ----------------------------------------------------------

def is_nice(m: RootedForest, g: RootedForest, d: Deconstruction) -> bool:
    """Check the nice conditions for an M-deconstruction of G given by branch sets."""
    if d.host != m.graph or d.subject != g.graph:
        raise PreconditionError("deconstruction must have host M and subject G")
    if set(d.bags) != set(m.universe):
        raise PreconditionError("bags must be exactly the branch sets of the minor map")
    mu = d.bags
    if minor_map_problems(m.graph, g.graph, mu):
        return False
    if len(m.roots) != 1 or len(g.roots) != 1:
        raise PreconditionError("niceness is defined for rooted trees")
    if g.roots[0] not in mu[m.roots[0]]:
        return False
    E = g.graph.rel("E")
    for x in m.universe:
        for child in m.children(x):
            for a in mu[x]:
                for b in mu[child]:
                    if (a, b) in E and g.parent[b] != a:
                        return False
    return True


def _tree(parents: Mapping[str, str | None]) -> RootedForest:
    return RootedForest.from_parents(parents)


def _subtree_parents(t: RootedForest, top: str) -> dict[str, str | None]:
    out: dict[str, str | None] = {top: None}
    for x in t.subtree(top):
        if x != top:
            out[x] = t.parent[x]
    return out


def _build(t: RootedForest, d: int, K: int) -> tuple[RootedForest, dict[str, frozenset]]:
    root = t.roots[0]
    if height(t) <= d:
        return t, {x: frozenset([x]) for x in t.universe}
    if d == 0:
        host = _tree({root: None})
        return host, {root: frozenset(t.universe)}
    good = property_P_nodes(t, d, K)
    kids = t.children(root)
    bs = [c for c in kids if good[c]]
    cs = [c for c in kids if not good[c]]
    if len(bs) >= K:
        raise HomlabError("internal invariant: root has P(d+1, K)")
    # H: contract root with the b-children, keep b-subtrees, swap c-subtrees for their hosts
    h_parents: dict[str, str | None] = {root: None}
    mu: dict[str, frozenset] = {root: frozenset([root, *bs])}
    for b in bs:
        for x in t.subtree(b):
            if x == b:
                continue
            p = t.parent[x]
            h_parents[x] = root if p == b else p
            mu[x] = frozenset([x])
    for c in cs:
        sub_host, sub_bags = _build(_tree(_subtree_parents(t, c)), d - 1, K)
        top = sub_host.roots[0]
        for x in sub_host.universe:
            p = sub_host.parent[x]
            h_parents[x] = root if x == top else p
            mu[x] = sub_bags[x]
    h = _tree(h_parents)
    if height(h) >= height(t):
        raise HomlabError("internal invariant: contracted tree did not get shorter")
    n_host, nu = _build(h, d, K)
    bags = {n: frozenset().union(*(mu[x] for x in nu[n])) for n in n_host.universe}
    return n_host, bags


def build_td_deconstruction(t: RootedForest, d: int, K: int) -> tuple[RootedForest, Deconstruction, int]:
    """Nice deconstruction of a rooted tree over a host of height <= d.

    Requires that the tree lacks property P(d+1, K).  Returns the rooted host,
    the deconstruction and its width.
    """
    if len(t.roots) != 1:
        raise PreconditionError("input must be a single rooted tree")
    if d < 0 or K < 1:
        raise PreconditionError("need d >= 0 and K >= 1")
    if property_P_nodes(t, d + 1, K)[t.roots[0]]:
        raise PreconditionError(f"tree has property P({d + 1},{K})")
    host, bags = _build(t, d, K)
    dec = Deconstruction(t.graph, host.graph, bags, "deconstruction", host.roots)
    return host, dec, width(dec)


# -- hierarchy ------------------------------------------------------------------

@dataclass(frozen=True)
class ClassFacts:
    all_grids_minors: bool = False
    all_trees_minors: bool = False
    all_paths_minors: bool = False
    stack_depth: int = 0
    unbounded_multiplicity: bool = False

    @classmethod
    def from_dict(cls, data: Mapping) -> ClassFacts:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise PreconditionError(f"unknown fact keys {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, order=True)
class HierarchyLevel:
    rank: int
    tag: str
    d: int | None = None

    def __str__(self) -> str:
        return f"{self.tag}_{self.d}" if self.d is not None else self.tag


_TOP = 1 << 30


def level(tag: str, d: int | None = None) -> HierarchyLevel:
    if tag in ("T_d", "F_d"):
        if d is None or d < 0:
            raise PreconditionError("depth-indexed levels need d >= 0")
        return HierarchyLevel(2 * d + (tag == "F_d"), tag[0], d)
    ranks = {"P": _TOP, "T": _TOP + 1, "L": _TOP + 2}
    if tag not in ranks:
        raise PreconditionError(f"unknown level {tag!r}")
    return HierarchyLevel(ranks[tag], tag)


def hierarchy_level(f: ClassFacts) -> HierarchyLevel:
    if f.all_grids_minors and not f.all_trees_minors:
        raise PreconditionError("inconsistent facts: all grids as minors implies all trees")
    if f.all_trees_minors and not f.all_paths_minors:
        raise PreconditionError("inconsistent facts: all trees as minors implies all paths")
    if not isinstance(f.stack_depth, int) or f.stack_depth < 0:
        raise PreconditionError("stack_depth must be a natural number")
    if f.all_grids_minors:
        return level("L")
    if f.all_trees_minors:
        return level("T")
    if f.all_paths_minors:
        return level("P")
    return level("F_d" if f.unbounded_multiplicity else "T_d", f.stack_depth)

