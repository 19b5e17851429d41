"""Graphs, rooted forests, generators and exact small-graph invariants.

Graphs are :class:`Structure` values over ``{E: 2}`` with an irreflexive,
symmetric edge relation.  Heights follow the edge-count convention: a
single vertex has height and tree depth 0.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import BudgetExceeded, PreconditionError, check_guard
from .relstruct import Structure, component_sets

GRAPH_VOCAB = {"E": 2}


def make_graph(vertices: Iterable[str], edges: Iterable[tuple[str, str]] = ()) -> Structure:
    """Build a graph; each edge is added in both directions."""
    es = set()
    for u, v in edges:
        if u == v:
            raise PreconditionError(f"loop at {u!r} is not allowed in a graph")
        es.add((u, v))
        es.add((v, u))
    verts = set(vertices)
    for u, v in es:
        verts.add(u)
    return Structure(GRAPH_VOCAB, verts, {"E": es})


def graph_problems(g: Structure) -> list[str]:
    problems = []
    if dict(g.vocabulary) != GRAPH_VOCAB:
        problems.append(f"graph vocabulary must be {{E: 2}}, got {dict(g.vocabulary)}")
        return problems
    E = g.rel("E")
    for u, v in sorted(E):
        if u == v:
            problems.append(f"loop ({u},{v})")
        elif (v, u) not in E:
            problems.append(f"edge ({u},{v}) lacks its reverse")
    return problems


def require_graph(g: Structure) -> None:
    problems = graph_problems(g)
    if problems:
        raise PreconditionError("not a graph: " + "; ".join(problems))


def edges(g: Structure) -> list[tuple[str, str]]:
    """Undirected edges as sorted pairs."""
    return sorted((u, v) for u, v in g.rel("E") if u < v)


def neighbors(g: Structure) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {x: [] for x in g.universe}
    for u, v in sorted(g.rel("E")):
        if u != v:
            adj[u].append(v)
    return adj


def refl_pairs(g: Structure) -> list[tuple[str, str]]:
    """The edge relation plus the diagonal."""
    return sorted(set(g.rel("E")) | {(x, x) for x in g.universe})


def is_connected_subset(g: Structure, subset: Iterable[str]) -> bool:
    s = set(subset)
    if not s:
        return False
    adj = neighbors(g)
    start = min(s)
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y in s and y not in seen:
                seen.add(y)
                stack.append(y)
    return seen == s


def is_acyclic(g: Structure) -> bool:
    return len(edges(g)) == len(g.universe) - len(component_sets(g))


# -- rooted forests ------------------------------------------------------------

@dataclass(frozen=True)
class RootedForest:
    """Acyclic graph with exactly one root per component."""

    graph: Structure
    roots: tuple[str, ...]
    parent: dict = field(init=False, repr=False, compare=False)
    depth: dict = field(init=False, repr=False, compare=False)
    kids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        require_graph(self.graph)
        roots = tuple(sorted(set(self.roots)))
        object.__setattr__(self, "roots", roots)
        if not is_acyclic(self.graph):
            raise PreconditionError("rooted forest graph has a cycle")
        comps = component_sets(self.graph)
        owner = {x: i for i, c in enumerate(comps) for x in c}
        for r in roots:
            if r not in self.graph:
                raise PreconditionError(f"root {r!r} is not a vertex")
        per = sorted(owner[r] for r in roots)
        if per != list(range(len(comps))):
            raise PreconditionError("need exactly one root per component")
        adj = neighbors(self.graph)
        parent: dict[str, str | None] = {}
        depth: dict[str, int] = {}
        for r in roots:
            parent[r], depth[r] = None, 0
            queue = deque([r])
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if y not in depth:
                        parent[y], depth[y] = x, depth[x] + 1
                        queue.append(y)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "depth", depth)
        kids: dict[str, list[str]] = {x: [] for x in self.graph.universe}
        for x in self.graph.universe:
            if parent[x] is not None:
                kids[parent[x]].append(x)
        object.__setattr__(self, "kids", kids)

    @classmethod
    def from_parents(cls, parents: Mapping[str, str | None]) -> RootedForest:
        es = [(p, x) for x, p in parents.items() if p is not None]
        g = make_graph(parents.keys(), es)
        return cls(g, tuple(x for x, p in parents.items() if p is None))

    @property
    def universe(self) -> tuple[str, ...]:
        return self.graph.universe

    def children(self, x: str) -> list[str]:
        return self.kids[x]

    def ancestors(self, x: str) -> list[str]:
        """Ancestors of x, root first, x included."""
        out = []
        while x is not None:
            out.append(x)
            x = self.parent[x]
        return out[::-1]

    def is_ancestor(self, a: str, d: str) -> bool:
        while d is not None:
            if d == a:
                return True
            d = self.parent[d]
        return False

    def subtree(self, x: str) -> list[str]:
        out, stack = [], [x]
        while stack:
            y = stack.pop()
            out.append(y)
            stack.extend(self.children(y))
        return sorted(out)

    def root_of(self, x: str) -> str:
        return self.ancestors(x)[0]

    def closure_contains(self, g: Structure) -> bool:
        return all(self.is_ancestor(u, v) or self.is_ancestor(v, u) for u, v in g.rel("E"))


def height(f: RootedForest) -> int:
    return max(f.depth.values(), default=0)


# -- generators ----------------------------------------------------------------

def _labels(n: int) -> list[str]:
    pad = len(str(n)) if n >= 10 else 1
    return [str(i).zfill(pad) for i in range(1, n + 1)]


def path(n: int) -> Structure:
    if n < 1:
        raise PreconditionError("path needs n >= 1")
    vs = _labels(n)
    return make_graph(vs, zip(vs, vs[1:]))


def cycle(n: int) -> Structure:
    if n < 3:
        raise PreconditionError("cycle needs n >= 3")
    vs = _labels(n)
    return make_graph(vs, list(zip(vs, vs[1:])) + [(vs[-1], vs[0])])


def complete(n: int) -> Structure:
    if n < 1:
        raise PreconditionError("complete graph needs n >= 1")
    vs = _labels(n)
    return make_graph(vs, [(u, v) for u in vs for v in vs if u < v])


def grid(n: int) -> Structure:
    if n < 1:
        raise PreconditionError("grid needs n >= 1")
    lab = _labels(n)
    name = {(i, j): f"{lab[i]},{lab[j]}" for i in range(n) for j in range(n)}
    es = []
    for (i, j), x in name.items():
        if i + 1 < n:
            es.append((x, name[i + 1, j]))
        if j + 1 < n:
            es.append((x, name[i, j + 1]))
    return make_graph(name.values(), es)


def star(k: int) -> Structure:
    """Centre ``0`` joined to leaves ``1..k``."""
    if k < 1:
        raise PreconditionError("star needs k >= 1")
    return make_graph(["0", *_labels(k)], [("0", x) for x in _labels(k)])


def tree_node(word: tuple[int, ...], k: int) -> str:
    if k < 10:
        return "r" + "".join(str(i) for i in word)
    return "r" + "".join(f".{i}" for i in word)


def complete_tree(h: int, k: int) -> RootedForest:
    """T_{h,k}: every node above depth h has k children; root ``r``."""
    if h < 0 or k < 1:
        raise PreconditionError("tree needs h >= 0 and k >= 1")
    parents: dict[str, str | None] = {tree_node((), k): None}
    layer = [()]
    for _ in range(h):
        nxt = []
        for w in layer:
            for i in range(1, k + 1):
                parents[tree_node(w + (i,), k)] = tree_node(w, k)
                nxt.append(w + (i,))
        layer = nxt
    return RootedForest.from_parents(parents)


def generate(kind: str, *params: int) -> Structure | RootedForest:
    makers = {"path": path, "cycle": cycle, "grid": grid, "complete": complete,
              "star": star, "tree": complete_tree}
    if kind not in makers:
        raise PreconditionError(f"unknown graph kind {kind!r}")
    want = 2 if kind == "tree" else 1
    if len(params) != want:
        raise PreconditionError(f"{kind} takes {want} parameter(s)")
    return makers[kind](*params)


# -- bitmask helpers -------------------------------------------------------------

def _adj_masks(g: Structure) -> list[int]:
    idx = g.index
    masks = [0] * len(g.universe)
    for u, v in g.rel("E"):
        if u != v:
            masks[idx[u]] |= 1 << idx[v]
    return masks


def _bits(m: int) -> Iterator[int]:
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


def _mask_components(mask: int, adj: list[int]) -> list[int]:
    comps = []
    while mask:
        low = mask & -mask
        comp, frontier = low, low
        while frontier:
            nxt = 0
            for i in _bits(frontier):
                nxt |= adj[i]
            nxt &= mask & ~comp
            comp |= nxt
            frontier = nxt
        comps.append(comp)
        mask &= ~comp
    return comps


# -- tree depth ------------------------------------------------------------------

def tree_depth(g: Structure, size_guard: int | None = None) -> tuple[int, RootedForest]:
    """Exact tree depth with a witness forest (canonical tie-breaking)."""
    require_graph(g)
    n = len(g.universe)
    check_guard("treedepth", n, size_guard, "graph")
    adj = _adj_masks(g)

    @lru_cache(maxsize=None)
    def td(mask: int) -> tuple[int, int]:
        # mask is connected; returns (depth, chosen root index)
        if mask & (mask - 1) == 0:
            return 0, mask.bit_length() - 1
        best, choice = None, -1
        for v in _bits(mask):
            rest = mask & ~(1 << v)
            d = max(td(c)[0] for c in _mask_components(rest, adj))
            if best is None or d < best:
                best, choice = d, v
        return best + 1, choice

    parents: dict[str, str | None] = {}

    def build(mask: int, parent: str | None) -> None:
        _, v = td(mask)
        name = g.universe[v]
        parents[name] = parent
        for c in _mask_components(mask & ~(1 << v), adj):
            build(c, name)

    full = (1 << n) - 1
    depth = 0
    for comp in _mask_components(full, adj):
        depth = max(depth, td(comp)[0])
        build(comp, None)
    return depth, RootedForest.from_parents(parents)


# -- treewidth / pathwidth ---------------------------------------------------------

def treewidth(g: Structure, size_guard: int | None = None) -> int:
    """Exact treewidth by dynamic programming over vertex subsets.

    TW(S) = min over v in S of max(TW(S - v), |Q(S - v, v)|), where Q(S, v) is the
    set of vertices outside S + v reachable from v through S.
    """
    require_graph(g)
    n = len(g.universe)
    check_guard("width", n, size_guard, "graph")
    if n == 0:
        return 0
    adj = _adj_masks(g)
    full = (1 << n) - 1

    def q_size(s: int, v: int) -> int:
        inside = 1 << v
        frontier = 1 << v
        while frontier:
            nxt = 0
            for i in _bits(frontier):
                nxt |= adj[i]
            nxt &= s & ~inside
            inside |= nxt
            frontier = nxt
        reach = 0
        for i in _bits(inside):
            reach |= adj[i]
        return bin(reach & ~s & ~(1 << v)).count("1")

    tw = {0: -1}
    for mask in range(1, full + 1):
        best = n
        for v in _bits(mask):
            rest = mask & ~(1 << v)
            cand = max(tw[rest], q_size(rest, v))
            if cand < best:
                best = cand
        tw[mask] = best
    return tw[full]


def pathwidth(g: Structure, size_guard: int | None = None) -> int:
    """Exact pathwidth as vertex separation number over subsets.

    f(S) = max(|boundary(S)|, min over v in S of f(S - v)); boundary(S) holds
    the vertices of S with a neighbour outside S.
    """
    require_graph(g)
    n = len(g.universe)
    check_guard("width", n, size_guard, "graph")
    adj = _adj_masks(g)
    full = (1 << n) - 1
    f = [0] * (full + 1)
    for mask in range(1, full + 1):
        boundary = sum(1 for v in _bits(mask) if adj[v] & ~mask)
        f[mask] = max(boundary, min(f[mask & ~(1 << v)] for v in _bits(mask)))
    return f[full]


# -- minors -------------------------------------------------------------------------

def minor_map_problems(m: Structure, g: Structure, mu: Mapping[str, Iterable[str]]) -> list[str]:
    problems = []
    sets = {x: set(mu.get(x, ())) for x in m.universe}
    for x in mu:
        if x not in m:
            problems.append(f"foreign minor vertex {x!r}")
    for x, s in sets.items():
        foreign = s - set(g.universe)
        if foreign:
            problems.append(f"branch set of {x!r} has foreign vertices {sorted(foreign)}")
        elif not s:
            problems.append(f"branch set of {x!r} is empty")
        elif not is_connected_subset(g, s):
            problems.append(f"branch set of {x!r} is not connected")
    owner: dict[str, str] = {}
    for x, s in sets.items():
        for y in sorted(s):
            if y in owner:
                problems.append(f"branch sets of {owner[y]!r} and {x!r} share {y!r}")
            owner[y] = x
    E = g.rel("E")
    for a, b in edges(m):
        if not any((u, v) in E for u in sets[a] for v in sets[b]):
            problems.append(f"edge ({a},{b}) is not realized")
    return problems


def is_minor_map(m: Structure, g: Structure, mu: Mapping[str, Iterable[str]]) -> bool:
    for x in mu:
        if x not in m:
            raise PreconditionError(f"foreign minor vertex {x!r}")
        for y in mu[x]:
            if y not in g:
                raise PreconditionError(f"foreign host vertex {y!r}")
    if set(mu) != set(m.universe):
        raise PreconditionError("minor map must be defined on every vertex of M")
    return not minor_map_problems(m, g, mu)


def _connected_sets(seed: int, allowed: int, adj: list[int], limit: int) -> Iterator[int]:
    """Connected subsets of ``allowed`` containing ``seed``, each exactly once."""

    def rec(s: int, frontier: int, banned: int, size: int) -> Iterator[int]:
        yield s
        if size >= limit:
            return
        f = frontier
        while f:
            low = f & -f
            f ^= low
            i = low.bit_length() - 1
            ns = s | low
            nf = (f | (adj[i] & allowed)) & ~ns & ~banned
            yield from rec(ns, nf, banned, size + 1)
            banned |= low

    start = 1 << seed
    yield from rec(start, adj[seed] & allowed & ~start, 0, 1)


def find_minor(
    g: Structure,
    m: Structure,
    budget: int | None = None,
    size_guard: int | None = None,
) -> dict[str, list[str]] | None:
    """Search branch sets realizing M as a minor of G; None if impossible."""
    require_graph(g)
    require_graph(m)
    check_guard("minor", len(g.universe), size_guard, "host graph")
    n, k = len(g.universe), len(m.universe)
    if k > n or len(edges(m)) > len(edges(g)):
        return None
    gadj = _adj_masks(g)
    madj = neighbors(m)
    mdeg = {x: len(madj[x]) for x in m.universe}
    # placement order: most already-placed neighbours, then degree, then name
    order: list[str] = []
    placed: set[str] = set()
    while len(order) < k:
        best = min(
            (x for x in m.universe if x not in placed),
            key=lambda x: (-sum(1 for y in madj[x] if y in placed), -mdeg[x], x),
        )
        order.append(best)
        placed.add(best)
    pos = {x: i for i, x in enumerate(order)}
    earlier = [[y for y in madj[x] if pos[y] < pos[x]] for x in order]
    steps = [budget] if budget is not None else None
    assign: list[int] = [0] * k

    def search(i: int, used: int) -> bool:
        if i == k:
            return True
        free = ((1 << n) - 1) & ~used
        limit = n - bin(used).count("1") - (k - i - 1)
        need = [assign[pos[y]] for y in earlier[i]]
        if need:
            touch = 0
            for i0 in _bits(need[0]):
                touch |= gadj[i0]
            seeds = touch & free
        else:
            seeds = free
        tried_seeds = 0
        for s in _bits(seeds):
            allowed = free & ~tried_seeds
            for bs in _connected_sets(s, allowed, gadj, limit):
                if steps is not None:
                    steps[0] -= 1
                    if steps[0] < 0:
                        raise BudgetExceeded("minor search exhausted its step budget")
                reach = 0
                for b in _bits(bs):
                    reach |= gadj[b]
                if all(reach & other for other in need):
                    assign[i] = bs
                    if search(i + 1, used | bs):
                        return True
            tried_seeds |= 1 << s
        return False

    if not search(0, 0):
        return None
    return {x: [g.universe[b] for b in _bits(assign[pos[x]])] for x in m.universe}


# -- property P(d, k) ----------------------------------------------------------------

def property_P_nodes(f: RootedForest, d: int, k: int) -> dict[str, bool]:
    """Which nodes have P(d, k).

    Descendants are taken as proper descendants.  Antichains are counted
    bottom-up: best(x) = max([x good], sum of best over children).
    """
    if k < 1:
        raise PreconditionError("property P needs k >= 1")
    good = {x: True for x in f.universe}
    order = sorted(f.universe, key=lambda x: -f.depth[x])
    for _ in range(d):
        best: dict[str, int] = {}
        below: dict[str, int] = {}
        for x in order:
            total = sum(best[c] for c in f.children(x))
            below[x] = total
            best[x] = max(1 if good[x] else 0, total)
        good = {x: below[x] >= k for x in f.universe}
    return good


def has_property_P(f: RootedForest, d: int, k: int) -> bool:
    if len(f.roots) != 1:
        raise PreconditionError("property P is defined for a single rooted tree")
    return property_P_nodes(f, d, k)[f.roots[0]]


def stack_profile(g: Structure, d_max: int, k: int, budget: int | None = None,
                  size_guard: int | None = None) -> int:
    """Largest d <= d_max such that T_{d,k} is a minor of g."""
    require_graph(g)
    best = 0
    for d in range(1, d_max + 1):
        t = complete_tree(d, k).graph
        if find_minor(g, t, budget, size_guard) is None:
            break
        best = d
    return best


def dfs_forest(g: Structure) -> RootedForest:
    """Depth-first forest, least vertex as root, neighbours in canonical order."""
    require_graph(g)
    adj = neighbors(g)
    parents: dict[str, str | None] = {}
    for root in g.universe:
        if root in parents:
            continue
        parents[root] = None
        stack = [(root, iter(adj[root]))]
        while stack:
            x, it = stack[-1]
            for y in it:
                if y not in parents:
                    parents[y] = x
                    stack.append((y, iter(adj[y])))
                    break
            else:
                stack.pop()
    return RootedForest.from_parents(parents)

