"""Existential pebble games with round-structured resources.

A game vector ``v = (p_1, ..., p_r)`` allows Spoiler to place ``p_i`` fresh
pebbles in round ``i``.  Duplicator answers with partial homomorphisms that
must extend her previous answer.  The unfolding T_v(A) packages every
possible sequence of pebble sets so that winning the game against B is the
same as T_v(A) mapping homomorphically into B.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from . import naming
from .errors import HomlabError, PreconditionError, check_guard
from .graphs import RootedForest, make_graph
from .relstruct import (
    Structure,
    core,
    find_hom,
    induced,
    is_partial_hom,
    require_similar,
)

GameVector = tuple[int, ...]
SetVector = tuple[frozenset, ...]


def parse_vector(text: str) -> GameVector:
    try:
        v = tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise PreconditionError(f"bad game vector {text!r}") from exc
    return check_vector(v)


def check_vector(v: Iterable[int], pebble_guard: int | None = None) -> GameVector:
    v = tuple(v)
    if not v:
        raise PreconditionError("a game vector needs at least one round")
    if any(not isinstance(p, int) or p < 0 for p in v):
        raise PreconditionError(f"pebble counts must be naturals: {v}")
    check_guard("pebbles", sum(v), pebble_guard, "game vector")
    return v


def vector_name(v: Sequence[int]) -> str:
    return ",".join(str(p) for p in v)


# -- the game itself ------------------------------------------------------------

class _Game:
    """Memoized AND-OR evaluation of the v-game on (a, b).

    Positions are tuples over a's elements holding a b-index or -1.  Winning
    positions are closed under restriction, so each round only has to
    consider the largest legal pebble sets.
    """

    def __init__(self, a: Structure, b: Structure, v: GameVector):
        require_similar(a, b)
        self.a, self.b, self.v = a, b, v
        self.n, self.nb = len(a), len(b)
        ai, bi = a.index, b.index
        self.btuples = {R: {tuple(bi[y] for y in t) for t in ts} for R, ts in b.relations.items()}
        # tuples of a touching each element
        touching: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in range(self.n)]
        for R, ts in sorted(a.relations.items()):
            for t in sorted(ts):
                it = tuple(ai[x] for x in t)
                for x in sorted(set(it)):
                    touching[x].append((R, it))
        self.touching = touching
        self.win = lru_cache(maxsize=None)(self._win)

    def consistent(self, g: list[int], x: int) -> bool:
        """Is g still a partial hom after assigning x (other entries already checked)?"""
        for R, t in self.touching[x]:
            if all(g[y] >= 0 for y in t) and tuple(g[y] for y in t) not in self.btuples[R]:
                return False
        return True

    def extensions(self, g: tuple[int, ...], new: Sequence[int]):
        """All partial homs extending g onto ``new``, in lexicographic order."""
        work = list(g)
        k = len(new)

        def rec(j: int):
            if j == k:
                yield tuple(work)
                return
            x = new[j]
            for y in range(self.nb):
                work[x] = y
                if self.consistent(work, x):
                    yield from rec(j + 1)
            work[x] = -1

        return rec(0)

    def _win(self, i: int, g: tuple[int, ...]) -> bool:
        """Duplicator survives from position g after i rounds."""
        if i == len(self.v):
            return True
        free = [x for x in range(self.n) if g[x] < 0]
        k = min(self.v[i], len(free))
        for new in combinations(free, k):
            if not any(self.win(i + 1, h) for h in self.extensions(g, new)):
                return False
        return True

    def wins(self) -> bool:
        return self.win(0, (-1,) * self.n)

    def least_winning(self, i: int, g: tuple[int, ...], domain: Sequence[int]) -> tuple[int, ...] | None:
        new = [x for x in domain if g[x] < 0]
        for h in self.extensions(g, new):
            if self.win(i + 1, h):
                return h
        return None

    def as_map(self, g: tuple[int, ...]) -> frozenset:
        return frozenset(
            (self.a.universe[x], self.b.universe[y]) for x, y in enumerate(g) if y >= 0
        )


@dataclass(frozen=True)
class StrategyTable:
    """Rounds W_1..W_r of partial homomorphisms, each stored as a frozenset of pairs."""

    rounds: tuple[tuple[frozenset, ...], ...]

    def maps(self, i: int) -> list[dict[str, str]]:
        return [dict(m) for m in self.rounds[i]]

    def find(self, i: int, domain: Iterable[str], extends: Mapping[str, str] | None = None) -> dict[str, str] | None:
        dom = set(domain)
        base = set((extends or {}).items())
        for m in self.rounds[i]:
            d = dict(m)
            if set(d) == dom and base <= m:
                return d
        return None

    def to_dict(self) -> dict:
        return {
            "rounds": [
                [dict(sorted(m)) for m in sorted(w, key=lambda m: sorted(m))] for w in self.rounds
            ]
        }


def duplicator_wins(
    a: Structure,
    b: Structure,
    v: Sequence[int],
    strategy: bool = True,
    pebble_guard: int | None = None,
) -> tuple[bool, StrategyTable | int | None]:
    """Decide the v-game on (a, b).

    Returns ``(True, table)`` with the reachable closure of least winning
    answers when Duplicator wins, and ``(False, r')`` with the shortest
    losing prefix length r' otherwise.  With ``strategy=False`` the second
    component is None.
    """
    v = check_vector(v, pebble_guard)
    game = _Game(a, b, v)
    ok = game.wins()
    if not strategy:
        return ok, None
    if not ok:
        for r in range(1, len(v) + 1):
            if not _Game(a, b, v[:r]).wins():
                return False, r
        raise HomlabError("internal invariant: losing game has no losing prefix")
    return True, _strategy_table(game)


def _strategy_table(game: _Game) -> StrategyTable:
    n, v = game.n, game.v
    rounds: list[list[tuple[int, ...]]] = []
    empty = (-1,) * n
    level = []
    for size in range(min(v[0], n) + 1):
        for S in combinations(range(n), size):
            h = game.least_winning(0, empty, S)
            if h is None:
                raise HomlabError("internal invariant: winning game lacks a first answer")
            level.append(h)
    rounds.append(sorted(set(level)))
    for i in range(1, len(v)):
        nxt = set()
        for g in rounds[-1]:
            free = [x for x in range(n) if g[x] < 0]
            dom = [x for x in range(n) if g[x] >= 0]
            for size in range(min(v[i], len(free)) + 1):
                for extra in combinations(free, size):
                    h = game.least_winning(i, g, dom + list(extra))
                    if h is None:
                        raise HomlabError("internal invariant: winning position lacks an answer")
                    nxt.add(h)
        rounds.append(sorted(nxt))
    return StrategyTable(tuple(tuple(game.as_map(g) for g in w) for w in rounds))


def check_strategy(a: Structure, b: Structure, v: Sequence[int], table: StrategyTable) -> list[str]:
    """Verify the closure conditions of a Duplicator winning strategy."""
    v = tuple(v)
    problems = []
    if len(table.rounds) != len(v):
        return [f"strategy has {len(table.rounds)} rounds, vector has {len(v)}"]
    for i, w in enumerate(table.rounds):
        for m in w:
            if not is_partial_hom(a, b, dict(m)):
                problems.append(f"round {i + 1}: {sorted(m)} is not a partial homomorphism")
    by_dom = [{} for _ in v]
    for i, w in enumerate(table.rounds):
        for m in w:
            by_dom[i].setdefault(frozenset(x for x, _ in m), []).append(m)
    for size in range(min(v[0], len(a)) + 1):
        for S in combinations(a.universe, size):
            if frozenset(S) not in by_dom[0]:
                problems.append(f"round 1: no answer on {list(S)}")
    for i in range(len(v) - 1):
        for m in table.rounds[i]:
            dom = {x for x, _ in m}
            free = [x for x in a.universe if x not in dom]
            for size in range(min(v[i + 1], len(free)) + 1):
                for extra in combinations(free, size):
                    S = frozenset(dom | set(extra))
                    if not any(m <= m2 for m2 in by_dom[i + 1].get(S, [])):
                        problems.append(f"round {i + 2}: {sorted(m)} has no extension to {sorted(S)}")
    return problems


# -- set vectors and the unfolding ------------------------------------------------

def set_vectors(universe: Sequence[str], v: Sequence[int], set_guard: int | None = None) -> list[SetVector]:
    """All set vectors of v over ``universe`` (empty first sets allowed), canonically ordered."""
    v = tuple(v)
    out: list[SetVector] = []
    layer = []
    for size in range(min(v[0], len(universe)) + 1):
        for c in combinations(universe, size):
            layer.append((frozenset(c),))
    out.extend(layer)
    for p in v[1:]:
        nxt = []
        for s in layer:
            last = s[-1]
            free = [x for x in universe if x not in last]
            for size in range(min(p, len(free)) + 1):
                for extra in combinations(free, size):
                    nxt.append(s + (last | frozenset(extra),))
        out.extend(nxt)
        layer = nxt
        check_guard("setvectors", len(out), set_guard, "set vector count")
    check_guard("setvectors", len(out), set_guard, "set vector count")
    return out


def set_vector_name(s: SetVector) -> str:
    return "|".join(naming.set_name(c) for c in s)


def prefix_of(x: str, s: SetVector) -> SetVector:
    """u(x, s): the shortest prefix of s whose last set contains x."""
    for j, c in enumerate(s):
        if x in c:
            return s[: j + 1]
    raise PreconditionError(f"{x!r} is not in the set vector")


def element_name(x: str, u: SetVector) -> str:
    return f"{naming.wrap(x)}@{set_vector_name(u)}"


@dataclass(frozen=True)
class Unfolding:
    structure: Structure
    bags: dict = field(repr=False)            # set vector -> frozenset of element names
    vectors: tuple = field(repr=False)        # canonical list of set vectors
    origin: dict = field(repr=False)          # element name -> underlying element of A

    def forest(self) -> RootedForest:
        """Set vectors as a rooted forest: s' is a child of s when it extends s by one set."""
        names = {s: set_vector_name(s) for s in self.vectors}
        es = [(names[s[:-1]], names[s]) for s in self.vectors if len(s) > 1]
        g = make_graph(names.values(), es)
        return RootedForest(g, tuple(names[s] for s in self.vectors if len(s) == 1))

    def named_bags(self) -> dict[str, frozenset]:
        return {set_vector_name(s): b for s, b in self.bags.items()}


def build_unfolding(a: Structure, v: Sequence[int], set_guard: int | None = None) -> Unfolding:
    """T_v(A) with relations restricted to tuples lying inside a common bag."""
    v = check_vector(v)
    vectors = set_vectors(a.universe, v, set_guard)
    bags: dict[SetVector, frozenset] = {}
    origin: dict[str, str] = {}
    rels: dict[str, set] = {R: set() for R in a.vocabulary}
    for s in vectors:
        last = s[-1]
        local = {x: element_name(x, prefix_of(x, s)) for x in sorted(last)}
        for x, name in local.items():
            origin[name] = x
        bags[s] = frozenset(local.values())
        for R, ts in a.relations.items():
            for t in ts:
                if all(x in last for x in t):
                    rels[R].add(tuple(local[x] for x in t))
    # with no pebbles at all the universe is empty; it then maps into anything
    t_struct = Structure(a.vocabulary, origin.keys(), rels)
    return Unfolding(t_struct, bags, tuple(vectors), origin)


# -- v-decompositions ------------------------------------------------------------------

def validate_v_decomposition(
    a: Structure,
    host: RootedForest,
    bags: Mapping[str, Iterable[str]],
    v: Sequence[int],
) -> list[str]:
    v = tuple(v)
    problems = []
    bagsets = {h: set(bags.get(h, ())) for h in host.universe}
    for h in bags:
        if h not in host.universe:
            problems.append(f"bag for foreign host node {h!r}")
    for h, b in bagsets.items():
        foreign = sorted(x for x in b if x not in a)
        if foreign:
            problems.append(f"bag {h!r} has foreign element {foreign[0]!r}")
    if problems:
        return problems
    occ: dict[str, set[str]] = {x: set() for x in a.universe}
    for h, b in bagsets.items():
        for x in b:
            occ[x].add(h)
    for x, hs in occ.items():
        if not hs:
            problems.append(f"element {x!r} is in no bag")
        elif not _connected_in_forest(host, hs):
            problems.append(f"occurrences of {x!r} are disconnected")
    for R, ts in a.relations.items():
        for t in sorted(ts):
            common = set.intersection(*(occ[x] for x in t)) if t else set()
            if not common:
                problems.append(f"tuple {R}{t} is not inside a single bag")
    for h in host.universe:
        lvl = host.depth[h] + 1
        if lvl > len(v):
            problems.append(f"node {h!r} at level {lvl} exceeds {len(v)} rounds")
            continue
        if lvl == 1 and len(bagsets[h]) > v[0]:
            problems.append(f"root bag {h!r} has {len(bagsets[h])} > {v[0]} elements")
        p = host.parent[h]
        if p is not None:
            if not bagsets[p] <= bagsets[h]:
                problems.append(f"bag {h!r} does not contain its parent's bag")
            grow = len(bagsets[h] - bagsets[p])
            if grow > v[lvl - 1]:
                problems.append(f"bag {h!r} grows by {grow} > {v[lvl - 1]}")
    return problems


def _connected_in_forest(f: RootedForest, nodes: set[str]) -> bool:
    # a node set in a forest is connected iff exactly one member lacks its parent in the set
    tops = [h for h in nodes if f.parent[h] not in nodes]
    return len(tops) == 1


def strategy_to_hom(
    t: Structure,
    b: Structure,
    w: StrategyTable,
    host: RootedForest,
    bags: Mapping[str, Iterable[str]],
) -> dict[str, str]:
    """Glue strategy answers along a v-decomposition of t into a homomorphism."""
    chosen: dict[str, dict[str, str]] = {}
    order = sorted(host.universe, key=lambda h: (host.depth[h], h))
    for h in order:
        i = host.depth[h]
        if i >= len(w.rounds):
            raise PreconditionError("decomposition is deeper than the strategy")
        p = host.parent[h]
        f = w.find(i, bags.get(h, ()), chosen[p] if p is not None else None)
        if f is None:
            raise HomlabError(f"internal invariant: strategy has no answer for node {h!r}")
        chosen[h] = f
    out: dict[str, str] = {}
    for f in chosen.values():
        for x, y in f.items():
            if out.setdefault(x, y) != y:
                raise HomlabError(f"internal invariant: answers disagree on {x!r}")
    missing = [x for x in t.universe if x not in out]
    if missing or not is_partial_hom(t, b, out):
        raise HomlabError("internal invariant: glued map is not a homomorphism")
    return out


def v_game_solves(a: Structure, v: Sequence[int], budget: int | None = None) -> tuple[bool, dict[str, str] | None]:
    """Does the v-game decide Hom(A)?  Witness: a homomorphism A -> T_v(A)."""
    u = build_unfolding(a, v)
    h = find_hom(a, u.structure, budget)
    return h is not None, h


def extract_v_decomposition(a: Structure, v: Sequence[int], core_guard: int | None = None):
    """Pull back the unfolding's bags to core(a) along a homomorphism.

    Returns ``(core(a), host forest, bags)``.
    """
    c = core(a, core_guard)
    u = build_unfolding(a, v)
    h = find_hom(c, u.structure)
    if h is None:
        raise PreconditionError("the v-game does not solve Hom(A)")
    inverse = {y: x for x, y in h.items()}
    if len(inverse) != len(h):
        raise HomlabError("internal invariant: map from the core is not injective")
    host = u.forest()
    bags = {
        set_vector_name(s): frozenset(inverse[y] for y in bag if y in inverse)
        for s, bag in u.bags.items()
    }
    return c, host, bags


def min_pebbles_unary(a: Structure, n_max: int) -> int | None:
    """Least n <= n_max such that the (1,...,1) game of length n solves Hom(A)."""
    for n in range(1, n_max + 1):
        if v_game_solves(a, (1,) * n)[0]:
            return n
    return None


def project(u: Unfolding) -> dict[str, str]:
    """Projection of T_v(A) onto A."""
    return dict(u.origin)


def restrict_to_bag(u: Unfolding, s: SetVector) -> Structure:
    return induced(u.structure, u.bags[s])
