"""Finite relational structures, homomorphisms and cores.

A :class:`Structure` is immutable by convention.  Its universe is kept sorted,
and that canonical order decides every tie downstream (search order,
witness choice, element listings).
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from itertools import product
from types import MappingProxyType

from . import naming
from .errors import (
    BudgetExceeded,
    PreconditionError,
    VocabularyMismatch,
    check_guard,
    guard,
)

class Structure:
    """Relational structure: vocabulary (symbol -> arity), universe, relations."""

    __slots__ = ("vocabulary", "universe", "relations", "_index", "_hash")

    def __init__(
        self,
        vocabulary: Mapping[str, int],
        universe: Iterable[str],
        relations: Mapping[str, Iterable[Iterable[str]]] | None = None,
    ):
        rels = relations or {}
        self.vocabulary = MappingProxyType(dict(sorted(vocabulary.items())))
        self.universe: tuple[str, ...] = tuple(sorted(set(universe)))
        symbols = sorted(set(self.vocabulary) | set(rels))
        self.relations = MappingProxyType(
            {R: frozenset(tuple(t) for t in rels.get(R, ())) for R in symbols}
        )
        self._index = None
        self._hash = None

    # -- basic views -------------------------------------------------------
    @property
    def index(self) -> dict[str, int]:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.universe)}
        return self._index

    def __len__(self) -> int:
        return len(self.universe)

    def __contains__(self, x: object) -> bool:
        return x in self.index

    def rel(self, symbol: str) -> frozenset:
        return self.relations.get(symbol, frozenset())

    def sorted_tuples(self, symbol: str) -> list[tuple[str, ...]]:
        return sorted(self.rel(symbol))

    def tuple_count(self) -> int:
        return sum(len(ts) for ts in self.relations.values())

    def _key(self):
        return (
            tuple(self.vocabulary.items()),
            self.universe,
            tuple((R, tuple(sorted(ts))) for R, ts in self.relations.items()),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self) -> str:
        rels = ", ".join(f"{R}:{len(ts)}" for R, ts in self.relations.items())
        return f"Structure(|U|={len(self.universe)}, {rels})"

    def similar(self, other: Structure) -> bool:
        return dict(self.vocabulary) == dict(other.vocabulary)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vocabulary": dict(self.vocabulary),
            "universe": list(self.universe),
            "relations": {R: [list(t) for t in sorted(ts)] for R, ts in self.relations.items()},
        }

    def to_json(self) -> str:
        # key order: vocabulary, universe, relations; inner maps already sorted
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> Structure:
        try:
            s = cls(data["vocabulary"], data["universe"], data.get("relations", {}))
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed structure document: {exc}") from exc
        problems = validate_structure(s)
        if problems:
            raise PreconditionError("invalid structure: " + "; ".join(problems))
        return s

    @classmethod
    def from_json(cls, text: str) -> Structure:
        return cls.from_dict(json.loads(text))


def validate_structure(s: Structure, max_arity: int | None = None) -> list[str]:
    """Return the list of invariant violations (empty list means ok)."""
    problems = []
    if not s.universe:
        problems.append("empty universe")
    limit = guard("arity", max_arity)
    for R, ar in s.vocabulary.items():
        if not isinstance(ar, int) or ar < 1:
            problems.append(f"symbol {R}: arity {ar!r} is not a positive integer")
        elif ar > limit:
            problems.append(f"symbol {R}: arity {ar} exceeds bound {limit}")
    members = s.index
    for R, ts in s.relations.items():
        if R not in s.vocabulary:
            problems.append(f"symbol {R} not in vocabulary")
            continue
        ar = s.vocabulary[R]
        for t in sorted(ts):
            if len(t) != ar:
                problems.append(f"{R}{t}: length {len(t)} != arity {ar}")
            foreign = [x for x in t if x not in members]
            if foreign:
                problems.append(f"{R}{t}: foreign element {foreign[0]!r}")
    return problems


def require_similar(a: Structure, b: Structure) -> None:
    if not a.similar(b):
        raise VocabularyMismatch(
            f"vocabularies differ: {dict(a.vocabulary)} vs {dict(b.vocabulary)}"
        )


# -- constructions -----------------------------------------------------------

def induced(a: Structure, subset: Iterable[str]) -> Structure:
    s = set(subset)
    if not s:
        raise PreconditionError("induced substructure needs a nonempty subset")
    foreign = s - set(a.universe)
    if foreign:
        raise PreconditionError(f"foreign elements {sorted(foreign)}")
    rels = {R: [t for t in ts if all(x in s for x in t)] for R, ts in a.relations.items()}
    return Structure(a.vocabulary, s, rels)


def rename(a: Structure, mapping: Mapping[str, str]) -> Structure:
    """Rename elements through an injective mapping."""
    rels = {R: [tuple(mapping[x] for x in t) for t in ts] for R, ts in a.relations.items()}
    return Structure(a.vocabulary, (mapping[x] for x in a.universe), rels)


def expand(a: Structure, extra_vocab: Mapping[str, int], extra_rels: Mapping[str, Iterable]) -> Structure:
    """Add new symbols (must not clash with existing ones)."""
    clash = set(extra_vocab) & set(a.vocabulary)
    if clash:
        raise PreconditionError(f"symbol clash: {sorted(clash)}")
    vocab = {**a.vocabulary, **extra_vocab}
    rels = {**{R: ts for R, ts in a.relations.items()}, **extra_rels}
    return Structure(vocab, a.universe, rels)


def reduct(a: Structure, symbols: Iterable[str]) -> Structure:
    keep = set(symbols)
    return Structure(
        {R: ar for R, ar in a.vocabulary.items() if R in keep},
        a.universe,
        {R: ts for R, ts in a.relations.items() if R in keep},
    )


def gaifman(a: Structure) -> Structure:
    """Graph on the universe; x~y iff x != y and some tuple contains both."""
    edges = set()
    for ts in a.relations.values():
        for t in ts:
            for x in t:
                for y in t:
                    if x != y:
                        edges.add((x, y))
    return Structure({"E": 2}, a.universe, {"E": edges})


def adjacency(a: Structure) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {x: set() for x in a.universe}
    for ts in a.relations.values():
        for t in ts:
            for x in t:
                for y in t:
                    if x != y:
                        adj[x].add(y)
    return adj


def component_sets(a: Structure) -> list[list[str]]:
    """Connected components of gaifman(a), each sorted, ordered by least element."""
    adj = adjacency(a)
    seen: set[str] = set()
    out = []
    for x in a.universe:
        if x in seen:
            continue
        comp, stack = [], [x]
        seen.add(x)
        while stack:
            y = stack.pop()
            comp.append(y)
            for z in adj[y]:
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
        out.append(sorted(comp))
    return out


def components(a: Structure) -> list[Structure]:
    return [induced(a, c) for c in component_sets(a)]


def direct_product(a: Structure, b: Structure) -> Structure:
    require_similar(a, b)
    universe = [naming.product_name(x, y) for x in a.universe for y in b.universe]
    rels = {}
    for R in a.vocabulary:
        rels[R] = [
            tuple(naming.product_name(x, y) for x, y in zip(s, t))
            for s in a.rel(R)
            for t in b.rel(R)
        ]
    return Structure(a.vocabulary, universe, rels)


def disjoint_union(parts: list[tuple[str, Structure]], extra_vocab: Mapping[str, int] | None = None) -> Structure:
    """Disjoint union of tagged structures; element x of part ``tag`` becomes ``tag.x``."""
    vocab: dict[str, int] = dict(extra_vocab or {})
    for _, s in parts:
        for R, ar in s.vocabulary.items():
            if vocab.setdefault(R, ar) != ar:
                raise VocabularyMismatch(f"symbol {R} has two arities")
    universe = []
    rels: dict[str, list] = {R: [] for R in vocab}
    for tag, s in parts:
        universe.extend(naming.tagged(tag, x) for x in s.universe)
        for R, ts in s.relations.items():
            rels[R].extend(tuple(naming.tagged(tag, x) for x in t) for t in ts)
    return Structure(vocab, universe, rels)


def pair(a: Structure, b: Structure) -> Structure:
    """The structure <a, b>: disjoint union marked by unary P_1 and P_2."""
    for s in (a, b):
        if "P_1" in s.vocabulary or "P_2" in s.vocabulary:
            raise PreconditionError("P_1/P_2 already in vocabulary")
    u = disjoint_union([("1", a), ("2", b)], {"P_1": 1, "P_2": 1})
    rels = dict(u.relations)
    rels["P_1"] = [(naming.tagged("1", x),) for x in a.universe]
    rels["P_2"] = [(naming.tagged("2", y),) for y in b.universe]
    return Structure(u.vocabulary, u.universe, rels)


def star_expand(a: Structure) -> Structure:
    """A*: add a singleton colour C_x = {x} for every element x."""
    colors = {naming.color(x): 1 for x in a.universe}
    return expand(a, colors, {naming.color(x): [(x,)] for x in a.universe})


def star_vocabulary(a: Structure) -> dict[str, int]:
    return {**a.vocabulary, **{naming.color(x): 1 for x in a.universe}}


# -- homomorphisms -------------------------------------------------------------

def is_partial_hom(a: Structure, b: Structure, g: Mapping[str, str]) -> bool:
    require_similar(a, b)
    for x, y in g.items():
        if x not in a or y not in b:
            raise PreconditionError(f"foreign element in mapping {x!r}->{y!r}")
    if not g:
        return True
    for R, ts in a.relations.items():
        target = b.rel(R)
        for t in ts:
            if all(x in g for x in t) and tuple(g[x] for x in t) not in target:
                return False
    return True


def is_hom(a: Structure, b: Structure, g: Mapping[str, str]) -> bool:
    return set(g) == set(a.universe) and is_partial_hom(a, b, g)


class _Csp:
    """Homomorphism search a -> b as a CSP with bitmask domains and MAC."""

    def __init__(self, a: Structure, b: Structure, injective: bool = False):
        self.a, self.b = a, b
        self.n, self.nb = len(a.universe), len(b.universe)
        self.injective = injective
        full = (1 << self.nb) - 1
        ai, bi = a.index, b.index
        dom = [full] * self.n
        # (relation, equality pattern) -> projected b-tuples indexed by first value
        projections: dict[tuple, dict[int, list[tuple[int, ...]]]] = {}

        def projected(R: str, vs: tuple[int, ...], scope: tuple[int, ...]):
            pos = {v: k for k, v in enumerate(scope)}
            pattern = tuple(pos[v] for v in vs)
            key = (R, pattern)
            got = projections.get(key)
            if got is None:
                got = {}
                seen = set()
                for t in b.rel(R):
                    vals: list = [None] * len(scope)
                    for k, y in zip(pattern, t):
                        w = bi[y]
                        if vals[k] is None:
                            vals[k] = w
                        elif vals[k] != w:
                            break
                    else:
                        tv = tuple(vals)
                        if tv not in seen:
                            seen.add(tv)
                            got.setdefault(tv[0], []).append(tv)
                projections[key] = got
            return got

        # scope (sorted distinct vars) -> set of allowed tuples over that scope
        allowed: dict[tuple[int, ...], set[tuple[int, ...]]] = {}
        self.dead = False
        scoped = []
        for R, ts in a.relations.items():
            for t in ts:
                vs = tuple(ai[x] for x in t)
                scoped.append((R, vs, tuple(sorted(set(vs)))))
        # single-variable constraints first, so later projections can be filtered
        for R, vs, scope in scoped:
            if len(scope) == 1:
                mask = 0
                for w in projected(R, vs, scope):
                    mask |= 1 << w
                dom[scope[0]] &= mask
        for R, vs, scope in scoped:
            if len(scope) == 1:
                continue
            index = projected(R, vs, scope)
            proj = set()
            m = dom[scope[0]]
            while m:
                low = m & -m
                m ^= low
                for tv in index.get(low.bit_length() - 1, ()):
                    if all((dom[v] >> w) & 1 for v, w in zip(scope[1:], tv[1:])):
                        proj.add(tv)
            if scope in allowed:
                allowed[scope] &= proj
            else:
                allowed[scope] = proj
        self.dom0 = dom
        self.cons = []
        self.by_var: list[list[int]] = [[] for _ in range(self.n)]
        for scope, tuples in sorted(allowed.items()):
            idx = len(self.cons)
            if len(scope) == 2:
                fw: dict[int, int] = {}
                bw: dict[int, int] = {}
                for v, w in tuples:
                    fw[v] = fw.get(v, 0) | 1 << w
                    bw[w] = bw.get(w, 0) | 1 << v
                self.cons.append((scope, fw, bw))
            else:
                self.cons.append((scope, sorted(tuples), None))
            for v in scope:
                self.by_var[v].append(idx)

    def _revise(self, D: list[int], ci: int) -> list[int] | None:
        """Narrow domains of constraint ci; return changed vars or None on wipe-out."""
        scope, data, back = self.cons[ci]
        changed = []
        if back is not None:
            x, y = scope
            dx, dy = D[x], D[y]
            sy = 0
            m = dx
            while m:
                low = m & -m
                sy |= data.get(low.bit_length() - 1, 0)
                m ^= low
            ny = dy & sy
            sx = 0
            m = ny
            while m:
                low = m & -m
                sx |= back.get(low.bit_length() - 1, 0)
                m ^= low
            nx = dx & sx
            if nx == 0 or ny == 0:
                return None
            if nx != dx:
                D[x] = nx
                changed.append(x)
            if ny != dy:
                D[y] = ny
                changed.append(y)
            return changed
        sup = [0] * len(scope)
        for t in data:
            if all((D[v] >> w) & 1 for v, w in zip(scope, t)):
                for k, w in enumerate(t):
                    sup[k] |= 1 << w
        for k, v in enumerate(scope):
            nd = D[v] & sup[k]
            if nd == 0:
                return None
            if nd != D[v]:
                D[v] = nd
                changed.append(v)
        return changed

    def propagate(self, D: list[int], start: Iterable[int] | None) -> bool:
        if start is None:
            queue = list(range(len(self.cons)))
        else:
            queue = sorted({c for v in start for c in self.by_var[v]})
        pending = set(queue)
        while queue:
            ci = queue.pop()
            pending.discard(ci)
            changed = self._revise(D, ci)
            if changed is None:
                return False
            for v in changed:
                for cj in self.by_var[v]:
                    if cj != ci and cj not in pending:
                        pending.add(cj)
                        queue.append(cj)
        return True

    def solve(self, variables: list[int], D: list[int], budget: list[int] | None) -> Iterator[list[int]]:
        """Yield complete domain vectors (all singletons on ``variables``) in lex order."""
        if not variables:
            yield D
            return
        doms = [D]
        cands = [D[variables[0]]]
        level = 0
        depth = len(variables)
        while level >= 0:
            c = cands[level]
            if c == 0:
                doms.pop()
                cands.pop()
                level -= 1
                continue
            low = c & -c
            cands[level] = c ^ low
            if budget is not None:
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceeded("homomorphism search exhausted its step budget")
            x = variables[level]
            nd = doms[level][:]
            nd[x] = low
            ok = True
            if self.injective:
                touched = [x]
                for v in variables[level + 1:]:
                    if nd[v] & low:
                        nd[v] &= ~low
                        if nd[v] == 0:
                            ok = False
                            break
                        touched.append(v)
                ok = ok and self.propagate(nd, touched)
            else:
                ok = self.propagate(nd, [x])
            if not ok:
                continue
            if level + 1 == depth:
                yield nd
                continue
            doms.append(nd)
            cands.append(nd[variables[level + 1]])
            level += 1


def _components_idx(a: Structure) -> list[list[int]]:
    ai = a.index
    return [[ai[x] for x in comp] for comp in component_sets(a)]


def find_hom(
    a: Structure,
    b: Structure,
    budget: int | None = None,
    fixed: Mapping[str, str] | None = None,
) -> dict[str, str] | None:
    """Lexicographically least homomorphism a -> b (canonical order), or None.

    Raises BudgetExceeded when ``budget`` search steps do not suffice.
    """
    require_similar(a, b)
    csp = _Csp(a, b)
    D = csp.dom0[:]
    for x, y in (fixed or {}).items():
        if x not in a or y not in b:
            raise PreconditionError(f"foreign element in fixed mapping {x!r}->{y!r}")
        D[a.index[x]] &= 1 << b.index[y]
    if any(d == 0 for d in D) or not csp.propagate(D, None):
        return None
    counter = [budget] if budget is not None else None
    # components are independent: solving each separately keeps lex-leastness
    for comp in _components_idx(a):
        sol = next(csp.solve(comp, D, counter), None)
        if sol is None:
            return None
        for v in comp:
            D[v] = sol[v]
    return {x: b.universe[D[i].bit_length() - 1] for i, x in enumerate(a.universe)}


def iter_homs(a: Structure, b: Structure, injective: bool = False) -> Iterator[dict[str, str]]:
    """All homomorphisms a -> b in lexicographic order."""
    require_similar(a, b)
    csp = _Csp(a, b, injective=injective)
    D = csp.dom0[:]
    if any(d == 0 for d in D) or not csp.propagate(D, None):
        return
    for sol in csp.solve(list(range(csp.n)), D, None):
        yield {x: b.universe[sol[i].bit_length() - 1] for i, x in enumerate(a.universe)}


def endomorphisms_bruteforce(a: Structure) -> Iterator[dict[str, str]]:
    """Every map A -> A that is a homomorphism, by plain enumeration."""
    for values in product(a.universe, repeat=len(a.universe)):
        g = dict(zip(a.universe, values))
        if is_partial_hom(a, a, g):
            yield g


def _retraction(a: Structure) -> dict[str, str] | None:
    """A non-injective endomorphism of a, if any (canonical choice)."""
    for x in a.universe:
        rest = [y for y in a.universe if y != x]
        if not rest:
            return None
        h = find_hom(a, induced(a, rest))
        if h is not None:
            return h
    return None


def is_core(a: Structure, size_guard: int | None = None) -> bool:
    """True iff every endomorphism is injective.

    An endomorphism of a finite structure is non-injective iff it misses an
    element, so the search tries a -> a minus x for each x.
    """
    check_guard("core", len(a), size_guard, "structure")
    return _retraction(a) is None


def core(a: Structure, size_guard: int | None = None) -> Structure:
    check_guard("core", len(a), size_guard, "structure")
    while True:
        h = _retraction(a)
        if h is None:
            return a
        a = induced(a, set(h.values()))


def find_isomorphism(a: Structure, b: Structure, size_guard: int | None = None) -> dict[str, str] | None:
    """Bijective map preserving and reflecting every relation, or None."""
    if not a.similar(b) or len(a) != len(b):
        return None
    check_guard("iso", len(a), size_guard, "structure")
    for R in a.vocabulary:
        if len(a.rel(R)) != len(b.rel(R)):
            return None
    sig_a, sig_b = _signatures(a), _signatures(b)
    if sorted(sig_a.values()) != sorted(sig_b.values()):
        return None
    csp = _Csp(a, b, injective=True)
    D = csp.dom0[:]
    for x, s in sig_a.items():
        mask = 0
        for y, t in sig_b.items():
            if s == t:
                mask |= 1 << b.index[y]
        D[a.index[x]] &= mask
    if any(d == 0 for d in D) or not csp.propagate(D, None):
        return None
    # an injective tuple-preserving map with equal tuple counts is an isomorphism
    for sol in csp.solve(list(range(csp.n)), D, None):
        return {x: b.universe[sol[i].bit_length() - 1] for i, x in enumerate(a.universe)}
    return None


def _signatures(s: Structure) -> dict[str, tuple]:
    counts: dict[str, dict] = {x: {} for x in s.universe}
    for R, ts in s.relations.items():
        for t in ts:
            for k, x in enumerate(t):
                key = (R, k, tuple(t.index(y) for y in t))
                counts[x][key] = counts[x].get(key, 0) + 1
    return {x: tuple(sorted(c.items())) for x, c in counts.items()}


def is_isomorphic(a: Structure, b: Structure) -> bool:
    return find_isomorphism(a, b) is not None
