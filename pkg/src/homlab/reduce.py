"""Instance transformations between homomorphism and model-checking problems.

Every function maps an instance to a homomorphism instance ``source -> target``
whose answer equals the original one.  The result is a :class:`ReductionReport`
that carries the new instance together with a construction trace.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import product

from . import naming
from .decon import Deconstruction, require_valid
from .errors import PreconditionError, VocabularyMismatch, check_guard
from .graphs import RootedForest, is_acyclic, make_graph, require_graph
from .logic import (
    Atom,
    Eq,
    Formula,
    Interpretation,
    _pp_tree,
    canonical_structure,
    classify_fragment,
    conj,
    disjuncts,
    existential_to_dpp,
    implies,
    is_dpp,
    symbols,
    to_sexpr,
)
from .relstruct import (
    Structure,
    component_sets,
    core,
    disjoint_union,
    expand,
    find_hom,
    gaifman,
    is_core,
    star_expand,
    star_vocabulary,
    validate_structure,
)

INERT = "#inert"
LOOP = "#loop"


def digest(*parts: object) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, Structure):
            text = p.to_json()
        elif isinstance(p, Deconstruction):
            text = json.dumps(p.to_dict())
        else:
            text = json.dumps(p, sort_keys=True, default=str)
        h.update(text.encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class ReductionReport:
    """The produced instance ``source -> target`` plus how it was built.

    ``verdict`` is set when the construction already fixes the answer (for
    example when no candidate element exists at all).
    """

    digest: str
    source: Structure
    target: Structure
    trace: Mapping = field(default_factory=dict)
    verdict: bool | None = None
    forest: RootedForest | None = None

    def decide(self, budget: int | None = None) -> bool:
        if self.verdict is not None:
            return self.verdict
        return find_hom(self.source, self.target, budget=budget) is not None

    def to_dict(self) -> dict:
        out = {
            "digest": self.digest,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "trace": self.trace,
        }
        if self.verdict is not None:
            out["verdict"] = self.verdict
        if self.forest is not None:
            out["roots"] = list(self.forest.roots)
        return out


def _report(inputs: tuple, source: Structure, target: Structure, trace: dict, **kw) -> ReductionReport:
    problems = validate_structure(target)
    if problems:  # pragma: no cover - construction bug guard
        raise AssertionError("reduction produced an invalid structure: " + "; ".join(problems))
    return ReductionReport(digest(*inputs), source, target, trace, **kw)


# -- partial-homomorphism tuples ---------------------------------------------------

class _PartialHoms:
    """Partial homomorphisms from a* to b where b interprets the vocabulary of a*."""

    def __init__(self, a: Structure, b: Structure):
        expected = star_vocabulary(a)
        if dict(b.vocabulary) != expected:
            raise VocabularyMismatch("target must interpret exactly the vocabulary of the starred source")
        self.a, self.b = a, b
        self.allowed = {x: frozenset(y for (y,) in b.rel(naming.color(x))) for x in a.universe}
        self.tuples = [(R, t) for R in sorted(a.vocabulary) for t in a.sorted_tuples(R)]
        self._inside: dict[frozenset, list] = {}

    def inside(self, dom: frozenset) -> list:
        got = self._inside.get(dom)
        if got is None:
            got = [(R, t) for R, t in self.tuples if set(t) <= dom]
            self._inside[dom] = got
        return got

    def check(self, gs: Sequence[str], bs: Sequence[str]) -> dict[str, str] | None:
        m: dict[str, str] = {}
        for x, y in zip(gs, bs):
            if m.setdefault(x, y) != y or y not in self.allowed[x]:
                return None
        for R, t in self.inside(frozenset(m)):
            if tuple(m[x] for x in t) not in self.b.rel(R):
                return None
        return m

    def for_listing(self, listing: Sequence[str]) -> list[tuple[str, ...]]:
        """All b-tuples completing ``listing`` to a partial homomorphism."""
        distinct = sorted(set(listing))
        out = []
        for choice in product(*(sorted(self.allowed[x]) for x in distinct)):
            m = dict(zip(distinct, choice))
            if self.check(distinct, choice) is not None:
                out.append(tuple(m[x] for x in listing))
        return out


def ph_name(gs: Sequence[str], bs: Sequence[str]) -> str:
    return naming.tuple_name([naming.tuple_name(gs), naming.tuple_name(bs)])


def bag_listing(bag: Iterable[str], w: int) -> tuple[str, ...]:
    """Bag elements in canonical order, padded to length w with the least element."""
    items = sorted(bag)
    return tuple(items + [items[0]] * (w - len(items)))


def _host_split(host: Structure, bags: Mapping[str, frozenset]) -> tuple[list[str], list[str]]:
    """Host vertices with nonempty bags and those in all-empty components."""
    full, empty = [], []
    for comp in component_sets(host):
        sizes = [len(bags.get(h, ())) for h in comp]
        if all(sizes):
            full.extend(comp)
        elif not any(sizes):
            empty.extend(comp)
        else:
            bad = [h for h in comp if not bags.get(h)]
            raise PreconditionError(
                f"host component of {comp[0]!r} mixes empty and nonempty bags (empty at {bad[0]!r})"
            )
    return sorted(full), sorted(empty)


def _ph_target(
    a: Structure,
    host: Structure,
    bags: Mapping[str, frozenset],
    b: Structure,
    prune: bool,
    ph_guard: int | None,
) -> tuple[Structure, dict]:
    ph = _PartialHoms(a, b)
    full, empty = _host_split(host, bags)
    w = max((len(bags[h]) for h in full), default=0)
    listings = {h: bag_listing(bags[h], w) for h in full}
    trace: dict = {
        "w": w,
        "listings": {h: list(v) for h, v in listings.items()},
        "padded": sorted(h for h in full if len(bags[h]) < w),
        "empty_hosts": empty,
        "pruned": prune,
        "special": [],
    }
    elements: dict[tuple, str] = {}
    if w:
        if prune:
            pools = sorted(set(listings.values()))
            check_guard("ph", sum(len(b.universe) ** len(set(p)) for p in pools), ph_guard, "partial-hom candidates")
            for gs in pools:
                for bs in ph.for_listing(gs):
                    elements[(gs, bs)] = ph_name(gs, bs)
        else:
            check_guard("ph", (len(a.universe) * len(b.universe)) ** w, ph_guard, "partial-hom candidates")
            for gs in product(a.universe, repeat=w):
                for bs in ph.for_listing(gs):
                    elements[(gs, bs)] = ph_name(gs, bs)
    keys = sorted(elements)
    edges = []
    for k1 in keys:
        for k2 in keys:
            if ph.check(k1[0] + k2[0], k1[1] + k2[1]) is not None:
                edges.append((elements[k1], elements[k2]))
    colours: dict[str, list] = {naming.color(h): [] for h in host.universe}
    by_listing: dict[tuple, list[str]] = {}
    for (gs, bs), name in elements.items():
        by_listing.setdefault(gs, []).append(name)
    for h in full:
        colours[naming.color(h)] = [(n,) for n in by_listing.get(listings[h], [])]
    universe = list(elements.values())
    if empty:
        universe.append(LOOP)
        edges.append((LOOP, LOOP))
        for h in empty:
            colours[naming.color(h)] = [(LOOP,)]
        trace["special"].append(LOOP)
    if not universe:
        universe.append(INERT)
        trace["special"].append(INERT)
    vocab = star_vocabulary(host)
    return Structure(vocab, universe, {"E": edges, **colours}), trace


def decon_hom_reduction(
    g: Structure,
    d: Deconstruction,
    b: Structure,
    prune: bool = True,
    ph_guard: int | None = None,
) -> ReductionReport:
    """G* -> B  iff  H* -> B', with B' built from partial-homomorphism tuples.

    With ``prune`` only tuples whose first half is some bag listing are kept;
    every homomorphism from H* lands there, so the answer is unchanged.
    """
    require_graph(g)
    if d.subject != g:
        raise PreconditionError("deconstruction is for a different graph")
    require_valid(d)
    target, trace = _ph_target(g, d.host, d.bags, b, prune, ph_guard)
    return _report((g, d, b, prune), star_expand(d.host), target, trace)


def decomp_hom_reduction(
    a: Structure,
    d: Deconstruction,
    b: Structure,
    prune: bool = True,
    ph_guard: int | None = None,
) -> ReductionReport:
    """A* -> B  iff  H* -> B' for a decomposition over a forest whose bags hold every tuple."""
    if d.mode != "decomposition":
        raise PreconditionError("expected a decomposition")
    if set(d.subject.universe) != set(a.universe):
        raise PreconditionError("decomposition subject has a different universe")
    require_valid(d)
    if not is_acyclic(d.host):
        raise PreconditionError("decomposition host must be a forest")
    for R in sorted(a.vocabulary):
        for t in a.sorted_tuples(R):
            if not any(set(t) <= bag for bag in d.bags.values()):
                raise PreconditionError(f"tuple {R}{t} is not contained in a single bag")
    target, trace = _ph_target(a, d.host, d.bags, b, prune, ph_guard)
    return _report((a, d, b, prune), star_expand(d.host), target, trace)


# -- structure-level reductions -----------------------------------------------------

def product_reduction(a: Structure, b: Structure, core_guard: int | None = None) -> ReductionReport:
    """A* -> B  iff  A -> B' where B' lives on pairs (x, y) with y coloured x."""
    if dict(b.vocabulary) != star_vocabulary(a):
        raise VocabularyMismatch("target must interpret the vocabulary of a*")
    if not is_core(a, core_guard):
        raise PreconditionError("source structure is not a core")
    cand = {
        (x, y): naming.product_name(x, y)
        for x in a.universe
        for (y,) in sorted(b.rel(naming.color(x)))
    }
    rels = {}
    for R in a.vocabulary:
        rows = []
        for s in a.rel(R):
            for t in b.rel(R):
                pairs = tuple(zip(s, t))
                if all(p in cand for p in pairs):
                    rows.append(tuple(cand[p] for p in pairs))
        rels[R] = rows
    trace: dict = {"candidates": len(cand), "special": []}
    verdict = None
    universe = list(cand.values())
    if not universe:
        universe = [INERT]
        trace["special"].append(INERT)
        if a.tuple_count() == 0:
            # a single point with no tuples maps anywhere; the answer is fixed
            verdict = False
    target = Structure(a.vocabulary, universe, rels)
    return _report((a, b), a, target, trace, verdict=verdict)


def color_trivialize(a: Structure, b: Structure, core_guard: int | None = None) -> ReductionReport:
    """A -> B  iff  core(A)* -> B' where every colour of B' is the whole universe."""
    if dict(a.vocabulary) != dict(b.vocabulary):
        raise VocabularyMismatch("structures are not similar")
    c = core(a, core_guard)
    colours = {naming.color(x): 1 for x in c.universe}
    target = expand(b, colours, {R: [(y,) for y in b.universe] for R in colours})
    return _report((a, b), star_expand(c), target, {"core": list(c.universe)})


def incidence_parts(a: Structure) -> tuple[dict, dict]:
    left = {}
    for R in sorted(a.vocabulary):
        for t in a.sorted_tuples(R):
            for i in range(1, len(t) + 1):
                left[(R, t, i)] = naming.tagged("t", naming.join([R, naming.tuple_name(t), str(i)], ":"))
    right = {x: naming.tagged("e", x) for x in a.universe}
    return left, right


def incidence_graph(a: Structure) -> tuple[Structure, list[str], list[str]]:
    """in(a): a vertex per (symbol, tuple, position) and per element."""
    left, right = incidence_parts(a)
    edges = []
    for (R, t, i), v in left.items():
        for j in range(1, len(t) + 1):
            if j != i:
                edges.append((v, left[(R, t, j)]))
        edges.append((v, right[t[i - 1]]))
    g = make_graph([*left.values(), *right.values()], edges)
    return g, sorted(left.values()), sorted(right.values())


def incidence_reduction(a: Structure, b: Structure, arity_guard: int | None = None) -> ReductionReport:
    """A -> B  iff  in(A)* -> B' where B' colours in(B).

    A tuple position (R, a, i) may only go to positions (R, b, i) of the same
    symbol and index.
    """
    if dict(a.vocabulary) != dict(b.vocabulary):
        raise VocabularyMismatch("structures are not similar")
    check_guard("arity", max(a.vocabulary.values(), default=0), arity_guard, "arity")
    ga, _, _ = incidence_graph(a)
    gb, _, _ = incidence_graph(b)
    la, ra = incidence_parts(a)
    lb, rb = incidence_parts(b)
    by_pos: dict[tuple[str, int], list] = {}
    for (R, t, i), v in lb.items():
        by_pos.setdefault((R, i), []).append((v,))
    colours = {}
    for (R, t, i), v in la.items():
        colours[naming.color(v)] = by_pos.get((R, i), [])
    for x, v in ra.items():
        colours[naming.color(v)] = [(y,) for y in rb.values()]
    target = expand(gb, {R: 1 for R in colours}, colours)
    return _report((a, b), star_expand(ga), target, {"left": len(la), "right": len(ra)})


def graph_reduction(a: Structure, b: Structure) -> ReductionReport:
    """graph(A)* -> B  iff  A* -> B' on A x B, tuples kept when distinct entries map to B-edges."""
    g = gaifman(a)
    if dict(b.vocabulary) != star_vocabulary(g):
        raise VocabularyMismatch("target must interpret the vocabulary of graph(a)*")
    name = {(x, y): naming.product_name(x, y) for x in a.universe for y in b.universe}
    E = b.rel("E")
    rels = {}
    for R, ar in a.vocabulary.items():
        rows = []
        for s in a.rel(R):
            for ys in product(b.universe, repeat=ar):
                if all(s[i] == s[j] or (ys[i], ys[j]) in E for i in range(ar) for j in range(ar)):
                    rows.append(tuple(name[p] for p in zip(s, ys)))
        rels[R] = rows
    for x in a.universe:
        rels[naming.color(x)] = [(name[(x, y)],) for (y,) in b.rel(naming.color(x))]
    target = Structure(star_vocabulary(a), name.values(), rels)
    return _report((a, b), star_expand(a), target, {})


# -- model checking to homomorphism ------------------------------------------------------

def _compile_disjunct(b: Structure, f: Formula, prune: bool):
    tree = _pp_tree(f)
    a = canonical_structure(f, b.vocabulary)
    forest = RootedForest.from_parents(tree.parent)
    bags = {t: frozenset(forest.ancestors(t)) for t in forest.universe}
    d = Deconstruction(gaifman(a), forest.graph, bags, "decomposition", forest.roots)
    full = {naming.color(x): 1 for x in a.universe}
    bstar = expand(b, full, {R: [(y,) for y in b.universe] for R in full})
    rep = decomp_hom_reduction(a, d, bstar, prune=prune)
    return forest, rep.target


def dpp_to_hom(
    b: Structure,
    f: Formula,
    product_guard: int | None = None,
    prune: bool = True,
) -> ReductionReport:
    """B |= f  iff  F* -> B' for a disjunction f of pp sentences.

    Each disjunct is compiled to a forest and a target.  For every choice of
    one tree per disjunct the chosen roots are merged, giving one tree of F.
    """
    if not is_dpp(f):
        raise PreconditionError("formula is not a disjunction of pp sentences")
    for R, ar in symbols(f).items():
        if b.vocabulary.get(R) != ar:
            raise VocabularyMismatch(f"symbol {R!r} is not in the structure's vocabulary")
    parts = [_compile_disjunct(b, phi, prune) for phi in disjuncts(f)]
    counts = [len(forest.roots) for forest, _ in parts]
    total = 1
    for c in counts:
        total *= c
    check_guard("product", total, product_guard, "tree product")

    f_parents: dict[str, str | None] = {}
    f_parts: list[tuple[str, Structure]] = []
    for choice in product(*(range(c) for c in counts)):
        jtag = "j" + "_".join(str(j + 1) for j in choice)
        # nodes of the merged tree: 'r' and i.t for non-root nodes t of the chosen tree
        own: dict[str, list[str | None]] = {"r": []}
        parents: dict[str, str | None] = {"r": None}
        for i, (forest, _) in enumerate(parts):
            root = forest.roots[choice[i]]
            for t in forest.subtree(root):
                if t == root:
                    continue
                node = naming.tagged(str(i + 1), t)
                p = forest.parent[t]
                parents[node] = "r" if p == root else naming.tagged(str(i + 1), p)
        for node in parents:
            own[node] = [None] * len(parts)
        for i, (forest, _) in enumerate(parts):
            root = forest.roots[choice[i]]
            own["r"][i] = root
            for t in forest.subtree(root):
                if t != root:
                    own[naming.tagged(str(i + 1), t)][i] = t
        pieces = []
        for i, (forest, bi) in enumerate(parts):
            root_col = bi.rel(naming.color(own["r"][i]))
            rels: dict[str, list] = {"E": [*bi.rel("E"), *((y, y) for (y,) in root_col)]}
            for node, mine in own.items():
                src = mine[i] if mine[i] is not None else own["r"][i]
                rels[naming.color(naming.tagged(jtag, node))] = list(bi.rel(naming.color(src)))
            vocab = {R: (2 if R == "E" else 1) for R in rels}
            pieces.append((str(i + 1), Structure(vocab, bi.universe, rels)))
        f_parts.append((jtag, disjoint_union(pieces)))
        for node, p in parents.items():
            f_parents[naming.tagged(jtag, node)] = None if p is None else naming.tagged(jtag, p)

    forest = RootedForest.from_parents(f_parents)
    vocab = star_vocabulary(forest.graph)
    target = disjoint_union(f_parts, vocab)
    trace = {"disjuncts": len(parts), "trees": counts, "merged": total}
    return _report((b, to_sexpr(f)), star_expand(forest.graph), target, trace, forest=forest)


def mc_to_hom_pipeline(b: Structure, f: Formula, r: int, product_guard: int | None = None) -> ReductionReport:
    """Existential sentence to a homomorphism instance from a starred forest."""
    if classify_fragment(f, r) == "other":
        raise PreconditionError(f"formula is not existential with arity at most {r}")
    b2, psi = existential_to_dpp(b, f)
    rep = dpp_to_hom(b2, psi, product_guard)
    trace = {**rep.trace, "added": sorted(set(b2.vocabulary) - set(b.vocabulary))}
    return ReductionReport(digest(b, to_sexpr(f), r), rep.source, rep.target, trace, forest=rep.forest)


# -- the definability witness -------------------------------------------------------------

def bag_symbol(h: str) -> str:
    return f"B_{h}"


def _ph_formula(xs: Sequence[str], ys: Sequence[str], colours: Sequence[str]) -> Formula:
    parts: list[Formula] = [Atom("P_1", (x,)) for x in xs] + [Atom("P_2", (y,)) for y in ys]
    n = len(xs)
    for i in range(n):
        for j in range(n):
            parts.append(implies(Eq(xs[i], xs[j]), Eq(ys[i], ys[j])))
            parts.append(implies(Atom("E", (xs[i], xs[j])), Atom("E", (ys[i], ys[j]))))
    for i in range(n):
        for c in colours:
            parts.append(implies(Atom(c, (xs[i],)), Atom(c, (ys[i],))))
    return conj(*parts)


def theorem48_interpretation(g: Structure, d: Deconstruction) -> tuple[Structure, Interpretation]:
    """G~ and a dimension-2w interpretation producing the unpruned B' from <G~, B>."""
    require_graph(g)
    if d.subject != g:
        raise PreconditionError("deconstruction is for a different graph")
    require_valid(d)
    empty = [h for h in d.host.universe if not d.bag(h)]
    if empty:
        raise PreconditionError(f"bag of {empty[0]!r} is empty")
    w = max(len(d.bag(h)) for h in d.host.universe)
    gstar = star_expand(g)
    extra = {bag_symbol(h): w for h in d.host.universe}
    gt = expand(gstar, extra, {bag_symbol(h): [bag_listing(d.bag(h), w)] for h in d.host.universe})
    colours = [naming.color(x) for x in g.universe]
    xs = tuple(f"x{i}" for i in range(1, w + 1))
    ys = tuple(f"y{i}" for i in range(1, w + 1))
    xs2 = tuple(f"u{i}" for i in range(1, w + 1))
    ys2 = tuple(f"v{i}" for i in range(1, w + 1))
    formulas: dict[str, tuple[tuple[str, ...], Formula]] = {
        "U": (xs + ys, _ph_formula(xs, ys, colours)),
        "E": (xs + ys + xs2 + ys2, _ph_formula(xs + xs2, ys + ys2, colours)),
    }
    for h in d.host.universe:
        formulas[naming.color(h)] = (xs + ys, Atom(bag_symbol(h), xs))
    input_vocab = {**gt.vocabulary, "P_1": 1, "P_2": 1}
    output = star_vocabulary(d.host)
    return gt, Interpretation(input_vocab, output, 2 * w, formulas)


__all__ = [
    "ReductionReport",
    "bag_listing",
    "color_trivialize",
    "decomp_hom_reduction",
    "decon_hom_reduction",
    "dpp_to_hom",
    "graph_reduction",
    "incidence_graph",
    "incidence_reduction",
    "mc_to_hom_pipeline",
    "product_reduction",
    "theorem48_interpretation",
]
