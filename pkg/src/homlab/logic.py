"""Existential first-order logic over relational structures.

Formulas are small immutable trees.  The concrete syntax is an
s-expression language::

    (exists x (and (atom E x y) (not (atom C x)) (= x y)))

``(or)`` with no parts is false and ``(and)`` with no parts is true.
"""

from __future__ import annotations

import json
import re
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from itertools import product

from . import naming
from .errors import PreconditionError, VocabularyMismatch, check_guard
from .graphs import RootedForest
from .relstruct import Structure, expand


# -- AST ------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    body: Formula


@dataclass(frozen=True)
class And:
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists:
    var: str
    body: Formula


Formula = Atom | Eq | Not | And | Or | Exists

TRUE = And(())
FALSE = Or(())


def conj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, And) else [p])
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, Or) else [p])
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def implies(a: Formula, b: Formula) -> Formula:
    return Or((Not(a), b))


def exists(variables: Iterable[str], body: Formula) -> Formula:
    for x in reversed(list(variables)):
        body = Exists(x, body)
    return body


# -- concrete syntax ------------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse(text: str) -> Formula:
    tokens = _TOKEN.findall(text)
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise PreconditionError("unexpected end of formula")
        tok = tokens[pos]
        pos += 1
        return tok

    def expr() -> Formula:
        if take() != "(":
            raise PreconditionError(f"expected '(' at token {pos}")
        head = take()
        if head == "atom":
            rel = take()
            args = []
            while tokens[pos:pos + 1] != [")"]:
                tok = take()
                if tok == "(":
                    raise PreconditionError("atom arguments must be variables")
                args.append(tok)
            take()
            return Atom(rel, tuple(args))
        if head == "=":
            left, right = take(), take()
            if take() != ")":
                raise PreconditionError("equality takes two variables")
            return Eq(left, right)
        if head in ("and", "or"):
            parts = []
            while tokens[pos:pos + 1] != [")"]:
                if pos >= len(tokens):
                    raise PreconditionError("unbalanced parentheses")
                parts.append(expr())
            take()
            return (And if head == "and" else Or)(tuple(parts))
        if head == "not":
            body = expr()
            if take() != ")":
                raise PreconditionError("not takes one formula")
            return Not(body)
        if head == "implies":
            a, b = expr(), expr()
            if take() != ")":
                raise PreconditionError("implies takes two formulas")
            return implies(a, b)
        if head == "exists":
            var = take()
            body = expr()
            if take() != ")":
                raise PreconditionError("exists takes a variable and one formula")
            return Exists(var, body)
        raise PreconditionError(f"unknown connective {head!r}")

    f = expr()
    if pos != len(tokens):
        raise PreconditionError("trailing tokens after formula")
    return f


def to_sexpr(f: Formula) -> str:
    if isinstance(f, Atom):
        return "(atom " + " ".join((f.rel, *f.args)) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.body)})"
    if isinstance(f, And):
        return "(and" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + to_sexpr(p) for p in f.parts) + ")"
    return f"(exists {f.var} {to_sexpr(f.body)})"


# -- syntactic measures --------------------------------------------------------------

def qrank(f: Formula) -> int:
    if isinstance(f, (Atom, Eq)):
        return 0
    if isinstance(f, Not):
        return qrank(f.body)
    if isinstance(f, (And, Or)):
        return max((qrank(p) for p in f.parts), default=0)
    return 1 + qrank(f.body)


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return set(f.args)
    if isinstance(f, Eq):
        return {f.left, f.right}
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return set().union(*(free_vars(p) for p in f.parts)) if f.parts else set()
    return free_vars(f.body) - {f.var}


def symbols(f: Formula) -> dict[str, int]:
    out: dict[str, int] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            if out.setdefault(g.rel, len(g.args)) != len(g.args):
                raise PreconditionError(f"symbol {g.rel} used with two arities")
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p)
        elif isinstance(g, Exists):
            walk(g.body)

    walk(f)
    return out


def is_existential(f: Formula) -> bool:
    if isinstance(f, (Atom, Eq)):
        return True
    if isinstance(f, Not):
        return isinstance(f.body, (Atom, Eq))
    if isinstance(f, (And, Or)):
        return all(is_existential(p) for p in f.parts)
    return is_existential(f.body)


def is_pp(f: Formula) -> bool:
    if isinstance(f, (Atom, Eq)):
        return True
    if isinstance(f, And):
        return all(is_pp(p) for p in f.parts)
    if isinstance(f, Exists):
        return is_pp(f.body)
    return False


def is_dpp(f: Formula) -> bool:
    if isinstance(f, Or):
        return bool(f.parts) and all(is_pp(p) for p in f.parts)
    return is_pp(f)


def classify_fragment(f: Formula, r: int) -> str:
    """Most specific of pp, dpp, existential; 'other' when none applies or arity exceeds r."""
    if any(ar > r for ar in symbols(f).values()):
        return "other"
    if is_pp(f):
        return "pp"
    if is_dpp(f):
        return "dpp"
    if is_existential(f):
        return "existential"
    return "other"


# -- evaluation -------------------------------------------------------------------

def compile_formula(f: Formula, b: Structure) -> Callable[[dict[str, str]], bool]:
    """Turn f into a predicate on variable assignments over b (quantifiers range over b)."""
    if isinstance(f, Atom):
        if f.rel not in b.vocabulary:
            raise VocabularyMismatch(f"symbol {f.rel!r} is not in the structure's vocabulary")
        if b.vocabulary[f.rel] != len(f.args):
            raise VocabularyMismatch(f"symbol {f.rel!r} has arity {b.vocabulary[f.rel]}")
        rel, args = b.rel(f.rel), f.args
        return lambda env: tuple(env[x] for x in args) in rel
    if isinstance(f, Eq):
        left, right = f.left, f.right
        return lambda env: env[left] == env[right]
    if isinstance(f, Not):
        inner = compile_formula(f.body, b)
        return lambda env: not inner(env)
    if isinstance(f, And):
        parts = [compile_formula(p, b) for p in f.parts]
        return lambda env: all(p(env) for p in parts)
    if isinstance(f, Or):
        parts = [compile_formula(p, b) for p in f.parts]
        return lambda env: any(p(env) for p in parts)
    body = compile_formula(f.body, b)
    var, universe = f.var, b.universe

    def ex(env: dict[str, str]) -> bool:
        saved = env.get(var, _MISSING)
        try:
            for y in universe:
                env[var] = y
                if body(env):
                    return True
            return False
        finally:
            if saved is _MISSING:
                env.pop(var, None)
            else:
                env[var] = saved

    return ex


_MISSING = object()


def model_check(b: Structure, f: Formula) -> bool:
    """Brute-force truth of the sentence f in b."""
    free = free_vars(f)
    if free:
        raise PreconditionError(f"formula has free variables {sorted(free)}")
    return compile_formula(f, b)({})


def satisfies(b: Structure, f: Formula, env: Mapping[str, str]) -> bool:
    missing = free_vars(f) - set(env)
    if missing:
        raise PreconditionError(f"unassigned variables {sorted(missing)}")
    return compile_formula(f, b)(dict(env))


# -- interpretations ----------------------------------------------------------------

@dataclass(frozen=True)
class Interpretation:
    """Quantifier-free interpretation of ``output`` in ``input`` of dimension ``dim``.

    ``formulas`` maps each output symbol and ``U`` to ``(variables, formula)``
    where the variables form ar(R) consecutive blocks of length ``dim``.
    """

    input: Mapping[str, int]
    output: Mapping[str, int]
    dim: int
    formulas: Mapping[str, tuple[tuple[str, ...], Formula]]

    def problems(self) -> list[str]:
        out = []
        if self.dim < 1:
            out.append("dimension must be positive")
        if "U" in self.output:
            out.append("U is reserved for the universe formula")
        for R in ["U", *sorted(self.output)]:
            if R not in self.formulas:
                out.append(f"missing formula for {R}")
                continue
            variables, f = self.formulas[R]
            ar = 1 if R == "U" else self.output[R]
            if len(variables) != ar * self.dim:
                out.append(f"{R}: expected {ar * self.dim} variables, got {len(variables)}")
            if qrank(f) != 0:
                out.append(f"{R}: formula is not quantifier-free")
            extra = free_vars(f) - set(variables)
            if extra:
                out.append(f"{R}: free variables {sorted(extra)} outside the blocks")
            bad = {s for s, a in symbols(f).items() if self.input.get(s) != a}
            if bad:
                out.append(f"{R}: symbols {sorted(bad)} not in the input vocabulary")
        return out

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "input": dict(sorted(self.input.items())),
            "output": dict(sorted(self.output.items())),
            "formulas": {
                R: {"vars": list(vs), "formula": to_sexpr(f)}
                for R, (vs, f) in sorted(self.formulas.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> Interpretation:
        try:
            return cls(
                dict(data["input"]),
                dict(data["output"]),
                int(data["dimension"]),
                {R: (tuple(spec["vars"]), parse(spec["formula"])) for R, spec in data["formulas"].items()},
            )
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed interpretation document: {exc}") from exc


def eval_interpretation(i: Interpretation, a: Structure) -> Structure | None:
    """I(a), or None when the universe formula defines the empty set."""
    problems = i.problems()
    if problems:
        raise PreconditionError("malformed interpretation: " + "; ".join(problems))
    if dict(a.vocabulary) != dict(i.input):
        raise VocabularyMismatch("structure vocabulary differs from the interpretation input")
    w = i.dim
    uvars, uf = i.formulas["U"]
    upred = compile_formula(uf, a)
    universe = []
    for tup in product(a.universe, repeat=w):
        if upred(dict(zip(uvars, tup))):
            universe.append(tup)
    if not universe:
        return None
    name = {t: naming.tuple_name(t) for t in universe}
    rels = {}
    for R, ar in sorted(i.output.items()):
        variables, f = i.formulas[R]
        pred = compile_formula(f, a)
        rows = []
        for combo in product(universe, repeat=ar):
            flat = [x for t in combo for x in t]
            if pred(dict(zip(variables, flat))):
                rows.append(tuple(name[t] for t in combo))
        rels[R] = rows
    return Structure(i.output, name.values(), rels)


def identity_interpretation(vocab: Mapping[str, int]) -> Interpretation:
    formulas: dict[str, tuple[tuple[str, ...], Formula]] = {"U": (("x",), Eq("x", "x"))}
    for R, ar in vocab.items():
        vs = tuple(f"x{k}" for k in range(1, ar + 1))
        formulas[R] = (vs, Atom(R, vs))
    return Interpretation(dict(vocab), dict(vocab), 1, formulas)


# -- normal forms -----------------------------------------------------------------------

def rename_apart(f: Formula) -> Formula:
    """Give every quantifier its own variable (free variables are kept)."""
    used = set(free_vars(f))

    def fresh(x: str) -> str:
        if x not in used:
            used.add(x)
            return x
        k = 2
        while f"{x}_{k}" in used:
            k += 1
        used.add(f"{x}_{k}")
        return f"{x}_{k}"

    def walk(g: Formula, env: dict[str, str]) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel, tuple(env.get(x, x) for x in g.args))
        if isinstance(g, Eq):
            return Eq(env.get(g.left, g.left), env.get(g.right, g.right))
        if isinstance(g, Not):
            return Not(walk(g.body, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(p, env) for p in g.parts))
        y = fresh(g.var)
        return Exists(y, walk(g.body, {**env, g.var: y}))

    return walk(f, {})


@dataclass
class _PPTree:
    """A pp sentence flattened into quantified variables with parents and atoms."""

    order: list[str]                    # variables in quantifier order (pre-order)
    parent: dict[str, str | None]
    atoms: list[Atom]


def _pp_tree(f: Formula) -> _PPTree:
    if not is_pp(f):
        raise PreconditionError("formula is not primitive positive")
    if free_vars(f):
        raise PreconditionError(f"formula has free variables {sorted(free_vars(f))}")
    f = rename_apart(f)
    order: list[str] = []
    parent: dict[str, str | None] = {}
    atoms: list[Atom] = []
    eqs: list[Eq] = []

    def walk(g: Formula, above: str | None) -> None:
        if isinstance(g, Atom):
            atoms.append(g)
        elif isinstance(g, Eq):
            eqs.append(g)
        elif isinstance(g, And):
            for p in g.parts:
                walk(p, above)
        else:
            order.append(g.var)
            parent[g.var] = above
            walk(g.body, g.var)

    walk(f, None)
    depth = {}
    for x in order:
        p = parent[x]
        depth[x] = 0 if p is None else depth[p] + 1
    # unify equal variables onto the shallowest member of each class
    rep = {x: x for x in order}

    def find(x: str) -> str:
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for e in eqs:
        a, b = find(e.left), find(e.right)
        if a != b:
            keep, drop = (a, b) if (depth[a], order.index(a)) <= (depth[b], order.index(b)) else (b, a)
            rep[drop] = keep
    subst = {x: find(x) for x in order}
    kept = [x for x in order if subst[x] == x]
    new_parent: dict[str, str | None] = {}
    for x in kept:
        p = parent[x]
        while p is not None and subst[p] != p:
            p = parent[p]
        new_parent[x] = p
    new_atoms = [Atom(a.rel, tuple(subst[x] for x in a.args)) for a in atoms]
    return _PPTree(kept, new_parent, new_atoms)


def canonical_structure(f: Formula, vocabulary: Mapping[str, int] | None = None) -> Structure:
    """A_phi: variables as elements, atoms as tuples (equalities unified first)."""
    tree = _pp_tree(f)
    vocab = dict(symbols(f))
    if vocabulary is not None:
        for R, ar in vocab.items():
            if vocabulary.get(R) != ar:
                raise VocabularyMismatch(f"symbol {R!r} is not in the target vocabulary")
        vocab = dict(vocabulary)
    if not tree.order:
        raise PreconditionError("sentence quantifies no variables")
    rels: dict[str, list] = {R: [] for R in vocab}
    for a in tree.atoms:
        rels[a.rel].append(a.args)
    return Structure(vocab, tree.order, rels)


def formula_forest(f: Formula) -> RootedForest:
    """Variables joined when their quantifiers are consecutive on a branch."""
    tree = _pp_tree(f)
    return RootedForest.from_parents(tree.parent)


def node_variable(t: RootedForest, node: str) -> str:
    return f"v{t.universe.index(node)}"


def canonical_query(t: RootedForest, root: str | None = None, symmetric: bool = False) -> Formula:
    """phi_{T,r}(x): C_r x and, per child subtree, an E-step to a witness for it.

    The result has the root's variable free.  With ``symmetric`` each step also
    asks for the reverse edge.
    """
    if len(t.roots) != 1:
        raise PreconditionError("canonical queries are built for a single tree")
    if root is None:
        root = t.roots[0]
    if root not in t.universe:
        raise PreconditionError(f"{root!r} is not a node of the tree")
    adj: dict[str, list[str]] = {x: [] for x in t.universe}
    for u, w in sorted(t.graph.rel("E")):
        adj[u].append(w)

    def build(x: str, came_from: str | None) -> Formula:
        vx = node_variable(t, x)
        parts: list[Formula] = [Atom(naming.color(x), (vx,))]
        for y in adj[x]:
            if y == came_from:
                continue
            vy = node_variable(t, y)
            step: list[Formula] = [Atom("E", (vx, vy))]
            if symmetric:
                step.append(Atom("E", (vy, vx)))
            parts.append(Exists(vy, conj(*step, build(y, x))))
        return conj(*parts)

    return build(root, None)


def canonical_sentence(t: RootedForest, root: str | None = None, symmetric: bool = False) -> Formula:
    root = t.roots[0] if root is None else root
    return Exists(node_variable(t, root), canonical_query(t, root, symmetric))


COMPLEMENT_PREFIX = "~"
NEQ = "~="


def _push_negations(f: Formula) -> Formula:
    if isinstance(f, Not):
        if isinstance(f.body, Atom):
            return Atom(COMPLEMENT_PREFIX + f.body.rel, f.body.args)
        return Atom(NEQ, (f.body.left, f.body.right))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_push_negations(p) for p in f.parts))
    if isinstance(f, Exists):
        return Exists(f.var, _push_negations(f.body))
    return f


def _dnf(f: Formula, limit: int) -> list[Formula]:
    if isinstance(f, (Atom, Eq)):
        return [f]
    if isinstance(f, Or):
        out: list[Formula] = []
        for p in f.parts:
            out.extend(_dnf(p, limit))
            check_guard("dnf", len(out), limit, "disjunct count")
        return out
    if isinstance(f, And):
        combos: list[list[Formula]] = [[]]
        for p in f.parts:
            options = _dnf(p, limit)
            combos = [c + [o] for c in combos for o in options]
            check_guard("dnf", len(combos), limit, "disjunct count")
        return [conj(*c) if c else TRUE for c in combos]
    return [Exists(f.var, d) for d in _dnf(f.body, limit)]


def existential_to_dpp(a: Structure, f: Formula, dnf_guard: int | None = None) -> tuple[Structure, Formula]:
    """Replace negated atoms by complement symbols and pull disjunctions outward.

    ``~R`` is interpreted by the complement of R, and ``~=`` by the
    complement of the diagonal.  Only symbols that occur negated are added.
    """
    if not is_existential(f):
        raise PreconditionError("formula is not existential")
    if free_vars(f):
        raise PreconditionError(f"formula has free variables {sorted(free_vars(f))}")
    for R, ar in symbols(f).items():
        if a.vocabulary.get(R) != ar:
            raise VocabularyMismatch(f"symbol {R!r} is not in the structure's vocabulary")
    f = rename_apart(f)
    negated: set[str] = set()

    def scan(g: Formula) -> None:
        if isinstance(g, Not):
            negated.add(g.body.rel if isinstance(g.body, Atom) else NEQ)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                scan(p)
        elif isinstance(g, Exists):
            scan(g.body)

    scan(f)
    extra_vocab, extra_rels = {}, {}
    for R in sorted(negated):
        if R == NEQ:
            extra_vocab[NEQ] = 2
            extra_rels[NEQ] = [(x, y) for x in a.universe for y in a.universe if x != y]
        else:
            ar = a.vocabulary[R]
            extra_vocab[COMPLEMENT_PREFIX + R] = ar
            present = a.rel(R)
            extra_rels[COMPLEMENT_PREFIX + R] = [
                t for t in product(a.universe, repeat=ar) if t not in present
            ]
    a2 = expand(a, extra_vocab, extra_rels) if extra_vocab else a
    disjuncts = _dnf(_push_negations(f), dnf_guard)
    return a2, disj(*disjuncts) if len(disjuncts) != 1 else disjuncts[0]


def disjuncts(f: Formula) -> list[Formula]:
    return list(f.parts) if isinstance(f, Or) else [f]


def atoms_of(f: Formula) -> list[Atom]:
    out: list[Atom] = []

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            out.append(g)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p)
        elif isinstance(g, Exists):
            walk(g.body)

    walk(f)
    return out


def variables_of(f: Formula) -> Sequence[str]:
    out: list[str] = []

    def walk(g: Formula) -> None:
        if isinstance(g, Exists):
            out.append(g.var)
            walk(g.body)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p)

    walk(f)
    return out
