"""Brute-force reference implementations used as test oracles.

These deliberately avoid the library's search code: every answer comes from
plain enumeration over maps, orderings, or parent functions.
"""

from __future__ import annotations

from itertools import permutations, product


def rels(s):
    return {R: set(s.rel(R)) for R in s.vocabulary}


def brute_homs(a, b):
    """Yield every homomorphism a -> b as a dict."""
    A, B = list(a.universe), list(b.universe)
    ra, rb = rels(a), rels(b)
    for image in product(B, repeat=len(A)):
        m = dict(zip(A, image))
        if all(tuple(m[x] for x in t) in rb[R] for R, ts in ra.items() for t in ts):
            yield m


def brute_hom_exists(a, b) -> bool:
    return next(brute_homs(a, b), None) is not None


def brute_is_core(a) -> bool:
    n = len(a.universe)
    return all(len(set(m.values())) == n for m in brute_homs(a, a))


def brute_isomorphic(a, b) -> bool:
    if len(a.universe) != len(b.universe) or dict(a.vocabulary) != dict(b.vocabulary):
        return False
    ra, rb = rels(a), rels(b)
    for perm in permutations(b.universe):
        m = dict(zip(a.universe, perm))
        if all({tuple(m[x] for x in t) for t in ra[R]} == rb[R] for R in ra):
            return True
    return False


def _adj(g):
    adj = {x: set() for x in g.universe}
    for u, v in g.rel("E"):
        adj[u].add(v)
    return adj


def brute_treewidth(g) -> int:
    """Minimum over elimination orderings of the largest eliminated degree."""
    base = _adj(g)
    best = len(base) - 1
    for order in permutations(base):
        adj = {x: set(ns) for x, ns in base.items()}
        worst = 0
        for x in order:
            ns = adj.pop(x)
            worst = max(worst, len(ns))
            for u in ns:
                adj[u].discard(x)
                adj[u] |= ns - {u}
            if worst >= best:
                break
        best = min(best, worst)
    return max(best, 0)


def brute_pathwidth(g) -> int:
    """Vertex separation number minimised over all linear orderings."""
    adj = _adj(g)
    best = len(adj)
    for order in permutations(adj):
        pos = {x: i for i, x in enumerate(order)}
        worst = 0
        for i in range(len(order)):
            live = sum(1 for x in order[: i + 1] if any(pos[y] > i for y in adj[x]))
            worst = max(worst, live)
        best = min(best, worst)
    return best


def brute_tree_depth(g) -> int:
    """Least height of a rooted forest (parent function) whose closure holds every edge."""
    xs = list(g.universe)
    edges = [(u, v) for u, v in g.rel("E") if u < v]
    best = len(xs)
    for choice in product([None, *xs], repeat=len(xs)):
        parent = dict(zip(xs, choice))
        depth = {}
        ok = True
        for x in xs:
            seen, y, d = set(), x, 0
            while parent[y] is not None:
                if y in seen or parent[y] == y:
                    ok = False
                    break
                seen.add(y)
                y = parent[y]
                d += 1
                if d > len(xs):
                    ok = False
                    break
            if not ok:
                break
            depth[x] = d
        if not ok:
            continue
        h = max(depth.values())
        if h >= best:
            continue

        def anc(x):
            out = {x}
            while parent[x] is not None:
                x = parent[x]
                out.add(x)
            return out

        if all(u in anc(v) or v in anc(u) for u, v in edges):
            best = h
    return best


def eval_formula(f, b, env=None) -> bool:
    """Independent recursive evaluator for existential formulas."""
    from homlab.logic import And, Atom, Eq, Exists, Not, Or

    env = dict(env or {})
    if isinstance(f, Atom):
        return tuple(env[x] for x in f.args) in b.rel(f.rel)
    if isinstance(f, Eq):
        return env[f.left] == env[f.right]
    if isinstance(f, Not):
        return not eval_formula(f.body, b, env)
    if isinstance(f, And):
        return all(eval_formula(p, b, env) for p in f.parts)
    if isinstance(f, Or):
        return any(eval_formula(p, b, env) for p in f.parts)
    assert isinstance(f, Exists)
    return any(eval_formula(f.body, b, {**env, f.var: y}) for y in b.universe)


def brute_minor_exists(g, m) -> bool:
    """Try every assignment of host vertices to minor vertices (or to nothing)."""
    from homlab.graphs import is_minor_map

    G, M = list(g.universe), list(m.universe)
    for owner in product([None, *M], repeat=len(G)):
        mu = {x: [v for v, o in zip(G, owner) if o == x] for x in M}
        if all(mu.values()) and is_minor_map(m, g, mu):
            return True
    return False


def brute_property_P(f, d: int, k: int, x=None) -> bool:
    """P(d,k) straight from the recursive definition, with proper descendants."""
    from itertools import combinations

    if x is None:
        return any(brute_property_P(f, d, k, r) for r in f.roots)
    if d == 0:
        return True
    below = [y for y in f.subtree(x) if y != x and brute_property_P(f, d - 1, k, y)]
    for combo in combinations(below, k):
        if all(not f.is_ancestor(u, v) and not f.is_ancestor(v, u) for u, v in combinations(combo, 2)):
            return True
    return False


def brute_duplicator_wins(a, b, v) -> bool:
    """The existential v-game straight from its rules, without any pruning."""
    from itertools import combinations

    A, B = list(a.universe), list(b.universe)
    ra, rb = rels(a), rels(b)

    def partial_ok(m):
        return all(
            tuple(m[x] for x in t) in rb[R]
            for R, ts in ra.items()
            for t in ts
            if all(x in m for x in t)
        )

    def play(i, m):
        if i == len(v):
            return True
        free = [x for x in A if x not in m]
        for size in range(0, min(v[i], len(free)) + 1):
            for S in combinations(free, size):
                if not any(
                    partial_ok(ext) and play(i + 1, ext)
                    for ext in ({**m, **dict(zip(S, img))} for img in product(B, repeat=len(S)))
                ):
                    return False
        return True

    return play(0, {})
