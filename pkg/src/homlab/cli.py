"""Command-line entry point: ``homlab <command> ...``.

Exit status 0 means the computation finished (and a decision was positive),
1 means a negative decision, 2 means a usage, input, or guard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import decon, formats, games, graphs, logic, reduce
from .errors import DEFAULT_GUARDS, BudgetExceeded, HomlabError
from .relstruct import core, find_hom

EVIDENCE_HINT = (
    "facts are assertions about a graph class; per-graph evidence: "
    "'homlab invariants --in G' (tree depth, treewidth, pathwidth, stack profile)"
)


class _Out:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, text: str, data=None) -> None:
        if self.as_json and data is not None:
            print(json.dumps(data, sort_keys=False))
        else:
            print(text)


def _decision(out: _Out, ok: bool, yes: str, no: str, data=None) -> int:
    payload = {"result": ok, **(data or {})}
    out.emit(yes if ok else no, payload)
    return 0 if ok else 1


# -- command handlers ----------------------------------------------------------------

def cmd_hom(args, out: _Out) -> int:
    a, b = formats.load_structure(args.source), formats.load_structure(args.target)
    h = find_hom(a, b, budget=args.budget)
    if h is None:
        return _decision(out, False, "", "no homomorphism")
    return _decision(out, True, json.dumps(h), "", {"map": h})


def cmd_core(args, out: _Out) -> int:
    c = core(formats.load_structure(args.input))
    print(c.to_json())
    return 0


def cmd_invariants(args, out: _Out) -> int:
    g = formats.load_graph(args.input)
    td, _ = graphs.tree_depth(g)
    data = {
        "tree_depth": td,
        "treewidth": graphs.treewidth(g),
        "pathwidth": graphs.pathwidth(g),
        "stack_profile": graphs.stack_profile(g, args.dmax, args.k, budget=args.budget),
        "k": args.k,
    }
    out.emit("\n".join(f"{k} {v}" for k, v in data.items()), data)
    return 0


def cmd_decon(args, out: _Out) -> int:
    if args.action == "validate":
        d = formats.load_deconstruction(args.input)
        problems = decon.validate(d)
        text = "valid" if not problems else "\n".join(problems)
        out.emit(text, {"valid": not problems, "problems": problems})
        return 0 if not problems else 1
    if args.action == "width":
        d = formats.load_deconstruction(args.input)
        w = decon.width(d)
        # both conventions: union of adjacent bags, and largest bag minus one
        out.emit(str(w), {"width": w, "max_bag_minus_one": decon.max_bag(d) - 1})
        return 0
    if args.action == "compose":
        d = decon.compose(formats.load_deconstruction(args.first), formats.load_deconstruction(args.second))
        print(json.dumps(d.to_dict()))
        return 0
    if args.action == "build-td":
        t = formats.load_forest(args.tree, args.roots)
        _, d, w = decon.build_td_deconstruction(t, args.d, args.k)
        print(json.dumps({**d.to_dict(), "width": w}) if args.json else json.dumps(d.to_dict()))
        return 0
    if args.action == "from-minor":
        m, g = formats.load_graph(args.minor), formats.load_graph(args.graph)
        with open(args.map) as fh:
            mu = json.load(fh)
        print(json.dumps(decon.from_minor_map(m, g, mu).to_dict()))
        return 0
    raise AssertionError(args.action)


def cmd_game(args, out: _Out) -> int:
    if args.action == "wins":
        a, b = formats.load_structure(args.source), formats.load_structure(args.target)
        v = games.parse_vector(args.vector)
        ok, extra = games.duplicator_wins(a, b, v, strategy=args.json)
        data = {}
        if args.json:
            data = {"strategy": extra.to_dict()} if ok else {"losing_prefix": extra}
        return _decision(out, ok, "duplicator wins", "spoiler wins", data)
    if args.action == "solves":
        a = formats.load_structure(args.input)
        ok, h = games.v_game_solves(a, games.parse_vector(args.vector), budget=args.budget)
        return _decision(out, ok, "true", "false", {"witness": h})
    if args.action == "unfold":
        u = games.build_unfolding(formats.load_structure(args.input), games.parse_vector(args.vector))
        if args.json:
            bags = {k: sorted(v) for k, v in u.named_bags().items()}
            print(json.dumps({"structure": u.structure.to_dict(), "bags": bags}))
        else:
            print(u.structure.to_json())
        return 0
    if args.action == "min-pebbles":
        n = games.min_pebbles_unary(formats.load_structure(args.input), args.max)
        if n is None:
            out.emit(f"none up to {args.max}", {"min_pebbles": None})
            return 1
        out.emit(str(n), {"min_pebbles": n})
        return 0
    raise AssertionError(args.action)


def cmd_reduce(args, out: _Out) -> int:
    kind = args.kind
    prune = not getattr(args, "full", False)
    if kind == "decon":
        rep = reduce.decon_hom_reduction(
            formats.load_graph(args.graph), formats.load_deconstruction(args.decon),
            formats.load_structure(args.target), prune=prune)
    elif kind == "decomp":
        rep = reduce.decomp_hom_reduction(
            formats.load_structure(args.source), formats.load_deconstruction(args.decon),
            formats.load_structure(args.target), prune=prune)
    elif kind in ("product", "color", "incidence", "graph"):
        fn = {
            "product": reduce.product_reduction,
            "color": reduce.color_trivialize,
            "incidence": reduce.incidence_reduction,
            "graph": reduce.graph_reduction,
        }[kind]
        rep = fn(formats.load_structure(args.source), formats.load_structure(args.target))
    elif kind == "dpp":
        rep = reduce.dpp_to_hom(formats.load_structure(args.target), formats.load_formula(args.formula))
    elif kind == "mc":
        rep = reduce.mc_to_hom_pipeline(
            formats.load_structure(args.target), formats.load_formula(args.formula), args.arity)
    else:  # pragma: no cover - argparse restricts choices
        raise AssertionError(kind)
    if args.decide:
        ok = rep.decide(budget=args.budget)
        return _decision(out, ok, "true", "false", {"digest": rep.digest})
    if args.trace or args.json:
        print(json.dumps(rep.to_dict()))
    else:
        print(rep.target.to_json())
    return 0


def cmd_mc(args, out: _Out) -> int:
    b = formats.load_structure(args.input)
    ok = logic.model_check(b, formats.load_formula(args.formula))
    return _decision(out, ok, "true", "false")


def cmd_classify(args, out: _Out) -> int:
    lvl = decon.hierarchy_level(formats.load_facts(args.facts))
    out.emit(str(lvl), {"level": str(lvl), "rank": lvl.rank})
    if not args.json:
        print(EVIDENCE_HINT, file=sys.stderr)
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, default=None, help="search-node budget for backtracking")
    common.add_argument("--guard", action="append", default=[], metavar="NAME=N",
                        help=f"override a size guard ({', '.join(DEFAULT_GUARDS)})")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="homlab", description="Homomorphism and pebble-game laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("hom", parents=[common], help="find a homomorphism")
    s.add_argument("--from", dest="source", required=True)
    s.add_argument("--to", dest="target", required=True)
    s.set_defaults(func=cmd_hom)

    s = sub.add_parser("core", parents=[common], help="compute the core")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_core)

    s = sub.add_parser("invariants", parents=[common], help="graph width invariants")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--k", type=int, default=2, help="branching for the stack profile")
    s.add_argument("--dmax", type=int, default=3)
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("decon", help="deconstructions")
    dsub = s.add_subparsers(dest="action", required=True)
    for name in ("validate", "width"):
        t = dsub.add_parser(name, parents=[common])
        t.add_argument("--in", dest="input", required=True)
    t = dsub.add_parser("compose", parents=[common])
    t.add_argument("--first", required=True, help="G over H")
    t.add_argument("--second", required=True, help="H over I")
    t = dsub.add_parser("build-td", parents=[common])
    t.add_argument("--tree", required=True)
    t.add_argument("--roots", required=True)
    t.add_argument("--d", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t = dsub.add_parser("from-minor", parents=[common])
    t.add_argument("--minor", required=True)
    t.add_argument("--graph", required=True)
    t.add_argument("--map", required=True, help="JSON object: minor vertex -> branch set")
    s.set_defaults(func=cmd_decon)

    s = sub.add_parser("game", help="pebble games")
    gsub = s.add_subparsers(dest="action", required=True)
    t = gsub.add_parser("wins", parents=[common])
    t.add_argument("--a", dest="source", required=True)
    t.add_argument("--b", dest="target", required=True)
    t.add_argument("--vector", required=True)
    for name in ("solves", "unfold"):
        t = gsub.add_parser(name, parents=[common])
        t.add_argument("--in", dest="input", required=True)
        t.add_argument("--vector", required=True)
    t = gsub.add_parser("min-pebbles", parents=[common])
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--max", type=int, default=5)
    s.set_defaults(func=cmd_game)

    s = sub.add_parser("reduce", help="instance reductions")
    rsub = s.add_subparsers(dest="kind", required=True)
    rcommon = argparse.ArgumentParser(add_help=False, parents=[common])
    rcommon.add_argument("--trace", action="store_true", help="print the full reduction report")
    rcommon.add_argument("--decide", action="store_true", help="solve the produced instance")
    t = rsub.add_parser("decon", parents=[rcommon])
    t.add_argument("--graph", required=True)
    t.add_argument("--decon", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--full", action="store_true", help="keep every partial-hom tuple")
    t = rsub.add_parser("decomp", parents=[rcommon])
    t.add_argument("--source", required=True)
    t.add_argument("--decon", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--full", action="store_true")
    for name in ("product", "color", "incidence", "graph"):
        t = rsub.add_parser(name, parents=[rcommon])
        t.add_argument("--source", required=True)
        t.add_argument("--target", required=True)
    t = rsub.add_parser("dpp", parents=[rcommon])
    t.add_argument("--target", required=True, help="structure to check")
    t.add_argument("--formula", required=True, help="s-expression or file")
    t = rsub.add_parser("mc", parents=[rcommon])
    t.add_argument("--target", required=True)
    t.add_argument("--formula", required=True)
    t.add_argument("--arity", type=int, default=2)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("mc", parents=[common], help="model-check a sentence")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--formula", required=True)
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("classify", parents=[common], help="hierarchy level from class facts")
    s.add_argument("--facts", required=True)
    s.set_defaults(func=cmd_classify)
    return p


def _apply_guards(items: list[str]) -> None:
    if not items:
        return
    merged = dict(x.split("=", 1) for x in os.environ.get("HOMLAB_GUARD", "").split(",") if "=" in x)
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in DEFAULT_GUARDS or not value.isdigit():
            raise HomlabError(f"bad --guard {item!r}; expected NAME=N")
        merged[name] = value
    os.environ["HOMLAB_GUARD"] = ",".join(f"{k}={v}" for k, v in sorted(merged.items()))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    saved = os.environ.get("HOMLAB_GUARD")
    try:
        _apply_guards(args.guard)
        return args.func(args, _Out(args.json))
    except BudgetExceeded as exc:
        print(f"homlab: budget exhausted: {exc}", file=sys.stderr)
    except (HomlabError, ValueError, OSError) as exc:
        print(f"homlab: {exc}", file=sys.stderr)
    finally:
        if saved is None:
            os.environ.pop("HOMLAB_GUARD", None)
        else:
            os.environ["HOMLAB_GUARD"] = saved
    return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
