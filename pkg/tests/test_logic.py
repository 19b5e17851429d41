from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import GuardExceeded, PreconditionError, VocabularyMismatch
from homlab.graphs import RootedForest, complete, complete_tree, height, make_graph, path
from homlab.logic import (
    Atom,
    Exists,
    Interpretation,
    canonical_query,
    canonical_sentence,
    canonical_structure,
    classify_fragment,
    eval_interpretation,
    existential_to_dpp,
    formula_forest,
    free_vars,
    identity_interpretation,
    model_check,
    parse,
    qrank,
    rename_apart,
    to_sexpr,
)
from homlab.relstruct import Structure, find_hom, gaifman, is_isomorphic, star_expand, star_vocabulary

from .oracles import brute_hom_exists, eval_formula
from .strategies import random_existential, random_pp, random_structure, structures

VOCAB = {"E": 2, "C": 1}


def test_parse_and_print_round_trip():
    text = "(exists x (and (atom E x y) (not (atom C x)) (= x y)))"
    assert to_sexpr(parse(text)) == text
    with pytest.raises(PreconditionError):
        parse("(exists x")
    with pytest.raises(PreconditionError):
        parse("(forall x (atom C x))")


def test_quantifier_rank():
    assert qrank(parse("(atom E x y)")) == 0
    assert qrank(parse("(exists x (atom E x x))")) == 1
    assert qrank(parse("(exists x (and (atom C x) (exists y (atom E x y))))")) == 2


def test_fragments():
    assert classify_fragment(parse("(exists x (atom C x))"), 2) == "pp"
    assert classify_fragment(parse("(or (exists x (atom C x)) (exists x (atom D x)))"), 2) == "dpp"
    assert classify_fragment(parse("(exists x (not (atom C x)))"), 2) == "existential"
    assert classify_fragment(parse("(not (exists x (atom C x)))"), 2) == "other"
    assert classify_fragment(parse("(exists x (atom R x x x))"), 2) == "other"


def test_model_check_examples():
    assert model_check(complete(2), parse("(exists x (exists y (atom E x y)))"))
    assert not model_check(make_graph(["a", "b"]), parse("(exists x (atom E x x))"))
    with pytest.raises(PreconditionError):
        model_check(complete(2), parse("(atom E x y)"))
    with pytest.raises(VocabularyMismatch):
        model_check(complete(2), parse("(exists x (atom C x))"))


def test_canonical_structure_examples():
    a = canonical_structure(parse("(exists x (exists y (and (atom E x y) (atom E y x))))"))
    assert a.universe == ("x", "y") and a.rel("E") == {("x", "y"), ("y", "x")}
    c = canonical_structure(parse("(exists x (atom C x))"))
    assert c.universe == ("x",) and c.rel("C") == {("x",)}
    with pytest.raises(PreconditionError):
        canonical_structure(parse("(exists x (not (atom C x)))"))


def test_equalities_are_unified():
    a = canonical_structure(parse("(exists x (exists y (and (atom E x y) (= x y))))"))
    assert a.universe == ("x",) and a.rel("E") == {("x", "x")}


def test_rename_apart():
    f = rename_apart(parse("(and (exists x (atom C x)) (exists x (atom E x x)))"))
    assert to_sexpr(f) == "(and (exists x (atom C x)) (exists x_2 (atom E x_2 x_2)))"


def test_canonical_query_examples():
    single = RootedForest(path(1), ("1",))
    q = canonical_query(single)
    assert to_sexpr(q) == "(atom C_1 v0)" and qrank(q) == 0
    k2 = RootedForest(complete(2), ("1",))
    q = canonical_query(k2, "1")
    assert to_sexpr(q) == "(and (atom C_1 v0) (exists v1 (and (atom E v0 v1) (atom C_2 v1))))"
    assert qrank(q) == 1
    with pytest.raises(PreconditionError):
        canonical_query(RootedForest.from_parents({"a": None, "b": None}))


def test_canonical_query_round_trip():
    t = complete_tree(2, 2)
    phi = canonical_sentence(t, symmetric=True)
    assert qrank(phi) == height(t) + 1
    a = canonical_structure(phi, star_vocabulary(t.graph))
    ts = star_expand(t.graph)
    assert find_hom(a, ts) is not None and find_hom(ts, a) is not None


def test_existential_to_dpp_example():
    b = Structure({"C": 1}, ["1", "2"], {"C": [("1",)]})
    f = parse("(exists x (not (atom C x)))")
    b2, psi = existential_to_dpp(b, f)
    assert to_sexpr(psi) == "(exists x (atom ~C x))"
    assert b2.rel("~C") == {("2",)}
    assert model_check(b2, psi) and model_check(b, f)
    pp = parse("(exists x (atom C x))")
    assert existential_to_dpp(b, pp) == (b, pp)
    with pytest.raises(PreconditionError):
        existential_to_dpp(b, parse("(not (exists x (atom C x)))"))


def test_dnf_guard():
    parts = " ".join(f"(or (atom C x) (atom D x))" for _ in range(7))
    f = parse(f"(exists x (and {parts}))")
    b = Structure({"C": 1, "D": 1}, ["1"], {})
    with pytest.raises(GuardExceeded):
        existential_to_dpp(b, f)


def test_formula_forest_examples():
    f = formula_forest(parse("(exists x (exists y (atom E x y)))"))
    assert f.roots == ("x",) and f.parent["y"] == "x" and height(f) == 1
    g = formula_forest(parse("(exists x (and (atom C x) (exists y (atom E x y)) (exists z (atom E x z))))"))
    assert g.children("x") == ["y", "z"] and height(g) == 1


def test_identity_interpretation():
    i = identity_interpretation({"E": 2})
    out = eval_interpretation(i, path(3))
    assert is_isomorphic(out, path(3))
    again = Interpretation.from_dict(json.loads(i.to_json()))
    assert again == i


def test_undefined_interpretation():
    i = identity_interpretation({"E": 2})
    empty_u = Interpretation(i.input, i.output, 1, {**i.formulas, "U": (("x",), parse("(not (= x x))"))})
    assert eval_interpretation(empty_u, path(2)) is None


def test_malformed_interpretation():
    i = identity_interpretation({"E": 2})
    bad = Interpretation(i.input, i.output, 2, i.formulas)
    with pytest.raises(PreconditionError):
        eval_interpretation(bad, path(2))
    quant = Interpretation(i.input, i.output, 1, {**i.formulas, "U": (("x",), parse("(exists y (= x y))"))})
    assert any("quantifier-free" in p for p in quant.problems())


@settings(max_examples=40, deadline=None)
@given(structures(4, VOCAB))
def test_identity_interpretation_is_isomorphic(a):
    assert is_isomorphic(eval_interpretation(identity_interpretation(VOCAB), a), a)


def test_canonical_structure_matches_model_checking():
    rng = random.Random(11)
    for _ in range(100):
        f = random_pp(rng, VOCAB, rng.randint(1, 3))
        b = random_structure(rng, rng.randint(1, 3), VOCAB)
        truth = model_check(b, f)
        assert truth == eval_formula(f, b)
        assert truth == (find_hom(canonical_structure(f, VOCAB), b) is not None)


def test_formula_forest_properties():
    rng = random.Random(12)
    for _ in range(100):
        f = random_pp(rng, VOCAB, rng.randint(1, 3))
        forest = formula_forest(f)
        a = canonical_structure(f)
        assert set(forest.universe) == set(a.universe)
        assert forest.closure_contains(gaifman(a))
        assert height(forest) + 1 <= qrank(f)


def test_canonical_queries_on_random_targets():
    rng = random.Random(13)
    for t in (RootedForest(path(1), ("1",)), RootedForest(path(3), ("1",)), complete_tree(1, 2)):
        vocab = star_vocabulary(t.graph)
        ts = star_expand(t.graph)
        for _ in range(40):
            b = random_structure(rng, rng.randint(1, 3), vocab, density=0.6)
            phi = canonical_sentence(t, symmetric=True)
            assert model_check(b, phi) == brute_hom_exists(ts, b)


def test_existential_to_dpp_preserves_truth_and_rank():
    rng = random.Random(14)
    seen = 0
    while seen < 100:
        f = random_existential(rng, VOCAB, rng.randint(1, 3))
        b = random_structure(rng, rng.randint(1, 3), VOCAB)
        try:
            b2, psi = existential_to_dpp(b, f)
        except GuardExceeded:
            continue
        seen += 1
        assert classify_fragment(psi, 2) in ("pp", "dpp")
        assert qrank(psi) <= qrank(f)
        assert model_check(b, f) == model_check(b2, psi) == eval_formula(f, b)
        assert not free_vars(psi)


@given(st.sampled_from(["x", "y"]), st.sampled_from(["C", "E"]))
def test_free_variables(var, rel):
    atom = Atom(rel, (var,) * (1 if rel == "C" else 2))
    assert free_vars(atom) == {var}
    assert free_vars(Exists(var, atom)) == set()
