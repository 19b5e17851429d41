from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import BudgetExceeded, GuardExceeded, PreconditionError, VocabularyMismatch
from homlab.graphs import complete, cycle, path
from homlab.relstruct import (
    Structure,
    core,
    direct_product,
    disjoint_union,
    find_hom,
    find_isomorphism,
    gaifman,
    induced,
    is_core,
    is_hom,
    is_isomorphic,
    is_partial_hom,
    iter_homs,
    pair,
    rename,
    star_expand,
    validate_structure,
)

from .oracles import brute_hom_exists, brute_homs, brute_is_core, brute_isomorphic
from .strategies import structures

VOCAB = {"E": 2, "C": 1}


def test_universe_is_sorted_and_json_is_canonical():
    s = Structure({"E": 2}, ["b", "a"], {"E": [("b", "a"), ("a", "b")]})
    assert s.universe == ("a", "b")
    assert s.to_json() == '{"vocabulary": {"E": 2}, "universe": ["a", "b"], "relations": {"E": [["a", "b"], ["b", "a"]]}}'
    assert Structure.from_json(s.to_json()) == s


def test_product_of_k2_with_itself():
    p = direct_product(complete(2), complete(2))
    assert len(p.universe) == 4
    assert len(p.rel("E")) == 4
    assert find_hom(p, complete(2)) is not None


def test_validate_reports_problems():
    assert validate_structure(complete(3)) == []
    wide = Structure({"R": 3}, ["a"], {"R": [("a", "a", "a")]})
    assert any("exceeds bound" in m for m in validate_structure(wide, max_arity=2))
    with pytest.raises(PreconditionError):
        Structure.from_dict({"vocabulary": {"E": 2}, "universe": ["a"], "relations": {"E": [["a", "z"]]}})
    with pytest.raises(PreconditionError):
        Structure.from_dict({"vocabulary": {"E": 2}, "universe": [], "relations": {}})


def test_known_homomorphisms():
    assert find_hom(complete(3), complete(2)) is None
    assert find_hom(path(3), complete(2)) == {"1": "1", "2": "2", "3": "1"}
    assert find_hom(cycle(5), complete(3)) is not None
    assert find_hom(cycle(5), complete(2)) is None
    assert find_hom(cycle(4), complete(2)) is not None


def test_vocabulary_mismatch_is_an_error():
    c = Structure({"C": 1}, ["a"], {"C": [("a",)]})
    with pytest.raises(VocabularyMismatch):
        find_hom(complete(2), c)


def test_partial_hom_rejects_foreign_elements():
    with pytest.raises(PreconditionError):
        is_partial_hom(complete(2), complete(2), {"9": "1"})


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        find_hom(complete(5), complete(4), budget=3)


def test_core_of_path_is_an_edge():
    c = core(path(3))
    assert len(c.universe) == 2
    assert is_core(c)
    assert is_core(complete(3))
    assert not is_core(cycle(4))


def test_core_guard():
    with pytest.raises(GuardExceeded):
        core(path(9))
    assert len(core(path(9), size_guard=9).universe) == 2


def test_star_expansion_is_a_core():
    assert is_core(star_expand(cycle(4)))


def test_pair_and_union_names():
    p = pair(complete(2), Structure({"C": 1}, ["x"], {"C": [("x",)]}))
    assert p.universe == ("1.1", "1.2", "2.x")
    assert p.rel("P_2") == {("2.x",)}
    u = disjoint_union([("l", complete(2)), ("r", complete(2))])
    assert len(u.rel("E")) == 4


def test_gaifman_ignores_loops():
    s = Structure({"R": 3}, ["a", "b", "c"], {"R": [("a", "a", "b")]})
    g = gaifman(s)
    assert g.rel("E") == {("a", "b"), ("b", "a")}


@settings(max_examples=80, deadline=None)
@given(structures(4, VOCAB), structures(3, VOCAB))
def test_find_hom_matches_enumeration(a, b):
    h = find_hom(a, b)
    assert (h is not None) == brute_hom_exists(a, b)
    if h is not None:
        assert is_hom(a, b, h)
        # the witness is the lexicographically least one
        first = min(tuple(m[x] for x in a.universe) for m in brute_homs(a, b))
        assert tuple(h[x] for x in a.universe) == first


@settings(max_examples=40, deadline=None)
@given(structures(3, VOCAB), structures(3, VOCAB))
def test_iter_homs_is_complete(a, b):
    mine = [tuple(sorted(m.items())) for m in iter_homs(a, b)]
    ref = [tuple(sorted(m.items())) for m in brute_homs(a, b)]
    assert sorted(mine) == sorted(ref)
    assert len(set(mine)) == len(mine)


@settings(max_examples=60, deadline=None)
@given(structures(4, VOCAB))
def test_core_matches_brute_force(a):
    assert is_core(a) == brute_is_core(a)
    c = core(a)
    assert brute_is_core(c)
    assert brute_hom_exists(a, c) and brute_hom_exists(c, a)
    assert set(c.universe) <= set(a.universe)


@settings(max_examples=60, deadline=None)
@given(structures(4, VOCAB), st.randoms(use_true_random=False))
def test_isomorphism_against_permutations(a, rnd):
    names = list(a.universe)
    shuffled = names[:]
    rnd.shuffle(shuffled)
    b = rename(a, {x: "z" + y for x, y in zip(names, shuffled)})
    m = find_isomorphism(a, b)
    assert m is not None and is_hom(a, b, m)
    assert is_isomorphic(a, b) == brute_isomorphic(a, b)


@settings(max_examples=60, deadline=None)
@given(structures(3, VOCAB), structures(3, VOCAB))
def test_isomorphism_decision_matches_brute_force(a, b):
    assert is_isomorphic(a, b) == brute_isomorphic(a, b)


@settings(max_examples=30, deadline=None)
@given(structures(4, VOCAB))
def test_json_round_trip(a):
    data = json.loads(a.to_json())
    assert list(data) == ["vocabulary", "universe", "relations"]
    assert Structure.from_dict(data) == a
    assert validate_structure(a) == []


@given(structures(4, VOCAB), st.data())
@settings(max_examples=30, deadline=None)
def test_induced_keeps_inner_tuples(a, data):
    keep = data.draw(st.lists(st.sampled_from(a.universe), min_size=1, unique=True))
    s = induced(a, keep)
    for R in a.vocabulary:
        assert s.rel(R) == {t for t in a.rel(R) if set(t) <= set(keep)}
