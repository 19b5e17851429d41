from __future__ import annotations

import pytest
from hypothesis import given, settings

from homlab.errors import GuardExceeded, PreconditionError
from homlab.graphs import (
    RootedForest,
    complete,
    complete_tree,
    cycle,
    dfs_forest,
    find_minor,
    generate,
    grid,
    has_property_P,
    height,
    is_minor_map,
    make_graph,
    path,
    pathwidth,
    stack_profile,
    star,
    tree_depth,
    treewidth,
)

from .oracles import (
    brute_minor_exists,
    brute_pathwidth,
    brute_property_P,
    brute_tree_depth,
    brute_treewidth,
)
from .strategies import graphs_st, rooted_trees

# (tree depth, treewidth, pathwidth), frozen from the brute-force oracles
KNOWN = {
    ("path", 1): (0, 0, 0),
    ("path", 4): (2, 1, 1),
    ("path", 7): (2, 1, 1),
    ("complete", 3): (2, 2, 2),
    ("complete", 4): (3, 3, 3),
    ("cycle", 4): (2, 2, 2),
    ("cycle", 5): (3, 2, 2),
    ("star", 3): (1, 1, 1),
    ("grid", 3): (4, 3, 3),
}


@pytest.mark.parametrize("key", sorted(KNOWN))
def test_known_invariants(key):
    g = generate(*key)
    td, witness = tree_depth(g)
    assert (td, treewidth(g), pathwidth(g)) == KNOWN[key]
    assert height(witness) == td
    assert witness.closure_contains(g)


def test_frozen_values_match_oracles():
    for key, (td, tw, pw) in KNOWN.items():
        g = generate(*key)
        assert brute_treewidth(g) == tw
        assert brute_pathwidth(g) == pw
        if len(g.universe) <= 6:
            assert brute_tree_depth(g) == td


def test_make_graph_rejects_loops():
    with pytest.raises(PreconditionError):
        make_graph(["a"], [("a", "a")])


def test_generators():
    assert len(path(1).universe) == 1
    assert grid(2).universe == ("1,1", "1,2", "2,1", "2,2")
    assert star(3).universe == ("0", "1", "2", "3")
    t = complete_tree(2, 2)
    assert len(t.universe) == 7 and t.roots == ("r",)
    assert height(t) == 2
    with pytest.raises(PreconditionError):
        cycle(2)


def test_rooted_forest_needs_one_root_per_component():
    with pytest.raises(PreconditionError):
        RootedForest(path(3), ("1", "3"))
    with pytest.raises(PreconditionError):
        RootedForest(cycle(3), ("1",))
    f = RootedForest(path(3), ("2",))
    assert f.children("2") == ["1", "3"]
    assert f.ancestors("3") == ["2", "3"]


def test_minor_examples():
    assert find_minor(path(5), complete(3)) is None
    mu = find_minor(cycle(5), complete(3))
    assert mu is not None and is_minor_map(complete(3), cycle(5), mu)
    assert find_minor(grid(3), complete(4)) is not None
    assert find_minor(grid(3), complete(5)) is None


def test_minor_map_errors():
    with pytest.raises(PreconditionError):
        is_minor_map(complete(2), path(2), {"1": ["1"]})
    with pytest.raises(PreconditionError):
        is_minor_map(complete(2), path(2), {"1": ["1"], "2": ["9"]})


def test_minor_guard():
    with pytest.raises(GuardExceeded):
        find_minor(path(30), complete(2))


def test_forests_have_no_cycle_minors():
    t = complete_tree(2, 2).graph
    for n in range(3, len(t.universe) + 1):
        assert find_minor(t, cycle(n)) is None


def test_stack_profile():
    assert stack_profile(complete_tree(2, 3).graph, 3, 3) == 2
    assert stack_profile(path(2), 3, 2) == 0
    assert stack_profile(path(7), 3, 1) == 3


def test_property_P_examples():
    assert has_property_P(complete_tree(2, 2), 2, 2)
    assert not has_property_P(RootedForest(star(3), ("0",)), 2, 2)
    assert has_property_P(RootedForest(star(3), ("0",)), 1, 3)


def test_dfs_forest():
    f = dfs_forest(complete(3))
    assert f.parent == {"1": None, "2": "1", "3": "2"}


@settings(max_examples=60, deadline=None)
@given(graphs_st(6))
def test_widths_match_brute_force(g):
    tw, pw = treewidth(g), pathwidth(g)
    assert tw == brute_treewidth(g)
    assert pw == brute_pathwidth(g)
    assert tw <= pw <= tree_depth(g)[0]


@settings(max_examples=30, deadline=None)
@given(graphs_st(5))
def test_tree_depth_matches_parent_enumeration(g):
    td, witness = tree_depth(g)
    assert td == brute_tree_depth(g)
    assert witness.closure_contains(g)


@settings(max_examples=40, deadline=None)
@given(graphs_st(6), graphs_st(4))
def test_minor_search_matches_enumeration(g, m):
    mu = find_minor(g, m)
    assert (mu is not None) == brute_minor_exists(g, m)
    if mu is not None:
        assert is_minor_map(m, g, mu)


@settings(max_examples=60, deadline=None)
@given(rooted_trees(9))
def test_property_P_against_definition(t):
    for d in range(0, 4):
        for k in (1, 2, 3):
            assert has_property_P(t, d, k) == brute_property_P(t, d, k)


@settings(max_examples=30, deadline=None)
@given(graphs_st(6))
def test_dfs_forest_closure_contains_edges(g):
    f = dfs_forest(g)
    assert f.closure_contains(g)
