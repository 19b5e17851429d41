from __future__ import annotations

import json
import os

import pytest

from homlab.cli import main
from homlab.decon import Deconstruction, self_deconstruction, validate
from homlab.formats import graph_text, roots_text
from homlab.graphs import complete, complete_tree, cycle, path
from homlab.relstruct import Structure, star_expand, validate_structure


@pytest.fixture
def files(tmp_path):
    def put(name, data):
        p = tmp_path / name
        p.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(p)

    k2, k3 = complete(2), complete(3)
    return {
        "k2": put("k2.json", k2.to_dict()),
        "k3": put("k3.json", k3.to_dict()),
        "k2star": put("k2star.json", star_expand(k2).to_dict()),
        "k3star": put("k3star.json", star_expand(k3).to_dict()),
        "self_k2": put("self_k2.json", self_deconstruction(k2).to_dict()),
        "c4_txt": put("c4.txt", graph_text(cycle(4))),
        "p3": put("p3.json", path(3).to_dict()),
        "tree": put("tree.txt", graph_text(complete_tree(2, 2).graph)),
        "roots": put("roots.txt", roots_text(complete_tree(2, 2))),
        "facts": put("facts.json", {"all_trees_minors": True, "all_paths_minors": True}),
        "colours": put("c.json", Structure({"C": 1}, ["1", "2"], {"C": [("1",)]}).to_dict()),
        "put": put,
    }


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_hom_k3_to_k2_is_negative(files, capsys):
    code, out, _ = run(capsys, "hom", "--from", files["k3"], "--to", files["k2"])
    assert code == 1 and out.strip() == "no homomorphism"


def test_hom_positive_prints_map(files, capsys):
    code, out, _ = run(capsys, "hom", "--from", files["k2"], "--to", files["k3"])
    assert code == 0 and json.loads(out) == {"1": "1", "2": "2"}


def test_min_pebbles_k3(files, capsys):
    code, out, _ = run(capsys, "game", "min-pebbles", "--in", files["k3"], "--max", "5")
    assert code == 0 and out.strip() == "3"


def test_decon_width_self_k2(files, capsys):
    code, out, _ = run(capsys, "decon", "width", "--in", files["self_k2"])
    assert code == 0 and out.strip() == "2"
    _, out, _ = run(capsys, "decon", "width", "--in", files["self_k2"], "--json")
    assert json.loads(out) == {"width": 2, "max_bag_minus_one": 0}


def test_decon_validate_and_compose(files, capsys):
    code, out, _ = run(capsys, "decon", "validate", "--in", files["self_k2"])
    assert code == 0 and out.strip() == "valid"
    code, out, _ = run(capsys, "decon", "compose", "--first", files["self_k2"], "--second", files["self_k2"])
    assert code == 0 and validate(Deconstruction.from_dict(json.loads(out))) == []


def test_decon_build_td(files, capsys):
    code, out, _ = run(capsys, "decon", "build-td", "--tree", files["tree"], "--roots", files["roots"],
                       "--d", "2", "--k", "2")
    assert code == 0
    assert validate(Deconstruction.from_dict(json.loads(out))) == []


def test_decon_from_minor(files, capsys):
    mu = files["put"]("mu.json", {"1": ["1"], "2": ["2", "3"]})
    code, out, _ = run(capsys, "decon", "from-minor", "--minor", files["k2"], "--graph", files["p3"], "--map", mu)
    assert code == 0 and validate(Deconstruction.from_dict(json.loads(out))) == []


def test_invariants_on_text_graph(files, capsys):
    code, out, _ = run(capsys, "invariants", "--in", files["c4_txt"], "--json")
    data = json.loads(out)
    assert code == 0 and (data["tree_depth"], data["treewidth"], data["pathwidth"]) == (2, 2, 2)


def test_game_commands(files, capsys):
    code, out, _ = run(capsys, "game", "wins", "--a", files["k3"], "--b", files["k2"], "--vector", "3")
    assert code == 1 and out.strip() == "spoiler wins"
    code, out, _ = run(capsys, "game", "wins", "--a", files["k3"], "--b", files["k2"], "--vector", "2", "--json")
    assert code == 0 and "strategy" in json.loads(out)
    code, out, _ = run(capsys, "game", "solves", "--in", files["k3"], "--vector", "1,1,1")
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(capsys, "game", "unfold", "--in", files["k2"], "--vector", "2")
    assert code == 0 and validate_structure(Structure.from_dict(json.loads(out))) == []


def test_reduce_trace_and_decide(files, capsys):
    base = ("reduce", "decon", "--graph", files["k2"], "--decon", files["self_k2"], "--target", files["k2star"])
    code, out, _ = run(capsys, *base, "--trace")
    rep = json.loads(out)
    assert code == 0 and validate_structure(Structure.from_dict(rep["target"])) == []
    assert rep["trace"]["w"] == 1
    code, out, _ = run(capsys, *base, "--decide")
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(capsys, "reduce", "color", "--source", files["k3"], "--target", files["k2"], "--decide")
    assert code == 1 and out.strip() == "false"


def test_reduce_formula_commands(files, capsys):
    code, out, _ = run(capsys, "reduce", "dpp", "--target", files["colours"], "--formula", "(exists x (atom C x))",
                       "--decide")
    assert code == 0
    code, out, _ = run(capsys, "reduce", "mc", "--target", files["colours"],
                       "--formula", "(exists x (not (atom C x)))", "--decide")
    assert code == 0 and out.strip() == "true"


def test_mc_command(files, capsys):
    code, out, _ = run(capsys, "mc", "--in", files["colours"], "--formula", "(not (exists x (atom C x)))")
    assert code == 1 and out.strip() == "false"


def test_classify_prints_evidence_hint(files, capsys):
    code, out, err = run(capsys, "classify", "--facts", files["facts"])
    assert code == 0 and out.strip() and "homlab invariants" in err


def test_guard_violation_exits_2_and_env_restored(files, capsys, monkeypatch):
    monkeypatch.delenv("HOMLAB_GUARD", raising=False)
    code, out, err = run(capsys, "core", "--in", files["k3"], "--guard", "core=1")
    assert code == 2 and out == "" and err.startswith("homlab:") and len(err.strip().splitlines()) == 1
    assert "HOMLAB_GUARD" not in os.environ


def test_bad_guard_syntax(files, capsys):
    code, _, err = run(capsys, "core", "--in", files["k3"], "--guard", "nonsense")
    assert code == 2 and "--guard" in err


def test_malformed_input_exits_2(files, capsys):
    bad = files["put"]("bad.json", "{not json")
    code, _, err = run(capsys, "core", "--in", bad)
    assert code == 2 and "not valid JSON" in err


@pytest.mark.parametrize("argv", [
    ("core", "--in", "k3"),
    ("invariants", "--in", "c4_txt"),
    ("game", "unfold", "--in", "k2", "--vector", "1,1", "--json"),
    ("reduce", "product", "--source", "k3", "--target", "k3star", "--trace"),
])
def test_stdout_is_deterministic(files, capsys, argv):
    resolved = [files.get(x, x) if not x.startswith("-") else x for x in argv]
    first = run(capsys, *resolved)
    second = run(capsys, *resolved)
    assert first == second and first[0] == 0
