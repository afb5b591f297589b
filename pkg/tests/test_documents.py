import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esgame.documents import (
    dot_export,
    parse,
    parse_text,
    read_text,
    serialize,
    to_document,
    write_text,
)
from esgame.games import copycat
from esgame.interactions import pullback
from esgame.seeders import EspSeeder
from esgame.structures import (
    EMPTY_GAME,
    enumerate_configurations,
    make_structure,
    parallel,
)
from esgame.types import (
    DocumentError,
    EsMap,
    InvalidStructureError,
    MapError,
    PreStrategy,
)
from tests.conftest import FIXTURES_DIR


def esp(*events, **extra) -> str:
    return json.dumps({"kind": "esp", "events": list(events), **extra})


def node_lines(dot: str) -> list[str]:
    return [line for line in dot.splitlines() if "[label=" in line and "->" not in line]


def causal_lines(dot: str) -> list[str]:
    return [line for line in dot.splitlines() if "->" in line and "dashed" not in line]


class TestParse:
    def test_vending_machine(self, vending):
        assert (len(vending.events), len(vending.causes), len(vending.conflicts)) == (5, 4, 1)
        assert vending.has_polarity

    def test_events_without_polarity(self, coin_machine):
        assert not coin_machine.has_polarity

    def test_empty_esp_is_the_empty_game(self, tmp_path):
        path = tmp_path / "empty.esp.json"
        path.write_text(esp())
        assert parse(path) == EMPTY_GAME

    def test_references_resolve_against_the_document(self, a_then_c):
        assert isinstance(a_then_c, EsMap)
        assert a_then_c.target.events == {"a", "b", "c"}

    def test_pre_strategy_with_a_split_game(self, nondet_bool, bool_game):
        assert isinstance(nondet_bool, PreStrategy)
        assert nondet_bool.right == bool_game
        assert nondet_bool.left == EMPTY_GAME
        assert nondet_bool.name == "nondeterministic boolean"

    def test_standard_input(self, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO(esp({"id": "a"})))
        assert parse("-").events == {"a"}

    def test_syntax_errors_carry_a_position(self):
        with pytest.raises(DocumentError) as err:
            parse_text('{"kind": "esp",\n  "events": [}')
        assert err.value.line == 2

    def test_unknown_fields(self):
        with pytest.raises(DocumentError, match="Unknown field 'colour' in esp document"):
            parse_text(esp(colour="red"))

    def test_unknown_kind(self):
        with pytest.raises(DocumentError):
            parse_text('{"kind": "game"}')

    def test_mixed_polarities(self):
        with pytest.raises(DocumentError):
            parse_text(esp({"id": "a", "pol": "+"}, {"id": "b"}))

    def test_unicode_minus(self):
        assert str(parse_text(esp({"id": "a", "pol": "−"})).pol("a")) == "-"

    def test_invalid_structures(self):
        with pytest.raises(InvalidStructureError):
            parse_text(esp({"id": "a"}, {"id": "b"}, prec=[["a", "b"], ["b", "a"]]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DocumentError):
            read_text(tmp_path / "missing.json")

    def test_functions_that_are_not_maps(self):
        document = {
            "kind": "map",
            "source": {"kind": "esp", "events": [{"id": "a"}, {"id": "b"}]},
            "target": {"kind": "esp", "events": [{"id": "a"}, {"id": "b"}]},
            "pairs": [["a", "a"], ["b", "a"]],
        }
        with pytest.raises(MapError, match="not locally injective"):
            parse_text(json.dumps(document))

    def test_pre_strategies_preserve_polarity(self):
        document = {
            "kind": "prestrategy",
            "source": {"kind": "esp", "events": [{"id": "a", "pol": "+"}]},
            "target": {"kind": "esp", "events": [{"id": "a", "pol": "-"}]},
            "pairs": [["a", "a"]],
        }
        with pytest.raises(MapError):
            parse_text(json.dumps(document))

    def test_split_must_describe_the_game(self):
        document = json.loads((FIXTURES_DIR / "nondet-bool.strat.json").read_text())
        document["game_split"]["left"] = "bool.esp.json"
        with pytest.raises(DocumentError, match="game_split"):
            parse_text(json.dumps(document), FIXTURES_DIR)


class TestSerialize:
    @pytest.mark.parametrize(
        "name",
        [
            "vending.esp.json",
            "coin-machine.esp.json",
            "empty.esp.json",
            "two-copies.map.json",
            "vending.strat.json",
            "neg.strat.json",
            "y-empty.strat.json",
        ],
    )
    def test_fixtures_survive_a_round_trip(self, name):
        value = parse(FIXTURES_DIR / name)
        assert parse_text(serialize(value)) == value

    @given(seed=st.integers(min_value=0, max_value=2**32), n=st.integers(1, 8))
    @settings(max_examples=50, deadline=None)
    def test_generated_structures_survive_a_round_trip(self, seed, n):
        E = EspSeeder(seed, n).seed()
        assert parse_text(serialize(E)) == E

    def test_equal_values_give_equal_text(self):
        E = make_structure(["b", "a"], [("a", "b")])
        F = make_structure(["a", "b"], [("a", "b")])
        assert serialize(E) == serialize(F)

    def test_pre_strategy_keeps_its_name(self, nondet_bool):
        document = to_document(nondet_bool)
        assert document["kind"] == "prestrategy"
        assert document["name"] == "nondeterministic boolean"
        assert set(document["game_split"]) == {"left", "right"}

    def test_write_to_a_file_and_to_standard_output(self, tmp_path, capsys):
        write_text("{}\n", tmp_path / "out.json")
        assert (tmp_path / "out.json").read_text() == "{}\n"
        write_text("{}\n", "-")
        assert capsys.readouterr().out == "{}\n"


class TestDot:
    def test_empty_structure(self):
        assert dot_export(EMPTY_GAME) == 'digraph "G" {\n}\n'

    def test_parallel_machines(self, coffee, tea):
        dot = dot_export(parallel(coffee, tea).structure, name="machines")
        assert dot.startswith('digraph "machines" {')
        assert len(node_lines(dot)) == 4
        assert len(causal_lines(dot)) == 2

    def test_copycat(self, w_game):
        dot = dot_export(copycat(w_game))
        assert len(node_lines(dot)) == 4
        assert causal_lines(dot) == [
            '  "L.done" -> "R.done";',
            '  "R.click" -> "L.click";',
        ]
        assert '"L.done" [label="L.done ↦ L.done-"];' in dot

    def test_binary_conflict(self, bool_game):
        dot = dot_export(bool_game)
        assert '  "ff" -> "tt" [style=dashed, dir=none];' in dot.splitlines()

    def test_larger_conflicts_use_a_hub(self):
        E = make_structure(["a", "b", "c"], conflicts=[{"a", "b", "c"}])
        lines = dot_export(E).splitlines()
        assert '  "#conflict0" [shape=point];' in lines
        assert sum("#conflict0" in line and "dashed" in line for line in lines) == 3

    def test_configuration_domain(self, coin_machine):
        dot = dot_export(enumerate_configurations(coin_machine))
        assert '  "c0" [label="{}"];' in dot.splitlines()
        assert '  "c1" -> "c3" [label="tea"];' in dot.splitlines()

    def test_interaction(self, a_then_c, b_then_c):
        dot = dot_export(pullback(a_then_c, b_then_c))
        assert len(node_lines(dot)) == 3
        assert len(causal_lines(dot)) == 2
        assert '\\nc,c"' in dot
