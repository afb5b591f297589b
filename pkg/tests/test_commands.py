import io
import json

import pytest

from esgame.commands import COMMANDS, main
from esgame.documents import parse_text
from esgame.structures import EMPTY_GAME
from esgame.types import EsMap, PreStrategy
from esgame.utils.core import GUARD_ENV_VAR
from tests.conftest import FIXTURES_DIR


def fixture(name: str) -> str:
    return str(FIXTURES_DIR / name)


def run(*args: str) -> tuple[int, str, str]:
    stdout, stderr = io.StringIO(), io.StringIO()
    code = main(list(args), stdout=stdout, stderr=stderr)
    return code, stdout.getvalue(), stderr.getvalue()


class TestParser:
    def test_every_command_is_registered(self):
        names = [command.name for command in COMMANDS]
        assert len(names) == len(set(names)) == 17

    def test_version(self):
        assert run("--version")[0] == 0

    def test_unknown_command(self):
        assert run("frobnicate")[0] == 2

    def test_missing_arguments(self):
        assert run("compose", fixture("neg.strat.json"))[0] == 2


class TestValidate:
    def test_esp(self):
        code, out, _ = run("validate", fixture("vending.esp.json"))
        assert code == 0
        assert out == "esp: 5 events, 4 causal links, 1 conflicts\n"

    def test_prestrategy(self):
        _, out, _ = run("validate", fixture("vending.strat.json"))
        assert out == "prestrategy: 5 events on a game of 5\n"

    def test_map(self):
        _, out, _ = run("validate", fixture("two-copies.map.json"))
        assert out == "map: 3 of 3 events\n"

    def test_invalid_document(self, tmp_path):
        path = tmp_path / "broken.esp.json"
        path.write_text('{"kind": "esp", "events": [{"id": "a"}], "prec": [["a", "a"]]}')
        code, _, err = run("validate", str(path))
        assert code == 2
        assert "causal cycle {a}" in err

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        assert run("validate", str(path))[0] == 2


class TestConfigs:
    def test_coin_machine(self):
        code, out, _ = run("configs", fixture("coin-machine.esp.json"))
        assert code == 0
        assert out.splitlines() == ["{}", "{coin}", "{coffee, coin}", "{coin, tea}"]

    def test_covers(self):
        _, out, _ = run("configs", "--covers", fixture("coin-machine.esp.json"))
        assert "{coin} -tea-> {coin, tea}" in out.splitlines()

    def test_dot(self, tmp_path):
        path = tmp_path / "domain.dot"
        run("configs", fixture("coin-machine.esp.json"), "--dot", str(path))
        assert path.read_text().startswith('digraph "G" {')

    def test_guard_flag(self):
        assert run("--guard", "2", "configs", fixture("coin-machine.esp.json"))[0] == 3

    def test_guard_environment(self, monkeypatch):
        monkeypatch.setenv(GUARD_ENV_VAR, "2")
        code, _, err = run("configs", fixture("coin-machine.esp.json"))
        assert code == 3
        assert "Guard exceeded" in err

    def test_invalid_guard_environment(self, monkeypatch):
        monkeypatch.setenv(GUARD_ENV_VAR, "many")
        assert run("configs", fixture("coin-machine.esp.json"))[0] == 2


class TestConstructions:
    def test_parallel_to_a_file(self, tmp_path):
        path = tmp_path / "machines.esp.json"
        code, out, _ = run(
            "parallel", fixture("coffee.esp.json"), fixture("tea.esp.json"), "-o", str(path)
        )
        assert code == 0
        assert out == ""
        assert len(json.loads(path.read_text())["events"]) == 4

    def test_dual(self):
        _, out, _ = run("dual", fixture("bool.esp.json"))
        assert {e["pol"] for e in json.loads(out)["events"]} == {"-"}

    def test_project(self):
        _, out, _ = run("project", fixture("vending.esp.json"), "--keep", "coin, coffee")
        assert parse_text(out).causes == {("coin", "coffee")}

    def test_copycat(self):
        _, out, _ = run("copycat", fixture("w.esp.json"))
        sigma = parse_text(out)
        assert isinstance(sigma, PreStrategy)
        assert len(sigma.inner.causes) == 2

    def test_interact(self):
        code, out, _ = run("interact", fixture("nondet-bool.strat.json"), fixture("neg.strat.json"))
        assert code == 0
        assert len(parse_text(out).inner.events) == 4

    def test_compose_then_iso(self, tmp_path):
        composite = tmp_path / "composite.strat.json"
        run(
            "compose",
            fixture("nondet-bool.strat.json"),
            fixture("neg.strat.json"),
            "-o",
            str(composite),
        )
        code, out, _ = run("iso", str(composite), fixture("nondet-bool.strat.json"))
        assert code == 0
        iso = parse_text(out)
        assert isinstance(iso, EsMap)
        assert json.loads(out)["name"] == "iso"

    def test_compose_piped_into_iso(self, monkeypatch):
        _, composite, _ = run(
            "compose", fixture("nondet-bool.strat.json"), fixture("neg.strat.json")
        )
        monkeypatch.setattr("sys.stdin", io.StringIO(composite))
        assert run("iso", "-", fixture("nondet-bool.strat.json"))[0] == 0

    def test_tensor(self):
        code, out, _ = run("tensor", fixture("nondet-bool.strat.json"), fixture("neg.strat.json"))
        assert code == 0
        assert len(parse_text(out).inner.events) == 6

    def test_lift(self):
        code, out, _ = run("lift", fixture("vending.strat.json"))
        assert code == 0
        assert len(parse_text(out).inner.events) == 10

    def test_lift_refuses_non_receptive_maps(self):
        assert run("lift", fixture("two-coffees.strat.json"))[0] == 2

    def test_dot(self):
        code, out, _ = run("dot", fixture("w.esp.json"), "--name", "W")
        assert code == 0
        assert out.startswith('digraph "W" {')

    def test_dot_refuses_maps(self):
        assert run("dot", fixture("two-copies.map.json"))[0] == 2


class TestIso:
    def test_isomorphic_esps(self):
        code, out, _ = run("iso", fixture("coffee.esp.json"), fixture("tea.esp.json"))
        assert code == 0
        assert ["coffee", "tea"] in json.loads(out)["pairs"]

    def test_non_isomorphic_esps(self):
        code, _, err = run("iso", fixture("coffee.esp.json"), fixture("coin-machine.esp.json"))
        assert code == 1
        assert "not isomorphic" in err

    def test_over_needs_pre_strategies(self):
        code = run(
            "iso",
            fixture("coffee.esp.json"),
            fixture("tea.esp.json"),
            "--over",
            fixture("m.esp.json"),
        )[0]
        assert code == 2

    def test_over_checks_the_game(self):
        code = run(
            "iso",
            fixture("vending.strat.json"),
            fixture("vending.strat.json"),
            "--over",
            fixture("m.esp.json"),
        )[0]
        assert code == 0


class TestCheck:
    def test_courteous(self):
        code, _, err = run("check", fixture("vending.strat.json"), "--courteous")
        assert code == 0
        assert "courteous: holds" in err

    def test_not_receptive(self):
        code, _, err = run("check", fixture("y-empty.strat.json"), "--receptive")
        assert code == 1
        assert "counterexample: ({}, R.o, missing)" in err

    def test_fibration(self):
        assert run("check", fixture("vending.strat.json"), "--fibration", "scott")[0] == 0

    def test_strategy(self):
        assert run("check", fixture("y-dup.strat.json"), "--strategy")[0] == 1

    def test_full_table(self):
        code, _, err = run("check", fixture("vending.strat.json"))
        assert code == 0
        assert "receptive" in err
        assert "disagree" not in err

    def test_full_table_for_a_pre_strategy(self):
        assert run("check", fixture("plus-then-plus.strat.json"))[0] == 1

    def test_needs_a_pre_strategy(self):
        assert run("check", fixture("vending.esp.json"))[0] == 2


class TestLawCommands:
    def test_snake(self):
        code, _, err = run("snake", fixture("y.esp.json"))
        assert code == 0
        assert "snake equations: holds" in err

    def test_pentagon(self):
        code = run(
            "pentagon",
            fixture("nondet-bool.strat.json"),
            fixture("neg.strat.json"),
            fixture("neg.strat.json"),
            fixture("neg.strat.json"),
        )[0]
        assert code == 0

    @pytest.mark.slow
    def test_law_suite(self):
        code, _, err = run("laws", "--seed", "1", "--trials", "1", "--max-events", "3")
        assert code == 0
        assert "ALL LAWS HOLD" in err


class TestGen:
    def test_same_seed_same_output(self):
        first = run("gen", "--seed", "3", "--events", "4")[1]
        assert first == run("gen", "--seed", "3", "--events", "4")[1]
        assert json.loads(first)["name"] == "seed-3"

    def test_no_events(self):
        assert parse_text(run("gen", "--seed", "1", "--events", "0")[1]) == EMPTY_GAME

    def test_guard(self):
        assert run("gen", "--events", "20")[0] == 3

    def test_negative_seed(self):
        assert run("gen", "--seed", "-1", "--events", "2")[0] == 2

    def test_prestrategy(self):
        code, out, _ = run("gen", "--seed", "2", "--prestrategy", fixture("m.esp.json"))
        assert code == 0
        assert isinstance(parse_text(out), PreStrategy)

    def test_family(self):
        code, out, _ = run("gen", "--seed", "2", "--family", "--size", "1")
        assert code == 0
        assert parse_text(out).is_split
