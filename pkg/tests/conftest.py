from pathlib import Path

import pytest

from esgame.documents import parse
from esgame.structures import make_structure, parallel
from esgame.types import EsMap, EventStructure, PreStrategy
from esgame.utils.core import GUARD_ENV_VAR, configure

FIXTURES_DIR = Path(__file__).parent.parent / "esgame" / "fixtures"


def load(name: str):
    return parse(FIXTURES_DIR / name)


def labelled_causes(result) -> set[tuple[str, str]]:
    """Causal links of an interaction, written with the labels of their events."""
    labels = result.labelling.mapping
    return {(labels[a], labels[b]) for a, b in result.structure.causes}


@pytest.fixture(autouse=True)
def _reset_settings(monkeypatch):
    monkeypatch.delenv(GUARD_ENV_VAR, raising=False)
    configure(None)
    yield
    configure(None)


@pytest.fixture
def chain() -> EventStructure:
    return make_structure(["a", "b", "c"], [("a", "b"), ("b", "c")])


@pytest.fixture
def coffee() -> EventStructure:
    return load("coffee.esp.json")


@pytest.fixture
def tea() -> EventStructure:
    return load("tea.esp.json")


@pytest.fixture
def coin_machine() -> EventStructure:
    return load("coin-machine.esp.json")


@pytest.fixture
def vending() -> EventStructure:
    return load("vending.esp.json")


@pytest.fixture
def game_m() -> EventStructure:
    return load("m.esp.json")


@pytest.fixture
def vending_strategy() -> PreStrategy:
    return load("vending.strat.json")


@pytest.fixture
def two_coffees() -> PreStrategy:
    return load("two-coffees.strat.json")


@pytest.fixture
def bool_game() -> EventStructure:
    return load("bool.esp.json")


@pytest.fixture
def nondet_bool() -> PreStrategy:
    return load("nondet-bool.strat.json")


@pytest.fixture
def negation() -> PreStrategy:
    return load("neg.strat.json")


@pytest.fixture
def w_game() -> EventStructure:
    return load("w.esp.json")


@pytest.fixture
def done_click() -> PreStrategy:
    return load("done-click.strat.json")


@pytest.fixture
def y_game() -> EventStructure:
    return load("y.esp.json")


@pytest.fixture
def y_empty() -> PreStrategy:
    return load("y-empty.strat.json")


@pytest.fixture
def y_dup() -> PreStrategy:
    return load("y-dup.strat.json")


@pytest.fixture
def dealer() -> EsMap:
    return load("dealer.map.json")


@pytest.fixture
def buyer() -> EsMap:
    return load("buyer.map.json")


@pytest.fixture
def a_then_c() -> EsMap:
    return load("a-then-c.map.json")


@pytest.fixture
def b_then_c() -> EsMap:
    return load("b-then-c.map.json")


@pytest.fixture
def two_copies() -> EsMap:
    return load("two-copies.map.json")


@pytest.fixture
def a_then_b() -> EsMap:
    return load("a-then-b.map.json")


@pytest.fixture
def plus_then_plus() -> PreStrategy:
    return load("plus-then-plus.strat.json")


@pytest.fixture
def minus_then_minus() -> PreStrategy:
    return load("minus-then-minus.strat.json")


@pytest.fixture
def crossed_negatives() -> PreStrategy:
    return load("crossed-negatives.strat.json")


@pytest.fixture
def click_then_done(w_game) -> PreStrategy:
    """Click₁ ⇢ Done₁ with a concurrent Click₂, on W ∥ W."""
    S = make_structure(
        ["click1", "done1", "click2"],
        [("click1", "done1")],
        polarity={"click1": "-", "done1": "+", "click2": "-"},
    )
    labels = {"click1": "0.click", "done1": "0.done", "click2": "1.click"}
    return PreStrategy(EsMap(S, parallel(w_game, w_game).structure, labels))
