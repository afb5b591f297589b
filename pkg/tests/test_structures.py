import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esgame.games import dual
from esgame.seeders import EspSeeder
from esgame.structures import (
    EMPTY_GAME,
    agree_on_configurations,
    check_hiding_map,
    check_map,
    compose_maps,
    configurations,
    down_closure,
    enumerate_configurations,
    factor_partial,
    find_isomorphisms,
    identity_map,
    inverse_map,
    is_configuration,
    is_consistent,
    is_isomorphism,
    iso_from_configurations,
    make_structure,
    parallel,
    project,
    reflects_causality,
    relabel,
    strip_polarity,
    untag,
    validate_es,
)
from esgame.types import (
    EsMap,
    EventStructure,
    GuardExceededError,
    InvalidStructureError,
    MapError,
    Polarity,
    PreconditionError,
    UnknownEventError,
)
from esgame.utils.core import Settings


class TestMakeStructure:
    def test_causality_is_transitively_reduced(self):
        E = make_structure(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
        assert E.causes == {("a", "b"), ("b", "c")}
        assert E.leq("a", "c")
        assert not E.leq("c", "a")

    def test_history_includes_the_event(self, chain):
        assert chain.below["c"] == {"a", "b", "c"}
        assert chain.below["a"] == {"a"}

    def test_inherited_generators_are_dropped(self):
        E = make_structure(["a", "b", "c"], [("b", "c")], [{"a", "b"}, {"a", "c"}])
        assert E.conflicts == {frozenset({"a", "b"})}
        assert not is_consistent(E, {"a", "c"})

    def test_structures_with_the_same_canonical_form_are_equal(self):
        E = make_structure(["a", "b", "c"], [("b", "c")], [{"a", "b"}, {"a", "c"}])
        F = make_structure(["c", "b", "a"], [("b", "c")], [{"b", "a"}])
        assert E == F
        assert hash(E) == hash(F)

    def test_polarities_accept_strings(self):
        E = make_structure(["a"], polarity={"a": "-"})
        assert E.pol("a") is Polarity.NEGATIVE

    def test_duplicate_events_are_reported(self):
        with pytest.raises(InvalidStructureError) as err:
            make_structure(["a", "a"])
        assert "duplicate event id a" in err.value.report.violations

    def test_causal_cycles_are_reported(self):
        with pytest.raises(InvalidStructureError) as err:
            make_structure(["a", "b"], [("a", "b"), ("b", "a")])
        assert "causal cycle {a, b}" in err.value.report.violations

    def test_every_violation_is_listed(self):
        with pytest.raises(InvalidStructureError) as err:
            make_structure(["a", "b"], [("a", "z")], [{"a"}], polarity={"a": "+"})
        assert err.value.report.violations == (
            "causal edge (a, z) references unknown event z",
            "generator {a} has fewer than 2 events",
            "polarity is not defined on exactly the events",
        )


class TestValidate:
    def test_valid_structure_has_an_empty_report(self, coin_machine):
        report = validate_es(coin_machine)
        assert report.is_valid
        assert str(report) == "valid"

    def test_generator_inside_a_history_is_reported(self):
        raw = EventStructure(
            frozenset({"a", "b"}),
            frozenset({("a", "b")}),
            frozenset({frozenset({"a", "b"})}),
        )
        assert validate_es(raw).violations == ("generator {a, b} is contained in [b]",)

    def test_blank_event_ids_are_reported(self):
        raw = EventStructure(frozenset({"a b"}))
        assert validate_es(raw).violations == ("invalid event id 'a b'",)

    def test_unknown_generator_members_are_reported(self):
        raw = EventStructure(frozenset({"a"}), conflicts=frozenset({frozenset({"a", "x"})}))
        assert validate_es(raw).violations == (
            "generator {a, x} references unknown event x",
        )


class TestConfigurations:
    def test_coin_machine(self, coin_machine):
        assert configurations(coin_machine) == (
            frozenset(),
            frozenset({"coin"}),
            frozenset({"coffee", "coin"}),
            frozenset({"coin", "tea"}),
        )

    def test_covers(self, coin_machine):
        domain = enumerate_configurations(coin_machine)
        assert domain.covers == ((0, 1, "coin"), (1, 2, "coffee"), (1, 3, "tea"))
        assert frozenset({"coin"}) in domain

    def test_empty_structure_has_only_the_empty_configuration(self):
        assert configurations(EMPTY_GAME) == (frozenset(),)

    def test_guard(self, coin_machine):
        with pytest.raises(GuardExceededError):
            enumerate_configurations(coin_machine, Settings(max_events=2))

    def test_consistency_and_down_closure(self, coin_machine):
        assert down_closure(coin_machine, {"tea"}) == {"coin", "tea"}
        assert is_consistent(coin_machine, {"coffee"})
        assert not is_consistent(coin_machine, {"coffee", "tea"})
        assert not is_configuration(coin_machine, {"coffee"})
        assert is_configuration(coin_machine, {"coin", "coffee"})

    def test_unknown_events_are_rejected(self, coin_machine):
        with pytest.raises(UnknownEventError):
            down_closure(coin_machine, {"milk"})

    @given(seed=st.integers(min_value=0, max_value=2**32), n=st.integers(0, 6))
    @settings(max_examples=50, deadline=None)
    def test_configurations_are_down_closed_and_consistent(self, seed, n):
        E = EspSeeder(seed, n).seed()
        domain = enumerate_configurations(E)
        for x in domain:
            assert is_configuration(E, x)
        for i, j, e in domain.covers:
            assert domain.configurations[j] == domain.configurations[i] | {e}


class TestParallel:
    def test_components_are_tagged(self, coffee, tea):
        result = parallel(coffee, tea)
        assert result.structure.events == {"0.coin", "0.coffee", "1.coin'", "1.tea"}
        assert result.structure.causes == {("0.coin", "0.coffee"), ("1.coin'", "1.tea")}
        assert len(configurations(result.structure)) == 9

    def test_injections_and_retractions(self, coffee, tea):
        result = parallel(coffee, tea, tags=("x", "y"))
        assert result.injections[1]("tea") == "y.tea"
        assert result.retractions[0]("x.coin") == "coin"
        assert result.retractions[0]("y.tea") is None
        assert untag("y.coin'") == ("y", "coin'")

    def test_kinds_cannot_be_mixed(self, coffee, bool_game):
        with pytest.raises(PreconditionError):
            parallel(coffee, bool_game)

    def test_empty_structures_combine_with_either_kind(self, coffee, bool_game):
        assert not parallel(EMPTY_GAME, coffee).structure.has_polarity
        assert parallel(EMPTY_GAME, bool_game).structure.has_polarity

    def test_tags_must_be_distinct(self, coffee):
        with pytest.raises(ValueError):
            parallel(coffee, coffee, tags=("x", "x"))


class TestProjection:
    def test_projection_keeps_order_and_conflict(self, vending):
        result = project(vending, {"coin", "coffee", "tea"})
        assert result.structure.causes == {("coin", "coffee"), ("coin", "tea")}
        assert result.structure.conflicts == {frozenset({"coffee", "tea"})}

    def test_conflict_is_inherited_through_hidden_events(self):
        E = make_structure(["a", "b", "c"], [("a", "c")], [{"a", "b"}])
        result = project(E, {"b", "c"})
        assert result.structure.conflicts == {frozenset({"b", "c"})}

    def test_projection_gives_a_hiding_map(self, vending):
        result = project(vending, {"coin", "coffee"})
        assert check_hiding_map(result.hiding)
        assert check_map(result.hiding).kind == "partial-map"

    def test_dropping_a_visible_dependency_is_not_hiding(self, chain):
        f = EsMap(chain, make_structure(["a", "c"]), {"a": "a", "c": "c"})
        assert check_map(f).kind == "partial-map"
        verdict = check_hiding_map(f)
        assert not verdict
        assert verdict.witness is None
        assert verdict.reason == "target is not isomorphic to the projection on the domain"

    def test_forgetting_a_conflict_is_not_hiding(self):
        exclusive = make_structure(["a", "b", "h"], conflicts=[{"a", "b"}])
        f = EsMap(exclusive, make_structure(["a", "b"]), {"a": "a", "b": "b"})
        assert check_map(f).kind == "partial-map"
        assert not check_hiding_map(f)


class TestMaps:
    def test_identity_preserves_polarity(self, vending):
        assert check_map(identity_map(vending)).kind == "polarity-preserving-map"

    def test_total_map_without_polarity(self, two_copies):
        verdict = check_map(two_copies)
        assert verdict.kind == "total-map"
        assert verdict.is_map

    def test_collapsing_concurrent_events_is_not_a_map(self):
        ab = make_structure(["a", "b"])
        verdict = check_map(EsMap(ab, ab, {"a": "a", "b": "a"}))
        assert verdict.kind == "not-a-map"
        assert verdict.reason == "not locally injective on {a, b}"

    def test_partial_map(self, coin_machine, coffee):
        f = EsMap(coin_machine, coffee, {"coin": "coin", "coffee": "coffee"})
        assert check_map(f).kind == "partial-map"

    def test_polarity_mismatch_has_its_own_kind(self, bool_game):
        verdict = check_map(EsMap(bool_game, dual(bool_game), {"ff": "ff", "tt": "tt"}))
        assert verdict.kind == "polarity-mismatch"
        assert verdict.is_map
        assert verdict.reason == "polarity not preserved at ff"

    def test_maps_without_polarity_are_only_total(self, bool_game):
        plain = strip_polarity(bool_game)
        assert check_map(EsMap(plain, plain, {"ff": "ff", "tt": "tt"})).kind == "total-map"

    def test_unknown_events_in_the_mapping(self, coffee):
        with pytest.raises(UnknownEventError):
            check_map(EsMap(coffee, coffee, {"milk": "coin"}))

    def test_composition(self, a_then_c, coin_machine):
        f = identity_map(a_then_c.source)
        assert compose_maps(f, a_then_c).mapping == a_then_c.mapping
        with pytest.raises(PreconditionError):
            compose_maps(a_then_c, identity_map(coin_machine))

    def test_inverse(self, coffee, tea):
        f = EsMap(coffee, tea, {"coin": "coin'", "coffee": "tea"})
        assert inverse_map(f).mapping == {"coin'": "coin", "tea": "coffee"}
        with pytest.raises(MapError):
            inverse_map(EsMap(coffee, tea, {"coin": "coin'"}))

    def test_partial_maps_factor_through_a_projection(self, coin_machine, coffee):
        f = EsMap(coin_machine, coffee, {"coin": "coin", "coffee": "coffee"})
        hiding, total = factor_partial(f)
        assert check_hiding_map(hiding)
        assert check_map(total).kind == "total-map"
        assert compose_maps(hiding, total).mapping == f.mapping

    def test_maps_reflect_causality(self, a_then_c):
        assert reflects_causality(a_then_c)

    def test_non_maps_can_fail_to_reflect_causality(self, a_then_c):
        plain = make_structure(["a", "b", "c"])
        f = EsMap(plain, a_then_c.source, {"a": "a", "b": "b", "c": "c"})
        verdict = reflects_causality(f)
        assert not verdict
        assert verdict.counterexample == ("a", "c")

    def test_agreement_on_configurations(self, a_then_c):
        assert agree_on_configurations(a_then_c, a_then_c)


class TestIsomorphisms:
    def test_coffee_and_tea_machines(self, coffee, tea):
        assert find_isomorphisms(coffee, tea) == [{"coin": "coin'", "coffee": "tea"}]

    def test_symmetric_structure_has_two_automorphisms(self, bool_game):
        assert len(find_isomorphisms(bool_game, bool_game)) == 2
        assert len(find_isomorphisms(bool_game, bool_game, limit=1)) == 1

    def test_non_isomorphic(self, coffee, coin_machine):
        assert find_isomorphisms(coffee, coin_machine) == []

    def test_relabelled_structure_is_isomorphic(self, vending):
        rename = {e: e.upper() for e in vending.events}
        f = EsMap(vending, relabel(vending, rename), rename)
        assert is_isomorphism(f)

    def test_isomorphism_from_configurations(self, coffee, tea):
        rename = {"coin": "coin'", "coffee": "tea"}
        f = iso_from_configurations(coffee, tea, lambda x: frozenset(rename[e] for e in x))
        assert f.mapping == rename

    def test_configuration_maps_must_add_one_event(self, coffee, tea):
        with pytest.raises(MapError):
            iso_from_configurations(coffee, tea, lambda x: frozenset())
