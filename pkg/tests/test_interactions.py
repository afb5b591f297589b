import pytest

from esgame.games import copycat
from esgame.interactions import (
    compose,
    composition_map,
    enumerate_secured_bijections,
    interaction,
    interaction_strategy,
    is_secured,
    is_secured_by_covering,
    mediating,
    minimal_witness,
    open_hiding,
    pair_key,
    pullback,
    split_games,
    sync_pairs,
    synchronized_pairs_secured,
    zipped_hiding,
)
from esgame.structures import (
    check_hiding_map,
    check_map,
    identity_map,
    is_isomorphism,
    strategy_isomorphism,
)
from esgame.types import EsMap, GuardExceededError, Polarity, PreconditionError
from esgame.utils.core import Settings
from tests.conftest import labelled_causes

TRADE = frozenset({("drug", "drug"), ("money", "money")})


class TestSecuredBijections:
    def test_trade_deadlocks(self, dealer, buyer):
        assert not is_secured(TRADE, dealer.source, buyer.source)
        assert not is_secured_by_covering(TRADE, dealer.source, buyer.source)

    def test_trade_only_reaches_the_empty_bijection(self, dealer, buyer):
        assert enumerate_secured_bijections(dealer, buyer) == [frozenset()]

    def test_independent_prefixes(self, a_then_c, b_then_c):
        found = enumerate_secured_bijections(a_then_c, b_then_c)
        assert [pair_key(phi) for phi in found] == [
            "",
            "a,a",
            "b,b",
            "a,a;b,b",
            "a,a;b,b;c,c",
        ]
        for phi in found:
            assert is_secured(phi, a_then_c.source, b_then_c.source)
            assert is_secured_by_covering(phi, a_then_c.source, b_then_c.source)

    def test_non_bijections_are_rejected(self, dealer, buyer):
        with pytest.raises(PreconditionError):
            is_secured({("drug", "drug"), ("drug", "money")}, dealer.source, buyer.source)

    def test_synchronized_pairs(self, two_copies, a_then_b):
        assert sync_pairs(two_copies, a_then_b) == [("a", "a"), ("a'", "a"), ("b", "b")]

    def test_synchronized_configurations_are_secured(self, a_then_c, b_then_c):
        assert synchronized_pairs_secured(a_then_c, b_then_c)

    def test_trade_has_an_unsecured_synchronization(self, dealer, buyer):
        verdict = synchronized_pairs_secured(dealer, buyer)
        assert not verdict
        assert verdict.counterexample == (
            frozenset({"drug", "money"}),
            frozenset({"drug", "money"}),
        )


class TestPullback:
    def test_independent_causes_are_merged(self, a_then_c, b_then_c):
        result = pullback(a_then_c, b_then_c)
        assert len(result.structure.events) == 3
        assert labelled_causes(result) == {("a", "c"), ("b", "c")}
        assert not result.structure.conflicts

    def test_duplicated_copy(self, two_copies, a_then_b):
        result = pullback(two_copies, a_then_b)
        assert len(result.structure.events) == 4
        assert sorted(pair_key(p) for p in result.primes.values()) == [
            "a',a",
            "a',a;b,b",
            "a,a",
            "a,a;b,b",
        ]
        a = result.by_pairs[frozenset({("a", "a")})]
        a_copy = result.by_pairs[frozenset({("a'", "a")})]
        assert frozenset({a, a_copy}) in result.structure.conflicts

    def test_trade_is_empty(self, dealer, buyer):
        assert not pullback(dealer, buyer).structure.events

    def test_legs_commute(self, two_copies, a_then_b):
        result = pullback(two_copies, a_then_b)
        for p in result.structure.events:
            assert two_copies(result.left(p)) == a_then_b(result.right(p))
        assert check_map(result.left).is_map
        assert check_map(result.right).is_map

    def test_mediating_map_of_the_legs_is_the_identity(self, a_then_c, b_then_c):
        result = pullback(a_then_c, b_then_c)
        m = mediating(result.left, result.right, result)
        assert m.mapping == {p: p for p in result.structure.events}

    def test_mediating_rejects_non_commuting_cones(self, a_then_c, b_then_c):
        result = pullback(a_then_c, b_then_c)
        X = a_then_c.source
        alpha = EsMap(X, a_then_c.source, {"a": "a"})
        beta = EsMap(X, b_then_c.source, {"a": "b"})
        with pytest.raises(PreconditionError):
            mediating(alpha, beta, result)

    def test_endpoint_mismatch(self, a_then_c, dealer):
        with pytest.raises(PreconditionError):
            pullback(a_then_c, dealer)

    def test_guard(self, two_copies, a_then_b):
        with pytest.raises(GuardExceededError):
            pullback(two_copies, a_then_b, Settings(max_sync_pairs=2))


class TestComposition:
    def test_negating_a_nondeterministic_boolean(self, nondet_bool, negation):
        result = compose(nondet_bool, negation)
        assert len(result.interaction.structure.events) == 4
        assert labelled_causes(result.interaction) == {("1.ff", "2.tt"), ("1.tt", "2.ff")}
        assert strategy_isomorphism(result.strategy, nondet_bool) is not None

    def test_copycat_is_idempotent(self, w_game):
        cc = copycat(w_game)
        assert strategy_isomorphism(compose(cc, cc).strategy, cc) is not None

    def test_copycat_drops_the_wait(self, done_click, w_game):
        composite = compose(done_click, copycat(w_game)).strategy
        assert len(composite.inner.events) == 2
        assert not composite.inner.causes

    @pytest.mark.parametrize("name", ["y_empty", "y_dup"])
    def test_non_receptive_strategies_are_repaired(self, name, request, y_game):
        sigma = request.getfixturevalue(name)
        composite = compose(sigma, copycat(y_game)).strategy
        assert len(composite.inner.events) == 1
        (event,) = composite.inner.events
        assert composite(event) == "R.o"
        assert composite.inner.pol(event) is Polarity.NEGATIVE

    def test_hiding_map(self, nondet_bool, negation):
        result = compose(nondet_bool, negation)
        assert check_hiding_map(result.hiding)
        source, hid = open_hiding(result)
        assert hid.source == source.inner
        assert check_hiding_map(hid)

    def test_interaction_as_a_strategy(self, nondet_bool, negation):
        sigma = interaction_strategy(interaction(nondet_bool, negation))
        assert sorted(sigma.labelling.mapping.values()) == ["L.1.ff", "L.1.tt", "R.ff", "R.tt"]
        assert check_map(sigma.labelling).kind == "polarity-preserving-map"

    def test_minimal_witness_ends_in_visible_events(self, nondet_bool, negation):
        result = compose(nondet_bool, negation)
        for event in result.structure.events:
            witness = minimal_witness(result, {event})
            assert len(witness) == 2
            assert event in witness

    def test_zipping_a_hiding_map(self, nondet_bool, negation, bool_game):
        result = compose(nondet_bool, negation)
        source, hid = open_hiding(result)
        zipped = zipped_hiding(hid, copycat(bool_game), source=source, target=result.strategy)
        assert check_hiding_map(zipped)

    def test_identities_induce_the_identity(self, nondet_bool, negation):
        result = compose(nondet_bool, negation)
        f = composition_map(
            identity_map(nondet_bool.inner), identity_map(negation.inner), result, result
        )
        assert f.mapping == {e: e for e in result.structure.events}
        assert is_isomorphism(f)

    def test_middle_games_must_match(self, nondet_bool, w_game):
        with pytest.raises(PreconditionError):
            interaction(nondet_bool, copycat(w_game))

    def test_unsplit_games(self, vending_strategy):
        with pytest.raises(PreconditionError):
            split_games(vending_strategy)
