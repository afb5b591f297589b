import logging
from collections.abc import Callable, Mapping
from functools import lru_cache
from typing import Literal

from esgame.games import (
    copycat,
    open_strategy,
    scott_leq,
    scott_relation,
)
from esgame.interactions import (
    bijection_components,
    compose,
    composition_map,
    minimal_witness,
    split_games,
)
from esgame.structures import (
    check_map,
    compose_maps,
    configurations,
    down_closure,
    enumerate_configurations,
    identity_map,
    is_configuration,
    is_consistent,
    iso_from_configurations,
    strategy_isomorphism,
    untag,
)
from esgame.types import (
    Configuration,
    EsMap,
    EventStructure,
    LawVerdict,
    Polarity,
    PreconditionError,
    PreStrategy,
    StrategyVerdict,
    WitnessPair,
    config_key,
    format_config,
)
from esgame.utils.core import Settings

logger = logging.getLogger(__name__)

FibrationVariant = Literal["neg", "pos", "scott"]
FIBRATION_VARIANTS: tuple[FibrationVariant, ...] = ("neg", "pos", "scott")


def _enabled(E: EventStructure, x: Configuration, e: str) -> bool:
    """Whether x ∪ {e} is a configuration extending x."""
    return e not in x and E.below[e] - {e} <= x and is_consistent(E, x | {e})


def is_receptive(sigma: PreStrategy, settings: Settings | None = None) -> LawVerdict:
    """
    Check that every negative extension of σx in the game is matched by
    exactly one extension of x.

    Failures report the least (x, a) with ``"missing"`` or ``"duplicate"``.
    """
    S, A = sigma.inner, sigma.game
    failures = []
    for x in enumerate_configurations(S, settings):
        image = sigma.labelling.image(x)
        for a in sorted(A.events - image):
            if A.pol(a) is not Polarity.NEGATIVE or not _enabled(A, image, a):
                continue
            matches = [
                s for s in S.events - x if sigma(s) == a and _enabled(S, x, s)
            ]
            if len(matches) != 1:
                kind = "missing" if not matches else "duplicate"
                failures.append(((config_key(x), a), (x, a, kind)))

    if failures:
        _, counterexample = min(failures, key=lambda item: item[0])
        logger.debug(f"Receptivity fails at {counterexample}")
        return LawVerdict(False, counterexample=counterexample)
    return LawVerdict(True)


def is_courteous(sigma: PreStrategy) -> LawVerdict:
    """Every immediate link not of shape − ⇢ + must come from the game."""
    S, A = sigma.inner, sigma.game
    for s, s2 in sorted(S.causes):
        if (S.pol(s), S.pol(s2)) == (Polarity.NEGATIVE, Polarity.POSITIVE):
            continue
        if (sigma(s), sigma(s2)) not in A.causes:
            return LawVerdict(False, counterexample=(s, s2))
    return LawVerdict(True)


def _relation(variant: FibrationVariant) -> Callable[[EventStructure, Configuration, Configuration], bool]:
    """The order "y below x" of each fibration variant."""

    def neg(E: EventStructure, y: Configuration, x: Configuration) -> bool:
        return y >= x and all(E.pol(e) is Polarity.NEGATIVE for e in y - x)

    def pos(E: EventStructure, y: Configuration, x: Configuration) -> bool:
        return y <= x and all(E.pol(e) is Polarity.POSITIVE for e in x - y)

    def scott(E: EventStructure, y: Configuration, x: Configuration) -> bool:
        return scott_relation(E, y, x)[0]

    return {"neg": neg, "pos": pos, "scott": scott}[variant]


@lru_cache(maxsize=256)
def _image_index(sigma: PreStrategy) -> Mapping[Configuration, tuple[Configuration, ...]]:
    index: dict[Configuration, list[Configuration]] = {}
    for x in configurations(sigma.inner):
        index.setdefault(sigma.labelling.image(x), []).append(x)
    return {y: tuple(xs) for y, xs in index.items()}


def is_discrete_fibration(
    sigma: PreStrategy, variant: FibrationVariant, settings: Settings | None = None
) -> LawVerdict:
    """
    Check that σ : 𝒞(S) → 𝒞(A) is a discrete fibration for the chosen order.

    Counterexamples are (x, y, n) where n ≠ 1 configurations below x map to y.
    """
    if variant not in FIBRATION_VARIANTS:
        raise ValueError(f"Unknown fibration variant: {variant}")
    below = _relation(variant)
    S, A = sigma.inner, sigma.game

    game_configurations = enumerate_configurations(A, settings)
    index = _image_index(sigma)

    for x in configurations(S, settings):
        image = sigma.labelling.image(x)
        for y in game_configurations:
            if not below(A, y, image):
                continue
            count = sum(1 for x2 in index.get(y, ()) if below(S, x2, x))
            if count != 1:
                return LawVerdict(False, counterexample=(x, y, count))
    return LawVerdict(True)


def is_strategy(sigma: PreStrategy, settings: Settings | None = None) -> LawVerdict:
    """
    Whether cc ⊙ σ ≅ σ over the game; the witness is the isomorphism found.

    Any isomorphism is reported, not a canonical one.
    """
    opened = open_strategy(sigma)
    composite = compose(opened, copycat(sigma.game), settings)
    iso = strategy_isomorphism(composite.strategy, opened)
    if iso is None:
        return LawVerdict(False, counterexample=composite.strategy)
    return LawVerdict(True, witness=iso)


def is_copycat_invariant(sigma: PreStrategy, settings: Settings | None = None) -> LawVerdict:
    return is_strategy(sigma, settings)


def check_strategy(sigma: PreStrategy, settings: Settings | None = None) -> StrategyVerdict:
    """Run the four characterisations of strategies side by side."""
    verdict = StrategyVerdict(
        receptive=is_receptive(sigma, settings),
        courteous=is_courteous(sigma),
        fibration={v: is_discrete_fibration(sigma, v, settings) for v in FIBRATION_VARIANTS},
        copycat_invariant=is_copycat_invariant(sigma, settings),
    )
    if not verdict.agrees:
        logger.warning(f"Characterisations of {sigma!r} disagree")
    return verdict


def strip_negatives(sigma: PreStrategy, x: Configuration) -> Configuration:
    """[x⁺], the least configuration below x holding its positive events."""
    S = sigma.inner
    if not is_configuration(S, x):
        raise PreconditionError(f"Not a configuration: {format_config(x)}")
    return down_closure(S, {s for s in x if S.pol(s) is Polarity.POSITIVE})


def fibration_lift(sigma: PreStrategy, x: Configuration, y: Configuration) -> Configuration:
    """
    The unique x′ ⊑ x with σx′ = y.

    Raises:
        PreconditionError: If y ⋢ σx or the lift is not unique.
    """
    holds, _ = scott_leq(sigma.game, y, sigma.labelling.image(x))
    if not holds:
        raise PreconditionError(f"{format_config(y)} is not below the image of {format_config(x)}")
    candidates = [
        x2 for x2 in _image_index(sigma).get(y, ()) if scott_relation(sigma.inner, x2, x)[0]
    ]
    if len(candidates) != 1:
        raise PreconditionError(
            f"{len(candidates)} lifts of {format_config(y)} below {format_config(x)}"
        )
    return candidates[0]


# Unitors


def _split_copy(events: set[str]) -> tuple[frozenset[str], frozenset[str]]:
    left_copy, right_copy = set(), set()
    for e in events:
        side, rest = untag(e)
        (left_copy if side == "L" else right_copy).add(rest)
    return frozenset(left_copy), frozenset(right_copy)


def left_witness(sigma: PreStrategy, z: Configuration, settings: Settings | None = None) -> tuple[WitnessPair, frozenset[str], frozenset[str]]:
    """
    Read a configuration of cc_B ⊙ σ as (x_S, y) with y ⊑ σx_S.

    Also returns the two copies of B met in the interaction.
    """
    c = compose(sigma, copycat(split_games(sigma)[1]), settings)
    lefts, rights = bijection_components(c.interaction.bijection(minimal_witness(c, z)))
    x_left_b, x_right_b = _split_copy(rights["1"])
    y = {f"L.{a}" for a in rights["0"]} | {f"R.{b}" for b in x_right_b}
    return WitnessPair(frozenset(lefts["0"]), frozenset(y)), x_left_b, x_right_b


def right_witness(sigma: PreStrategy, z: Configuration, settings: Settings | None = None) -> WitnessPair:
    """Read a configuration of σ ⊙ cc_A as (x_S, y) with y ⊑ σx_S."""
    c = compose(copycat(split_games(sigma)[0]), sigma, settings)
    lefts, rights = bijection_components(c.interaction.bijection(minimal_witness(c, z)))
    x_left_a, _ = _split_copy(lefts["0"])
    x_s = frozenset(rights["1"])
    x_b = {label for label in sigma.labelling.image(x_s) if label.startswith("R.")}
    y = {f"L.{a}" for a in x_left_a} | x_b
    return WitnessPair(x_s, frozenset(y))


def left_unitor(sigma: PreStrategy, settings: Settings | None = None) -> EsMap:
    """
    The isomorphism cc_B ⊙ σ → σ.

    A configuration with witness pair (x_S, y) is sent to the lift of y
    below x_S.
    """
    c = compose(sigma, copycat(split_games(sigma)[1]), settings)

    def on_configurations(z: Configuration) -> Configuration:
        pair, _, _ = left_witness(sigma, z, settings)
        return fibration_lift(sigma, pair.strategy_part, pair.game_part)

    return iso_from_configurations(c.structure, sigma.inner, on_configurations)


def right_unitor(sigma: PreStrategy, settings: Settings | None = None) -> EsMap:
    """The isomorphism σ ⊙ cc_A → σ."""
    c = compose(copycat(split_games(sigma)[0]), sigma, settings)

    def on_configurations(z: Configuration) -> Configuration:
        pair = right_witness(sigma, z, settings)
        return fibration_lift(sigma, pair.strategy_part, pair.game_part)

    return iso_from_configurations(c.structure, sigma.inner, on_configurations)


def negative_gap_holds(sigma: PreStrategy, settings: Settings | None = None) -> LawVerdict:
    """For courteous σ, the copy of B on σ's side sits ⊆⁻ below the other copy."""
    _, B = split_games(sigma)
    c = compose(sigma, copycat(B), settings)
    for z in configurations(c.structure, settings):
        _, x_left_b, x_right_b = left_witness(sigma, z, settings)
        gap = x_right_b - x_left_b
        if not x_left_b <= x_right_b or any(B.pol(b) is not Polarity.NEGATIVE for b in gap):
            return LawVerdict(False, counterexample=z)
    return LawVerdict(True)


def unitor_naturality(
    f: EsMap, sigma: PreStrategy, sigma2: PreStrategy, settings: Settings | None = None
) -> LawVerdict:
    """
    Check λ_σ′ ∘ (cc ⊙ f) = f ∘ λ_σ for a map f : σ ⇒ σ′ of pre-strategies.
    """
    _, B = split_games(sigma)
    cc = copycat(B)
    source = compose(sigma, cc, settings)
    target = compose(sigma2, cc, settings)
    lifted = composition_map(f, identity_map(cc.inner), source, target)

    lhs = compose_maps(lifted, left_unitor(sigma2, settings))
    rhs = compose_maps(left_unitor(sigma, settings), f)
    if lhs.mapping != rhs.mapping:
        differing = sorted(e for e in lhs.mapping if lhs.mapping[e] != rhs.mapping.get(e))
        return LawVerdict(False, counterexample=differing)
    return LawVerdict(True)


def require_strategy_map(f: EsMap) -> None:
    """
    Refuse maps of games that are not receptive and courteous strategies on
    their target.

    Raises:
        PreconditionError: With the first failing law.
    """
    verdict = check_map(f)
    if verdict.kind != "polarity-preserving-map":
        raise PreconditionError(f"Expected a polarity-preserving map, got {verdict}")
    as_strategy = PreStrategy(f)
    receptive = is_receptive(as_strategy)
    if not receptive:
        raise PreconditionError(f"Map is not receptive at {receptive.counterexample}")
    courteous = is_courteous(as_strategy)
    if not courteous:
        raise PreconditionError(f"Map is not courteous at {courteous.counterexample}")
