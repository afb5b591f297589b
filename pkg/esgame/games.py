import logging
from dataclasses import replace
from functools import lru_cache

from esgame.structures import (
    EMPTY_GAME,
    assemble,
    configurations,
    is_configuration,
    parallel,
)
from esgame.types import (
    Configuration,
    EsMap,
    EventStructure,
    Polarity,
    PreconditionError,
    PreStrategy,
    format_config,
)
from esgame.utils.core import Settings

logger = logging.getLogger(__name__)

LEFT = "L"
RIGHT = "R"


def dual(A: EventStructure) -> EventStructure:
    """Flip every polarity; structures without polarity are returned as is."""
    if A.polarity is None:
        return A
    return replace(A, polarity={e: p.flip() for e, p in A.polarity.items()})


def strategy_game(A: EventStructure, B: EventStructure) -> EventStructure:
    """The game A⊥ ∥ B, with events tagged ``L.`` and ``R.``."""
    return parallel(dual(A), B, tags=(LEFT, RIGHT)).structure


def left(event: str) -> str:
    return f"{LEFT}.{event}"


def right(event: str) -> str:
    return f"{RIGHT}.{event}"


def _other(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


@lru_cache(maxsize=256)
def copycat(A: EventStructure) -> PreStrategy:
    """
    The copycat strategy cc_A on A⊥ ∥ A.

    The carrier CC_A has the events of A⊥ ∥ A. Each positive copy of an event
    waits for its negative copy on the other side. The order is computed in
    closed form: (j, b) is below (i, a) on the other side iff b lies under
    some c ≤ a whose copy on side j is negative.
    """
    if A.polarity is None:
        raise PreconditionError("Copycat needs a game")

    game = strategy_game(A, A)
    negative_side = {
        a: LEFT if game.pol(left(a)) is Polarity.NEGATIVE else RIGHT for a in A.events
    }

    causes: set[tuple[str, str]] = set()
    for side in (LEFT, RIGHT):
        other = _other(side)
        for a in A.events:
            target = f"{side}.{a}"
            history = {f"{side}.{b}" for b in A.below[a]}
            for c in A.below[a]:
                if negative_side[c] == other:
                    history |= {f"{other}.{b}" for b in A.below[c]}
            causes.update((u, target) for u in history if u != target)

    carrier = assemble(game.events, causes, game.conflicts, game.polarity)
    labelling = EsMap(carrier, game, {e: e for e in carrier.events})

    logger.debug(f"Built copycat with {len(carrier.events)} events")
    return PreStrategy(labelling, left=A, right=A, name="cc")


def copycat_links(A: EventStructure) -> frozenset[tuple[str, str]]:
    """
    The immediate causal links CC_A must have.

    Same-side links come from A when they do not run from a negative to a
    positive event; a negative copy of an event is immediately followed by
    its positive copy on the other side.
    """
    game = strategy_game(A, A)
    links: set[tuple[str, str]] = set()
    for side in (LEFT, RIGHT):
        for a, b in A.causes:
            u, v = f"{side}.{a}", f"{side}.{b}"
            if game.pol(u) is Polarity.POSITIVE or game.pol(v) is Polarity.NEGATIVE:
                links.add((u, v))
        for a in A.events:
            u = f"{side}.{a}"
            if game.pol(u) is Polarity.NEGATIVE:
                links.add((u, f"{_other(side)}.{a}"))
    return frozenset(links)


def copycat_map(f: EsMap) -> EsMap:
    """
    The action CC_f = f⊥ ∥ f of copycat on a map of games.

    Raises:
        PreconditionError: If f is not a total, polarity-preserving map that
            is receptive and courteous as a strategy on its target.
    """
    from esgame.strategies import require_strategy_map

    require_strategy_map(f)

    mapping: dict[str, str] = {}
    for a, b in f.mapping.items():
        mapping[left(a)] = left(b)
        mapping[right(a)] = right(b)
    return EsMap(copycat(f.source).inner, copycat(f.target).inner, mapping)


def open_strategy(sigma: PreStrategy) -> PreStrategy:
    """View a pre-strategy on A as one on 1⊥ ∥ A."""
    game = strategy_game(EMPTY_GAME, sigma.game)
    mapping = {s: right(a) for s, a in sigma.labelling.mapping.items()}
    return PreStrategy(
        EsMap(sigma.inner, game, mapping),
        left=EMPTY_GAME,
        right=sigma.game,
        name=sigma.name,
    )


# Scott order


def _require_configurations(A: EventStructure, *xs: Configuration) -> None:
    for x in xs:
        if not is_configuration(A, x):
            raise PreconditionError(f"Not a configuration: {format_config(x)}")


def scott_leq(
    A: EventStructure, x: Configuration, y: Configuration
) -> tuple[bool, Configuration | None]:
    """
    Decide x ⊑ y, i.e. x ⊇⁻ x ∩ y ⊆⁺ y, returning x ∩ y as witness.

    Raises:
        PreconditionError: If x or y is not a configuration of A.
    """
    _require_configurations(A, x, y)
    return scott_relation(A, x, y)


def scott_relation(
    A: EventStructure, x: Configuration, y: Configuration
) -> tuple[bool, Configuration | None]:
    z = x & y
    holds = all(A.pol(e) is Polarity.NEGATIVE for e in x - z) and all(
        A.pol(e) is Polarity.POSITIVE for e in y - z
    )
    return holds, (z if holds else None)


def scott_leq_by_copycat(A: EventStructure, x: Configuration, y: Configuration) -> bool:
    """x ⊑ y iff y on the left and x on the right form a configuration of CC_A."""
    _require_configurations(A, x, y)
    joint = {left(a) for a in y} | {right(a) for a in x}
    return is_configuration(copycat(A).inner, joint)


def scott_leq_by_search(
    A: EventStructure,
    x: Configuration,
    y: Configuration,
    settings: Settings | None = None,
) -> bool:
    """x ⊑ y iff some configuration z satisfies x ⊇⁻ z ⊆⁺ y."""
    _require_configurations(A, x, y)
    for z in configurations(A, settings):
        if not z <= x or not z <= y:
            continue
        if all(A.pol(e) is Polarity.NEGATIVE for e in x - z) and all(
            A.pol(e) is Polarity.POSITIVE for e in y - z
        ):
            return True
    return False
