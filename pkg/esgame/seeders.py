import logging
import random
from abc import ABC, abstractmethod
from typing import Any

from esgame.algebra import colift, lift, tensor
from esgame.games import copycat, dual
from esgame.interactions import compose, split_games
from esgame.strategies import require_strategy_map
from esgame.structures import (
    configurations,
    identity_map,
    is_configuration,
    make_structure,
    maximal_events,
    validate_es,
)
from esgame.types import (
    EsgameError,
    EsMap,
    EventStructure,
    GuardExceededError,
    Polarity,
    PreconditionError,
    PreStrategy,
)
from esgame.utils.core import Settings, get_settings

logger = logging.getLogger(__name__)

MAX_SEED = 2**64


def _check_seed(seed: int) -> int:
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    return seed


class BaseSeeder(ABC):
    @abstractmethod
    def seed(self) -> Any: ...


class EspSeeder(BaseSeeder):
    """Random esps with forward causal edges and valid conflict generators.

    Events are named ``e0``, ``e1``, ...; a causal edge can only go from a
    lower to a higher index, so the result is always acyclic.
    """

    edge_probability: float = 0.3
    conflict_probability: float = 0.2
    ternary_probability: float = 0.1

    def __init__(
        self,
        seed: int,
        n_events: int,
        *,
        polarity: bool = True,
        settings: Settings | None = None,
    ):
        self.random_seed = _check_seed(seed)
        self.n_events = n_events
        self.polarity = polarity

        settings = settings or get_settings()
        if n_events < 0:
            raise ValueError("n_events must not be negative")
        if n_events > settings.max_events:
            raise GuardExceededError(
                f"{n_events} events exceed the guard of {settings.max_events}"
            )

    def seed(self) -> EventStructure:
        rng = random.Random(self.random_seed)
        events = [f"e{i}" for i in range(self.n_events)]

        causes = [
            (a, b)
            for i, a in enumerate(events)
            for b in events[i + 1 :]
            if rng.random() < self.edge_probability
        ]

        conflicts: list[frozenset[str]] = []

        def try_conflict(candidate: frozenset[str]) -> None:
            trial = EventStructure(
                frozenset(events), frozenset(causes), frozenset([*conflicts, candidate])
            )
            if validate_es(trial).is_valid:
                conflicts.append(candidate)

        for i, a in enumerate(events):
            for b in events[i + 1 :]:
                if rng.random() < self.conflict_probability:
                    try_conflict(frozenset({a, b}))
        if len(events) >= 3 and rng.random() < self.ternary_probability:
            try_conflict(frozenset(rng.sample(events, 3)))

        polarity = None
        if self.polarity:
            polarity = {e: rng.choice([Polarity.POSITIVE, Polarity.NEGATIVE]) for e in events}

        return make_structure(events, causes, conflicts, polarity)


class PreStrategySeeder(BaseSeeder):
    """Random pre-strategies on a given game.

    Events are labelled at random and made to respect the game by a repair
    loop: the least configuration whose image is not a configuration (or is
    not injective) is made inconsistent, or its top event is dropped when it
    has only one.

    With ``strategies_only`` draws are repeated until one is receptive and
    courteous; the identity on the game is the fallback.
    """

    edge_probability: float = 0.4
    attempts: int = 30

    def __init__(
        self,
        seed: int,
        game: EventStructure,
        max_events: int = 6,
        *,
        strategies_only: bool = False,
    ):
        self.random_seed = _check_seed(seed)
        self.game = game
        self.max_events = max_events
        self.strategies_only = strategies_only
        if game.polarity is None:
            raise ValueError("PreStrategySeeder needs a game with polarities")

    def seed(self) -> PreStrategy:
        rng = random.Random(self.random_seed)
        if not self.strategies_only:
            return self._draw(rng)

        for _ in range(self.attempts):
            sigma = self._draw(rng)
            try:
                require_strategy_map(sigma.labelling)
            except PreconditionError:
                continue
            return sigma
        logger.debug(f"No strategy in {self.attempts} draws, using the identity")
        return PreStrategy(identity_map(self.game), name=f"random-{self.random_seed}")

    def _draw(self, rng: random.Random) -> PreStrategy:
        labels = sorted(self.game.events)
        n = rng.randint(0, self.max_events) if labels else 0

        events = [f"s{i}" for i in range(n)]
        labelling = {s: rng.choice(labels) for s in events}
        causes = {
            (a, b)
            for i, a in enumerate(events)
            for b in events[i + 1 :]
            if rng.random() < self.edge_probability
        }
        conflicts: set[frozenset[str]] = set()

        while True:
            structure = make_structure(
                labelling,
                causes,
                conflicts,
                {s: self.game.pol(a) for s, a in labelling.items()},
            )
            f = EsMap(structure, self.game, dict(labelling))
            failing = next(
                (x for x in configurations(structure) if not self._respects(f, x)), None
            )
            if failing is None:
                break

            tops = maximal_events(structure, failing)
            candidate = EventStructure(
                structure.events, structure.causes, frozenset([*conflicts, tops])
            )
            if len(tops) > 1 and validate_es(candidate).is_valid:
                conflicts.add(tops)
                continue

            dropped = max(tops, key=lambda s: int(s[1:]))
            removed = {s for s in structure.events if structure.leq(dropped, s)}
            labelling = {s: a for s, a in labelling.items() if s not in removed}
            causes = {(a, b) for a, b in causes if a not in removed and b not in removed}
            conflicts = {g for g in conflicts if not g & removed}

        logger.debug(f"Generated a pre-strategy with {len(structure.events)} events")
        return PreStrategy(f, name=f"random-{self.random_seed}")

    @staticmethod
    def _respects(f: EsMap, x: frozenset[str]) -> bool:
        image = f.image(x)
        return len(image) == len(x) and is_configuration(f.target, image)


class StrategyFamilySeeder(BaseSeeder):
    """Strategies drawn from copycats, liftings and co-liftings of random
    receptive courteous maps, tensors and compositions, all of which are
    closed under strategy-hood."""

    drop_probability: float = 0.5

    def __init__(self, seed: int, size: int = 2, depth: int = 2):
        self.random_seed = _check_seed(seed)
        self.size = size
        self.depth = depth

    def seed(self) -> PreStrategy:
        rng = random.Random(self.random_seed)
        return self._draw(rng, self.depth)

    def seed_from(self, A: EventStructure) -> PreStrategy:
        """A family member on A⊥ ∥ B for some B, composable after any σ ending at A."""
        rng = random.Random(self.random_seed)
        return self._from_game(A, rng, self.depth)

    def _game(self, rng: random.Random) -> EventStructure:
        return EspSeeder(rng.randrange(MAX_SEED), rng.randint(0, self.size)).seed()

    def weakening(self, A: EventStructure, rng: random.Random) -> EsMap:
        """
        The identity on events from A to A with some links from a negative to
        a positive event dropped. Such maps are receptive and courteous.
        """
        droppable = sorted(
            (a, b)
            for a, b in A.causes
            if A.pol(a) is Polarity.NEGATIVE and A.pol(b) is Polarity.POSITIVE
        )
        dropped = {link for link in droppable if rng.random() < self.drop_probability}
        B = make_structure(A.events, A.causes - dropped, A.conflicts, A.polarity)
        return EsMap(A, B, {a: a for a in A.events})

    def _lifted(self, A: EventStructure, rng: random.Random) -> PreStrategy:
        try:
            return lift(self.weakening(A, rng))
        except EsgameError as e:
            logger.debug(f"Falling back to copycat: {e}")
            return copycat(A)

    def _colifted(self, A: EventStructure, rng: random.Random) -> PreStrategy:
        sigma = PreStrategySeeder(
            rng.randrange(MAX_SEED), dual(A), max_events=self.size + 1, strategies_only=True
        ).seed()
        return colift(sigma.labelling)

    def _from_game(self, A: EventStructure, rng: random.Random, depth: int) -> PreStrategy:
        kinds = ["copycat", "lift", "colift"]
        if depth > 0:
            kinds.append("compose")
        match rng.choice(kinds):
            case "copycat":
                return copycat(A)
            case "lift":
                return self._lifted(A, rng)
            case "colift":
                return self._colifted(A, rng)
            case _:
                sigma = self._from_game(A, rng, depth - 1)
                _, B = split_games(sigma)
                return compose(sigma, self._from_game(B, rng, depth - 1)).strategy

    def _draw(self, rng: random.Random, depth: int) -> PreStrategy:
        if depth <= 0:
            return self._from_game(self._game(rng), rng, 0)
        match rng.choice(["game", "tensor", "compose"]):
            case "game":
                return self._from_game(self._game(rng), rng, depth)
            case "tensor":
                return tensor(self._draw(rng, depth - 1), self._draw(rng, depth - 1))
            case _:
                sigma = self._draw(rng, depth - 1)
                _, B = split_games(sigma)
                return compose(sigma, self._from_game(B, rng, depth - 1)).strategy
