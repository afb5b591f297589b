from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Any, Literal, Protocol

Event = str
Configuration = frozenset[str]
Pair = tuple[str, str]


def config_key(x: Iterable[str]) -> tuple[str, ...]:
    """Canonical sort key of a configuration."""
    return tuple(sorted(x))


def format_config(x: Iterable[str]) -> str:
    return "{" + ", ".join(sorted(x)) + "}"


class Polarity(StrEnum):
    POSITIVE = "+"
    NEGATIVE = "-"

    def flip(self) -> "Polarity":
        if self is Polarity.POSITIVE:
            return Polarity.NEGATIVE
        return Polarity.POSITIVE


@dataclass(frozen=True, eq=False)
class EventStructure:
    """
    A finite event structure, optionally carrying polarities.

    Causality is stored as the immediate causal edges and consistency as
    conflict generators: a set X is consistent iff no generator is contained
    in the down-closure of X. A structure whose ``polarity`` is set is an esp,
    which is also how games are represented.

    Instances are normally built through ``esgame.structures.make_structure``,
    which validates and normalizes them.
    """

    events: frozenset[str]
    causes: frozenset[Pair] = frozenset()
    conflicts: frozenset[frozenset[str]] = frozenset()
    polarity: Mapping[str, Polarity] | None = None

    @property
    def has_polarity(self) -> bool:
        return self.polarity is not None

    def pol(self, event: str) -> Polarity:
        if self.polarity is None:
            raise PreconditionError("Structure carries no polarity")
        return self.polarity[event]

    @cached_property
    def below(self) -> Mapping[str, frozenset[str]]:
        """Map each event e to its history [e], e included."""
        from esgame.utils.graphs import ancestors

        strict = ancestors(self.events, self.causes)
        return {e: strict[e] | {e} for e in self.events}

    @cached_property
    def successors(self) -> Mapping[str, frozenset[str]]:
        result: dict[str, set[str]] = {e: set() for e in self.events}
        for a, b in self.causes:
            result[a].add(b)
        return {e: frozenset(s) for e, s in result.items()}

    def leq(self, a: str, b: str) -> bool:
        return a in self.below[b]

    @cached_property
    def key(self) -> tuple:
        polarity = (
            None
            if self.polarity is None
            else tuple(sorted((e, str(p)) for e, p in self.polarity.items()))
        )
        return (
            tuple(sorted(self.events)),
            tuple(sorted(self.causes)),
            tuple(sorted(tuple(sorted(g)) for g in self.conflicts)),
            polarity,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStructure):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __len__(self) -> int:
        return len(self.events)

    def __repr__(self) -> str:
        return (
            f"EventStructure(events={len(self.events)}, causes={len(self.causes)}, "
            f"conflicts={len(self.conflicts)}, polarity={self.has_polarity})"
        )


@dataclass(frozen=True, eq=False)
class EsMap:
    """A (possibly partial) function between the events of two structures."""

    source: EventStructure
    target: EventStructure
    mapping: Mapping[str, str]

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(self.mapping)

    @property
    def is_total(self) -> bool:
        return len(self.mapping) == len(self.source.events)

    def __call__(self, event: str) -> str | None:
        return self.mapping.get(event)

    def image(self, events: Iterable[str]) -> frozenset[str]:
        return frozenset(self.mapping[e] for e in events if e in self.mapping)

    @cached_property
    def key(self) -> tuple:
        return (self.source.key, self.target.key, tuple(sorted(self.mapping.items())))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EsMap):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"EsMap({len(self.mapping)}/{len(self.source.events)} events)"


@dataclass(frozen=True, eq=False)
class PreStrategy:
    """
    A pre-strategy: an esp labelled by a game.

    When ``left`` and ``right`` are set the game is presented as
    ``left⊥ ∥ right`` with events prefixed ``L.`` and ``R.``.
    """

    labelling: EsMap
    left: EventStructure | None = None
    right: EventStructure | None = None
    name: str = ""

    @property
    def inner(self) -> EventStructure:
        return self.labelling.source

    @property
    def game(self) -> EventStructure:
        return self.labelling.target

    @property
    def is_split(self) -> bool:
        return self.left is not None and self.right is not None

    def __call__(self, event: str) -> str:
        return self.labelling.mapping[event]

    @cached_property
    def key(self) -> tuple:
        return (
            self.labelling.key,
            None if self.left is None else self.left.key,
            None if self.right is None else self.right.key,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PreStrategy):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"PreStrategy({label}{len(self.inner.events)} events on {len(self.game.events)})"


CopycatStrategy = PreStrategy
Game = EventStructure


@dataclass(frozen=True, slots=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if not self.violations:
            return "valid"
        return "; ".join(self.violations)


@dataclass(frozen=True)
class ConfigurationDomain:
    """Configurations in canonical order plus covering edges (i, j, event)."""

    configurations: tuple[Configuration, ...]
    covers: tuple[tuple[int, int, str], ...]

    def __len__(self) -> int:
        return len(self.configurations)

    def __iter__(self) -> Iterator[Configuration]:
        return iter(self.configurations)

    def __contains__(self, x: object) -> bool:
        return x in self.index

    @cached_property
    def index(self) -> Mapping[Configuration, int]:
        return {x: i for i, x in enumerate(self.configurations)}


MapKind = Literal[
    "total-map", "partial-map", "polarity-preserving-map", "polarity-mismatch", "not-a-map"
]


@dataclass(frozen=True, slots=True)
class MapVerdict:
    kind: MapKind
    reason: str = ""

    @property
    def is_map(self) -> bool:
        return self.kind != "not-a-map"

    def __str__(self) -> str:
        return f"{self.kind}({self.reason})" if self.reason else self.kind


@dataclass(frozen=True, slots=True)
class LawVerdict:
    """Outcome of a law check; failures carry a counterexample, successes may carry a witness."""

    holds: bool
    counterexample: Any = None
    witness: Any = None

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True, slots=True)
class StrategyVerdict:
    receptive: LawVerdict
    courteous: LawVerdict
    fibration: Mapping[str, LawVerdict]
    copycat_invariant: LawVerdict

    @property
    def agrees(self) -> bool:
        """Whether the four characterisations of strategies give one answer."""
        answers = {
            self.receptive.holds and self.courteous.holds,
            self.fibration["scott"].holds,
            self.fibration["neg"].holds and self.fibration["pos"].holds,
            self.copycat_invariant.holds,
        }
        return len(answers) == 1


@dataclass(frozen=True, slots=True)
class WitnessPair:
    strategy_part: Configuration
    game_part: Configuration


@dataclass(frozen=True, slots=True)
class HidingVerdict:
    holds: bool
    witness: Mapping[Configuration, Configuration] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True, slots=True)
class ParallelResult:
    structure: EventStructure
    injections: tuple[EsMap, ...]
    retractions: tuple[EsMap, ...]


@dataclass(frozen=True, slots=True)
class Projection:
    structure: EventStructure
    hiding: EsMap


@dataclass(frozen=True, eq=False)
class InteractionResult:
    """
    The pullback of ``sigma`` and ``tau``.

    Events are prime secured bijections (``primes``); ``left`` and ``right``
    are the pullback legs and ``labelling`` the common map into the game.
    """

    structure: EventStructure
    sigma: EsMap
    tau: EsMap
    left: EsMap
    right: EsMap
    labelling: EsMap
    primes: Mapping[str, frozenset[Pair]]
    tops: Mapping[str, Pair]
    strategies: tuple[PreStrategy, PreStrategy] | None = None

    @cached_property
    def by_pairs(self) -> Mapping[frozenset[Pair], str]:
        return {pairs: event for event, pairs in self.primes.items()}

    def bijection(self, events: Iterable[str]) -> frozenset[Pair]:
        """Union of the secured bijections of the given events."""
        result: set[Pair] = set()
        for e in events:
            result |= self.primes[e]
        return frozenset(result)


@dataclass(frozen=True, eq=False)
class CompositionResult:
    structure: EventStructure
    strategy: PreStrategy
    hiding: EsMap
    interaction: InteractionResult


StructuralRole = Literal["rho", "lambda", "swap", "alpha"]


@dataclass(frozen=True, eq=False)
class StructuralIso:
    underlying: EsMap
    role: StructuralRole
    strategy: PreStrategy


@dataclass(frozen=True, slots=True)
class OperationResult:
    result: Literal["success", "partial_success", "failure"]
    messages: list[str] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)


class Operation(Protocol):
    def __call__(self) -> OperationResult: ...


# Exceptions


class EsgameError(Exception):
    pass


class InvalidStructureError(EsgameError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(f"Invalid event structure: {report}")


class UnknownEventError(EsgameError):
    def __init__(self, event: str):
        self.event = event
        super().__init__(f"Unknown event: {event}")


class MapError(EsgameError):
    pass


class PreconditionError(EsgameError):
    pass


class GuardExceededError(EsgameError):
    pass


class DocumentError(EsgameError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        location = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{location}")
