import logging
from collections import Counter
from collections.abc import Callable, Iterable, Mapping
from dataclasses import replace
from functools import lru_cache
from itertools import product

import networkx as nx
from networkx.algorithms import isomorphism

from esgame.types import (
    Configuration,
    ConfigurationDomain,
    EsMap,
    EventStructure,
    GuardExceededError,
    HidingVerdict,
    InvalidStructureError,
    LawVerdict,
    MapError,
    MapVerdict,
    ParallelResult,
    Polarity,
    PreconditionError,
    PreStrategy,
    Projection,
    UnknownEventError,
    ValidationReport,
    config_key,
    format_config,
)
from esgame.utils.core import Settings, get_settings
from esgame.utils.graphs import (
    ancestors,
    causal_depth,
    find_cycles,
    transitive_reduction,
)

logger = logging.getLogger(__name__)

EMPTY_GAME = EventStructure(frozenset(), polarity={})


def validate_es(E: EventStructure) -> ValidationReport:
    """
    List every axiom violated by a raw event structure.

    An empty report means E is valid. Duplicate ids can only be seen before
    the events are collected into a set, so `make_structure` reports those.
    """
    violations: list[str] = []

    for e in sorted(E.events):
        if not e or any(c.isspace() for c in e):
            violations.append(f"invalid event id {e!r}")

    known_causes = []
    for a, b in sorted(E.causes):
        unknown = [x for x in (a, b) if x not in E.events]
        if unknown:
            violations.append(
                f"causal edge ({a}, {b}) references unknown event {unknown[0]}"
            )
        else:
            known_causes.append((a, b))

    generators = sorted(E.conflicts, key=config_key)
    for g in generators:
        unknown = sorted(g - E.events)
        if unknown:
            violations.append(
                f"generator {format_config(g)} references unknown event {unknown[0]}"
            )
        if len(g) < 2:
            violations.append(f"generator {format_config(g)} has fewer than 2 events")

    if E.polarity is not None and set(E.polarity) != set(E.events):
        violations.append("polarity is not defined on exactly the events")

    cycles = find_cycles(E.events, known_causes)
    for cycle in cycles:
        violations.append(f"causal cycle {format_config(cycle)}")

    if not cycles:
        strict = ancestors(E.events, known_causes)
        for g in generators:
            if len(g) < 2 or not g <= E.events:
                continue
            for e in sorted(E.events):
                if g <= strict[e] | {e}:
                    violations.append(
                        f"generator {format_config(g)} is contained in [{e}]"
                    )
                    break

    return ValidationReport(tuple(violations))


def make_structure(
    events: Iterable[str],
    causes: Iterable[tuple[str, str]] = (),
    conflicts: Iterable[Iterable[str]] = (),
    polarity: Mapping[str, Polarity | str] | None = None,
) -> EventStructure:
    """
    Build a validated event structure in canonical form.

    Causality is transitively reduced and conflict generators are replaced
    by the maximal events of the minimal inconsistent down-closed sets.

    Raises:
        InvalidStructureError: If any axiom is violated.
    """
    event_list = list(events)
    duplicates = sorted(e for e, n in Counter(event_list).items() if n > 1)

    raw = EventStructure(
        events=frozenset(event_list),
        causes=frozenset((a, b) for a, b in causes),
        conflicts=frozenset(frozenset(g) for g in conflicts),
        polarity=None
        if polarity is None
        else {e: Polarity(p) for e, p in polarity.items()},
    )

    violations = [f"duplicate event id {e}" for e in duplicates]
    violations.extend(validate_es(raw).violations)
    if violations:
        raise InvalidStructureError(ValidationReport(tuple(violations)))

    return assemble(raw.events, raw.causes, raw.conflicts, raw.polarity)


def assemble(
    events: frozenset[str],
    causes: Iterable[tuple[str, str]],
    conflicts: Iterable[frozenset[str]],
    polarity: Mapping[str, Polarity] | None,
) -> EventStructure:
    """Normalize trusted data: reduce causality and canonicalize generators."""
    reduced = EventStructure(
        events=events,
        causes=transitive_reduction(events, causes),
        polarity=polarity,
    )
    return replace(reduced, conflicts=canonical_conflicts(reduced, conflicts))


def canonical_conflicts(
    E: EventStructure, raw: Iterable[Iterable[str]]
) -> frozenset[frozenset[str]]:
    """Minimal inconsistent down-closed sets, each stored as its maximal events."""
    closures = {_down(E, g) for g in raw}
    minimal = [d for d in closures if not any(o < d for o in closures)]
    return frozenset(maximal_events(E, d) for d in minimal)


def maximal_events(E: EventStructure, X: Iterable[str]) -> frozenset[str]:
    members = frozenset(X)
    return frozenset(
        e for e in members if not any(f != e and e in E.below[f] for f in members)
    )


def _down(E: EventStructure, X: Iterable[str]) -> frozenset[str]:
    result: set[str] = set()
    for e in X:
        result |= E.below[e]
    return frozenset(result)


def _check_known(E: EventStructure, X: Iterable[str]) -> frozenset[str]:
    members = frozenset(X)
    unknown = sorted(members - E.events)
    if unknown:
        raise UnknownEventError(unknown[0])
    return members


def down_closure(E: EventStructure, X: Iterable[str]) -> frozenset[str]:
    """Return [X], the smallest down-closed superset of X."""
    return _down(E, _check_known(E, X))


def _consistent_downset(E: EventStructure, X: frozenset[str]) -> bool:
    return not any(g <= X for g in E.conflicts)


def is_consistent(E: EventStructure, X: Iterable[str]) -> bool:
    return _consistent_downset(E, down_closure(E, X))


def is_configuration(E: EventStructure, X: Iterable[str]) -> bool:
    members = frozenset(X)
    if not members <= E.events:
        return False
    return _down(E, members) == members and _consistent_downset(E, members)


def enumerate_configurations(
    E: EventStructure, settings: Settings | None = None
) -> ConfigurationDomain:
    """
    Enumerate 𝒞(E) with its covering relation.

    Configurations come sorted by size then by their sorted members.

    Raises:
        GuardExceededError: If E has more events than the enumeration guard.
    """
    settings = settings or get_settings()
    if len(E.events) > settings.max_events:
        raise GuardExceededError(
            f"Structure has {len(E.events)} events, above the enumeration guard "
            f"of {settings.max_events}"
        )
    return _enumerate(E)


@lru_cache(maxsize=1024)
def _enumerate(E: EventStructure) -> ConfigurationDomain:
    empty: Configuration = frozenset()
    seen: set[Configuration] = {empty}
    frontier = [empty]
    edges: list[tuple[Configuration, Configuration, str]] = []

    while frontier:
        next_frontier = []
        for x in frontier:
            for e in sorted(E.events - x):
                if not E.below[e] - {e} <= x:
                    continue
                y = x | {e}
                if not _consistent_downset(E, y):
                    continue
                edges.append((x, y, e))
                if y not in seen:
                    seen.add(y)
                    next_frontier.append(y)
        frontier = next_frontier

    configurations = tuple(sorted(seen, key=lambda x: (len(x), config_key(x))))
    index = {x: i for i, x in enumerate(configurations)}
    covers = tuple(sorted((index[x], index[y], e) for x, y, e in edges))

    logger.debug(f"Found {len(configurations)} configurations")
    return ConfigurationDomain(configurations=configurations, covers=covers)


def configurations(
    E: EventStructure, settings: Settings | None = None
) -> tuple[Configuration, ...]:
    return enumerate_configurations(E, settings).configurations


# Constructions


def tag(prefix: str, event: str) -> str:
    return f"{prefix}.{event}"


def untag(event: str) -> tuple[str, str]:
    """Split a constructed id into its component tag and the inner id."""
    prefix, sep, rest = event.partition(".")
    if not sep:
        raise ValueError(f"Event id has no component tag: {event}")
    return prefix, rest


def parallel(
    *structures: EventStructure, tags: Iterable[str] | None = None
) -> ParallelResult:
    """
    Tagged disjoint union of structures of the same kind.

    Components are tagged ``0.``, ``1.``, ... unless `tags` is given. Returns
    the injections into the union and the partial retractions back out.
    """
    if not structures:
        raise ValueError("parallel needs at least one structure")
    tag_list = [str(i) for i in range(len(structures))] if tags is None else list(tags)
    if len(tag_list) != len(structures) or len(set(tag_list)) != len(tag_list):
        raise ValueError("parallel needs one distinct tag per structure")

    # Empty structures combine with either kind.
    kinds = {s.has_polarity for s in structures if s.events}
    if len(kinds) > 1:
        raise PreconditionError(
            "Cannot compose structures with and without polarity in parallel"
        )
    with_polarity = kinds == {True} or (
        not kinds and any(s.has_polarity for s in structures)
    )

    events: set[str] = set()
    causes: set[tuple[str, str]] = set()
    conflicts: set[frozenset[str]] = set()
    polarity: dict[str, Polarity] = {}
    for prefix, s in zip(tag_list, structures, strict=True):
        events.update(tag(prefix, e) for e in s.events)
        causes.update((tag(prefix, a), tag(prefix, b)) for a, b in s.causes)
        conflicts.update(frozenset(tag(prefix, e) for e in g) for g in s.conflicts)
        if s.polarity is not None:
            polarity.update({tag(prefix, e): p for e, p in s.polarity.items()})

    structure = EventStructure(
        events=frozenset(events),
        causes=frozenset(causes),
        conflicts=frozenset(conflicts),
        polarity=polarity if with_polarity else None,
    )
    injections = tuple(
        EsMap(s, structure, {e: tag(prefix, e) for e in s.events})
        for prefix, s in zip(tag_list, structures, strict=True)
    )
    retractions = tuple(
        EsMap(structure, s, {tag(prefix, e): e for e in s.events})
        for prefix, s in zip(tag_list, structures, strict=True)
    )
    return ParallelResult(structure, injections, retractions)


def strip_polarity(E: EventStructure) -> EventStructure:
    if E.polarity is None:
        return E
    return replace(E, polarity=None)


def relabel(E: EventStructure, rename: Mapping[str, str]) -> EventStructure:
    """Rename events through an injective mapping defined on all of E."""
    if set(rename) != set(E.events) or len(set(rename.values())) != len(rename):
        raise MapError("Renaming must be a bijection on the events")
    return EventStructure(
        events=frozenset(rename[e] for e in E.events),
        causes=frozenset((rename[a], rename[b]) for a, b in E.causes),
        conflicts=frozenset(frozenset(rename[e] for e in g) for g in E.conflicts),
        polarity=None
        if E.polarity is None
        else {rename[e]: p for e, p in E.polarity.items()},
    )


def project(E: EventStructure, V: Iterable[str]) -> Projection:
    """
    Restrict E to the events V, returning E↓V and the hiding map E ⇀ E↓V.

    Order is restricted and a subset of V is consistent iff it is consistent
    in E.
    """
    visible = _check_known(E, V)

    causes = {
        (u, v) for v in visible for u in E.below[v] & visible if u != v
    }

    candidates: list[frozenset[str]] = []
    for g in E.conflicts:
        options: list[list[str]] | None = []
        for x in sorted(g):
            ups = [v for v in visible if x in E.below[v]]
            minimal = sorted(
                v for v in ups if not any(u != v and u in E.below[v] for u in ups)
            )
            if not minimal:
                options = None
                break
            options.append(minimal)
        if options is None:
            continue
        for choice in product(*options):
            candidates.append(
                frozenset().union(*(E.below[v] & visible for v in choice))
            )

    polarity = (
        None if E.polarity is None else {e: E.polarity[e] for e in visible}
    )
    structure = assemble(visible, causes, candidates, polarity)
    hiding = EsMap(E, structure, {v: v for v in visible})
    return Projection(structure, hiding)


# Maps


def identity_map(E: EventStructure) -> EsMap:
    return EsMap(E, E, {e: e for e in E.events})


def check_map(f: EsMap, settings: Settings | None = None) -> MapVerdict:
    """
    Classify a function between structures.

    Every configuration of the source is checked for local injectivity and
    for its (defined) image being a configuration of the target.
    """
    for s, t in sorted(f.mapping.items()):
        if s not in f.source.events:
            raise UnknownEventError(s)
        if t not in f.target.events:
            raise UnknownEventError(t)

    domain = f.domain
    for x in enumerate_configurations(f.source, settings):
        defined = x & domain
        image = f.image(defined)
        if len(image) != len(defined):
            return MapVerdict("not-a-map", f"not locally injective on {format_config(x)}")
        if not is_configuration(f.target, image):
            return MapVerdict(
                "not-a-map",
                f"image of {format_config(x)} is not a configuration",
            )

    if not f.is_total:
        return MapVerdict("partial-map")

    if f.source.has_polarity and f.target.has_polarity:
        for e in sorted(domain):
            if f.source.pol(e) != f.target.pol(f.mapping[e]):
                return MapVerdict("polarity-mismatch", f"polarity not preserved at {e}")
        return MapVerdict("polarity-preserving-map")

    return MapVerdict("total-map")


def compose_maps(f: EsMap, g: EsMap) -> EsMap:
    """Return g ∘ f; defined where f is defined and g is defined on its image."""
    if f.target != g.source:
        raise PreconditionError("Endpoint mismatch: target of f is not the source of g")
    mapping = {e: g.mapping[t] for e, t in f.mapping.items() if t in g.mapping}
    return EsMap(f.source, g.target, mapping)


def inverse_map(f: EsMap) -> EsMap:
    if not f.is_total or set(f.mapping.values()) != set(f.target.events):
        raise MapError("Only bijections can be inverted")
    return EsMap(f.target, f.source, {t: s for s, t in f.mapping.items()})


def is_isomorphism(f: EsMap, polarity: bool = True) -> bool:
    """Whether f is a bijection preserving and reflecting order and consistency."""
    values = set(f.mapping.values())
    if not f.is_total or len(values) != len(f.mapping) or values != set(f.target.events):
        return False
    renamed = relabel(f.source, f.mapping)
    if renamed.causes != f.target.causes or renamed.conflicts != f.target.conflicts:
        return False
    if polarity and f.source.has_polarity and f.target.has_polarity:
        return renamed.polarity == f.target.polarity
    return True


def _matching_graph(
    E: EventStructure, labels: Mapping[str, str] | None, use_polarity: bool
) -> nx.DiGraph:
    depth = causal_depth(E.events, E.causes)
    degree = Counter(e for edge in E.causes for e in edge)

    def pol(e: str) -> str | None:
        return str(E.pol(e)) if use_polarity else None

    def label(e: str) -> str | None:
        return labels[e] if labels is not None else None

    ordered = sorted(
        E.events,
        key=lambda e: (pol(e) or "", label(e) or "", depth[e], degree[e], e),
    )

    graph = nx.DiGraph()
    for e in ordered:
        graph.add_node(("e", e), kind="event", pol=pol(e), label=label(e))
    for a, b in sorted(E.causes):
        graph.add_edge(("e", a), ("e", b))
    for i, g in enumerate(sorted(E.conflicts, key=config_key)):
        graph.add_node(("g", str(i)), kind="conflict", pol=None, label=str(len(g)))
        for e in sorted(g):
            graph.add_edge(("g", str(i)), ("e", e))
    return graph


def _node_match(a: dict, b: dict) -> bool:
    return (a["kind"], a["pol"], a["label"]) == (b["kind"], b["pol"], b["label"])


def find_isomorphisms(
    S: EventStructure,
    T: EventStructure,
    over: tuple[PreStrategy, PreStrategy] | None = None,
    limit: int | None = None,
) -> list[dict[str, str]]:
    """
    Return the isomorphisms S → T, optionally commuting with two labellings.

    The search is exhaustive unless `limit` is given; an empty list means S
    and T are not isomorphic.
    """
    labels_s: Mapping[str, str] | None = None
    labels_t: Mapping[str, str] | None = None
    if over is not None:
        sigma, tau = over
        if sigma.inner != S or tau.inner != T:
            raise PreconditionError("Labellings do not start from the given structures")
        if sigma.game != tau.game:
            raise PreconditionError("Labellings do not share a common game")
        labels_s, labels_t = sigma.labelling.mapping, tau.labelling.mapping

    if (
        len(S.events) != len(T.events)
        or len(S.causes) != len(T.causes)
        or len(S.conflicts) != len(T.conflicts)
    ):
        return []

    use_polarity = S.has_polarity and T.has_polarity
    matcher = isomorphism.DiGraphMatcher(
        _matching_graph(S, labels_s, use_polarity),
        _matching_graph(T, labels_t, use_polarity),
        node_match=_node_match,
    )

    results: list[dict[str, str]] = []
    for match in matcher.isomorphisms_iter():
        results.append({a[1]: b[1] for a, b in match.items() if a[0] == "e"})
        if limit is not None and len(results) >= limit:
            break

    logger.debug(f"Found {len(results)} isomorphisms")
    return results


def strategy_isomorphism(sigma: PreStrategy, tau: PreStrategy) -> EsMap | None:
    """Some isomorphism of pre-strategies σ ≅ τ over their common game, if any."""
    if sigma.game != tau.game:
        return None
    found = find_isomorphisms(sigma.inner, tau.inner, over=(sigma, tau), limit=1)
    if not found:
        return None
    return EsMap(sigma.inner, tau.inner, found[0])


def check_hiding_map(f: EsMap, settings: Settings | None = None) -> HidingVerdict:
    """
    Decide whether a partial map is a hiding map.

    It is one when it is an isomorphism from the projection of its source to
    its domain. The witness sends each target configuration y to the
    down-closure of its preimage, and satisfies wit∘f(x) ⊆ x and f∘wit(y) = y.
    """
    projected = project(f.source, f.domain).structure
    if not is_isomorphism(EsMap(projected, f.target, f.mapping), polarity=False):
        return HidingVerdict(
            False, reason="target is not isomorphic to the projection on the domain"
        )

    inverse = {t: s for s, t in f.mapping.items()}
    witness: dict[Configuration, Configuration] = {}
    for y in enumerate_configurations(f.target, settings):
        w = _down(f.source, (inverse[t] for t in y))
        if f.image(w) != y:
            return HidingVerdict(False, reason=f"f∘wit differs at {format_config(y)}")
        witness[y] = w

    for x in enumerate_configurations(f.source, settings):
        w = witness.get(f.image(x))
        if w is None or not w <= x:
            return HidingVerdict(False, reason=f"wit∘f is not below {format_config(x)}")

    return HidingVerdict(True, witness=witness)


def factor_partial(f: EsMap) -> tuple[EsMap, EsMap]:
    """Split a partial map as (total restriction) ∘ (hiding onto its domain)."""
    projection = project(f.source, f.domain)
    total = EsMap(projection.structure, f.target, dict(f.mapping))
    return projection.hiding, total


def iso_from_configurations(
    source: EventStructure,
    target: EventStructure,
    fn: Callable[[Configuration], Configuration],
) -> EsMap:
    """
    Turn an order-isomorphism of configuration domains into an event isomorphism.

    Each event e is sent to the single event by which fn([e]) extends fn([e)).

    Raises:
        MapError: If fn does not induce an isomorphism.
    """
    mapping: dict[str, str] = {}
    for e in sorted(source.events):
        full = fn(source.below[e])
        prefix = fn(source.below[e] - {e})
        added = full - prefix
        if not prefix <= full or len(added) != 1:
            raise MapError(f"Configuration map does not send the covering of {e} to a covering")
        mapping[e] = next(iter(added))

    result = EsMap(source, target, mapping)
    if not is_isomorphism(result):
        raise MapError("Configuration map does not induce an isomorphism")
    return result


def reflects_causality(f: EsMap) -> LawVerdict:
    """Check that f(a) ≤ f(b) implies a ≤ b for consistent pairs in the domain."""
    domain = sorted(f.domain)
    for a in domain:
        for b in domain:
            if a == b or not f.target.leq(f.mapping[a], f.mapping[b]):
                continue
            if is_consistent(f.source, {a, b}) and not f.source.leq(a, b):
                return LawVerdict(False, counterexample=(a, b))
    return LawVerdict(True)


def agree_on_configurations(
    f: EsMap, g: EsMap, settings: Settings | None = None
) -> bool:
    if f.source != g.source or f.target != g.target:
        return False
    return all(
        f.image(x) == g.image(x)
        for x in enumerate_configurations(f.source, settings)
    )
