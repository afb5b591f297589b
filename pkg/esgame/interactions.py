import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator
from dataclasses import replace
from functools import lru_cache
from itertools import product

from esgame.games import LEFT, RIGHT, strategy_game
from esgame.structures import (
    assemble,
    configurations,
    down_closure,
    is_configuration,
    is_consistent,
    parallel,
    project,
    strip_polarity,
    tag,
    untag,
)
from esgame.types import (
    CompositionResult,
    Configuration,
    EsMap,
    EventStructure,
    GuardExceededError,
    InteractionResult,
    LawVerdict,
    MapError,
    Pair,
    PreconditionError,
    PreStrategy,
    format_config,
)
from esgame.utils.core import Settings, get_settings
from esgame.utils.graphs import is_acyclic

logger = logging.getLogger(__name__)


def pair_key(pairs: Iterable[Pair]) -> str:
    """Canonical serialization of a bijection graph."""
    return ";".join(f"{a},{b}" for a, b in sorted(pairs))


def sync_pairs(sigma: EsMap, tau: EsMap) -> list[Pair]:
    """All (s, t) with σs = τt."""
    by_label: dict[str, list[str]] = {}
    for t, a in tau.mapping.items():
        by_label.setdefault(a, []).append(t)
    return sorted((s, t) for s, a in sigma.mapping.items() for t in by_label.get(a, ()))


def _precedence_edges(
    pairs: Iterable[Pair], S: EventStructure, T: EventStructure
) -> list[tuple[Pair, Pair]]:
    pair_list = list(pairs)
    edges = []
    for p in pair_list:
        for q in pair_list:
            if p == q:
                continue
            if (p[0] != q[0] and S.leq(p[0], q[0])) or (p[1] != q[1] and T.leq(p[1], q[1])):
                edges.append((p, q))
    return edges


def bijection_components(
    pairs: Iterable[Pair],
) -> tuple[defaultdict[str, set[str]], defaultdict[str, set[str]]]:
    """Group the left and right events of a bijection by their component tag."""
    lefts: defaultdict[str, set[str]] = defaultdict(set)
    rights: defaultdict[str, set[str]] = defaultdict(set)
    for a, b in pairs:
        side, rest = untag(a)
        lefts[side].add(rest)
        side, rest = untag(b)
        rights[side].add(rest)
    return lefts, rights


def _require_bijection(pairs: frozenset[Pair], S: EventStructure, T: EventStructure) -> None:
    lefts = {a for a, _ in pairs}
    rights = {b for _, b in pairs}
    if len(lefts) != len(pairs) or len(rights) != len(pairs):
        raise PreconditionError("Not the graph of a bijection")
    if not is_configuration(S, lefts) or not is_configuration(T, rights):
        raise PreconditionError("Bijection is not between configurations")


def is_secured(phi: Iterable[Pair], S: EventStructure, T: EventStructure) -> bool:
    """
    Whether a bijection between configurations of S and T is secured.

    The bijection is secured when the relation (a, b) ◁ (a′, b′), for a < a′
    or b < b′, has no cycle.

    Raises:
        PreconditionError: If phi is not a bijection between configurations.
    """
    pairs = frozenset(phi)
    _require_bijection(pairs, S, T)
    return is_acyclic(pairs, _precedence_edges(pairs, S, T))


def is_secured_by_covering(phi: Iterable[Pair], S: EventStructure, T: EventStructure) -> bool:
    """Whether phi is reachable from the empty bijection by atomic extensions."""
    pairs = frozenset(phi)
    _require_bijection(pairs, S, T)

    reached: set[Pair] = set()
    lefts: set[str] = set()
    rights: set[str] = set()
    progress = True
    while progress:
        progress = False
        for a, b in sorted(pairs - reached):
            if S.below[a] - {a} <= lefts and T.below[b] - {b} <= rights:
                reached.add((a, b))
                lefts.add(a)
                rights.add(b)
                progress = True
    return reached == pairs


def enumerate_secured_bijections(
    sigma: EsMap, tau: EsMap, settings: Settings | None = None
) -> list[frozenset[Pair]]:
    """Every secured bijection of σ and τ, found by atomic extension from ∅."""
    settings = settings or get_settings()
    S, T = sigma.source, tau.source
    candidates = sync_pairs(sigma, tau)
    if len(candidates) > settings.max_sync_pairs:
        raise GuardExceededError(
            f"{len(candidates)} synchronized pairs exceed the bound of "
            f"{settings.max_sync_pairs}"
        )

    empty: frozenset[Pair] = frozenset()
    seen = {empty}
    frontier = [empty]
    while frontier:
        next_frontier = []
        for phi in frontier:
            lefts = {a for a, _ in phi}
            rights = {b for _, b in phi}
            for a, b in candidates:
                if a in lefts or b in rights:
                    continue
                if not S.below[a] - {a} <= lefts or not T.below[b] - {b} <= rights:
                    continue
                if not is_consistent(S, lefts | {a}) or not is_consistent(T, rights | {b}):
                    continue
                extended = phi | {(a, b)}
                if extended not in seen:
                    seen.add(extended)
                    next_frontier.append(extended)
        frontier = next_frontier

    return sorted(seen, key=lambda phi: (len(phi), pair_key(phi)))


def _primes_with_top(
    top: Pair,
    S: EventStructure,
    T: EventStructure,
    left_partners: dict[str, list[str]],
    right_partners: dict[str, list[str]],
) -> Iterator[frozenset[Pair]]:
    """Secured bijections whose unique maximal pair is `top`."""

    def attempt(
        l2r: dict[str, str],
        r2l: dict[str, str],
        need_left: frozenset[str],
        need_right: frozenset[str],
    ) -> Iterator[frozenset[Pair]]:
        if not is_consistent(S, need_left) or not is_consistent(T, need_right):
            return
        yield from extend(l2r, r2l, need_left, need_right)

    def extend(
        l2r: dict[str, str],
        r2l: dict[str, str],
        need_left: frozenset[str],
        need_right: frozenset[str],
    ) -> Iterator[frozenset[Pair]]:
        pending_left = sorted(need_left - l2r.keys())
        if pending_left:
            u = pending_left[0]
            for v in left_partners.get(u, ()):
                if v not in r2l:
                    yield from attempt(
                        l2r | {u: v},
                        r2l | {v: u},
                        need_left | S.below[u],
                        need_right | T.below[v],
                    )
            return

        pending_right = sorted(need_right - r2l.keys())
        if pending_right:
            v = pending_right[0]
            for u in right_partners.get(v, ()):
                if u not in l2r:
                    yield from attempt(
                        l2r | {u: v},
                        r2l | {v: u},
                        need_left | S.below[u],
                        need_right | T.below[v],
                    )
            return

        pairs = frozenset(l2r.items())
        if is_acyclic(pairs, _precedence_edges(pairs, S, T)):
            yield pairs

    s, t = top
    yield from attempt({s: t}, {t: s}, S.below[s], T.below[t])


def _clash(p: frozenset[Pair], q: frozenset[Pair]) -> bool:
    forward = dict(p)
    backward = {b: a for a, b in p}
    return any(
        (a in forward and forward[a] != b) or (b in backward and backward[b] != a)
        for a, b in q
    )


def pullback(sigma: EsMap, tau: EsMap, settings: Settings | None = None) -> InteractionResult:
    """
    The pullback S ∧ T of two total maps into a common structure.

    Events are the prime secured bijections, named ``p0``, ``p1``, ... in the
    order of their serialized pair lists. Polarities are ignored.

    Raises:
        PreconditionError: If the maps are partial or do not share a target.
        GuardExceededError: If there are too many synchronized pairs.
    """
    settings = settings or get_settings()
    if strip_polarity(sigma.target) != strip_polarity(tau.target):
        raise PreconditionError("Endpoint mismatch: maps do not share a target")
    if not sigma.is_total or not tau.is_total:
        raise PreconditionError("Pullbacks are taken of total maps")
    return _pullback(sigma, tau, settings.max_sync_pairs)


@lru_cache(maxsize=256)
def _pullback(sigma: EsMap, tau: EsMap, max_sync_pairs: int) -> InteractionResult:
    S, T = sigma.source, tau.source
    candidates = sync_pairs(sigma, tau)
    if len(candidates) > max_sync_pairs:
        raise GuardExceededError(
            f"{len(candidates)} synchronized pairs exceed the bound of {max_sync_pairs}"
        )

    left_partners: dict[str, list[str]] = {}
    right_partners: dict[str, list[str]] = {}
    for s, t in candidates:
        left_partners.setdefault(s, []).append(t)
        right_partners.setdefault(t, []).append(s)

    found: dict[frozenset[Pair], Pair] = {}
    for top in candidates:
        for prime in _primes_with_top(top, S, T, left_partners, right_partners):
            found[prime] = top

    ordered = sorted(found, key=pair_key)
    primes = {f"p{i}": prime for i, prime in enumerate(ordered)}
    tops = {name: found[prime] for name, prime in primes.items()}
    names = sorted(primes)

    causes = [(p, q) for p in names for q in names if primes[p] < primes[q]]

    raw_conflicts: list[frozenset[str]] = []
    for i, p in enumerate(names):
        for q in names[i + 1 :]:
            if _clash(primes[p], primes[q]):
                raw_conflicts.append(frozenset({p, q}))

    by_top_left: dict[str, list[str]] = {}
    by_top_right: dict[str, list[str]] = {}
    for name in names:
        s, t = tops[name]
        by_top_left.setdefault(s, []).append(name)
        by_top_right.setdefault(t, []).append(name)
    for structure, index in ((S, by_top_left), (T, by_top_right)):
        for g in structure.conflicts:
            choices = [index.get(e, []) for e in sorted(g)]
            raw_conflicts.extend(frozenset(combo) for combo in product(*choices))

    result = assemble(frozenset(names), causes, raw_conflicts, None)
    logger.info(
        f"Pullback has {len(names)} events from {len(candidates)} synchronized pairs"
    )

    return InteractionResult(
        structure=result,
        sigma=sigma,
        tau=tau,
        left=EsMap(result, S, {p: tops[p][0] for p in names}),
        right=EsMap(result, T, {p: tops[p][1] for p in names}),
        labelling=EsMap(result, sigma.target, {p: sigma.mapping[tops[p][0]] for p in names}),
        primes=primes,
        tops=tops,
    )


def _precedence_closure(
    top: Pair, pairs: Iterable[Pair], S: EventStructure, T: EventStructure
) -> frozenset[Pair]:
    pair_list = list(pairs)
    closure = {top}
    frontier = [top]
    while frontier:
        a, b = frontier.pop()
        for p in pair_list:
            if p in closure:
                continue
            if (p[0] != a and S.leq(p[0], a)) or (p[1] != b and T.leq(p[1], b)):
                closure.add(p)
                frontier.append(p)
    return frozenset(closure)


def mediating(alpha: EsMap, beta: EsMap, pb: InteractionResult) -> EsMap:
    """
    The unique map ⟨α, β⟩ : X → S ∧ T with Π₁⟨α, β⟩ = α and Π₂⟨α, β⟩ = β.

    The legs may be partial as long as they share a domain. Each x goes to
    the prime below (αx, βx) in the secured bijection read off [x].

    Raises:
        PreconditionError: If the cone does not commute.
        MapError: If some x has no matching prime.
    """
    S, T = pb.sigma.source, pb.tau.source
    if alpha.source != beta.source:
        raise PreconditionError("Cone legs start from different structures")
    if strip_polarity(alpha.target) != strip_polarity(S) or strip_polarity(
        beta.target
    ) != strip_polarity(T):
        raise PreconditionError("Cone legs do not end at the pullback's feet")
    if alpha.domain != beta.domain:
        raise PreconditionError("Cone legs are defined on different events")

    for x in sorted(alpha.domain):
        if pb.sigma.mapping[alpha.mapping[x]] != pb.tau.mapping[beta.mapping[x]]:
            raise PreconditionError(f"Cone does not commute at {x}")

    X = alpha.source
    mapping: dict[str, str] = {}
    for x in sorted(alpha.domain):
        history = X.below[x] & alpha.domain
        pairs = {(alpha.mapping[y], beta.mapping[y]) for y in history}
        prime = _precedence_closure((alpha.mapping[x], beta.mapping[x]), pairs, S, T)
        event = pb.by_pairs.get(prime)
        if event is None:
            raise MapError(f"No prime secured bijection matches {x}")
        mapping[x] = event
    return EsMap(X, pb.structure, mapping)


# Interaction and composition of strategies


def split_games(sigma: PreStrategy) -> tuple[EventStructure, EventStructure]:
    if sigma.left is None or sigma.right is None:
        raise PreconditionError("Expected a pre-strategy on a game A⊥ ∥ B")
    return sigma.left, sigma.right


def _retag(label: str, table: dict[str, str]) -> str:
    side, rest = untag(label)
    return tag(table[side], rest)


def interaction_legs(sigma: PreStrategy, tau: PreStrategy) -> tuple[EsMap, EsMap]:
    """
    The maps σ ∥ C and A ∥ τ into the ternary game A ∥ B ∥ C.

    The ternary game tags its components ``0.``, ``1.`` and ``2.``.

    Raises:
        PreconditionError: If the middle games differ.
    """
    A, B = split_games(sigma)
    B2, C = split_games(tau)
    if strip_polarity(B) != strip_polarity(B2):
        raise PreconditionError("Game mismatch: the middle games differ")

    ternary = parallel(strip_polarity(A), strip_polarity(B), strip_polarity(C)).structure
    left_source = parallel(strip_polarity(sigma.inner), strip_polarity(C)).structure
    right_source = parallel(strip_polarity(A), strip_polarity(tau.inner)).structure

    left_map = {tag("0", s): _retag(a, {LEFT: "0", RIGHT: "1"}) for s, a in sigma.labelling.mapping.items()}
    left_map.update({tag("1", c): tag("2", c) for c in C.events})
    right_map = {tag("0", a): tag("0", a) for a in A.events}
    right_map.update(
        {tag("1", t): _retag(b, {LEFT: "1", RIGHT: "2"}) for t, b in tau.labelling.mapping.items()}
    )

    return EsMap(left_source, ternary, left_map), EsMap(right_source, ternary, right_map)


def interaction(
    sigma: PreStrategy, tau: PreStrategy, settings: Settings | None = None
) -> InteractionResult:
    """τ ⊛ σ, the pullback of σ ∥ C and A ∥ τ, labelled in A ∥ B ∥ C."""
    result = pullback(*interaction_legs(sigma, tau), settings)
    return replace(result, strategies=(sigma, tau))


def compose(
    sigma: PreStrategy, tau: PreStrategy, settings: Settings | None = None
) -> CompositionResult:
    """
    τ ⊙ σ, the interaction with the events over B hidden.

    Visible events get the polarity of their label in A⊥ ∥ C.
    """
    return _compose(sigma, tau, settings or get_settings())


@lru_cache(maxsize=256)
def _compose(sigma: PreStrategy, tau: PreStrategy, settings: Settings) -> CompositionResult:
    result = interaction(sigma, tau, settings)
    A, _ = split_games(sigma)
    _, C = split_games(tau)

    visible = frozenset(
        p for p, label in result.labelling.mapping.items() if untag(label)[0] != "1"
    )
    projection = project(result.structure, visible)

    labels: dict[str, str] = {}
    polarity = {}
    for p in visible:
        side, rest = untag(result.labelling.mapping[p])
        if side == "0":
            labels[p] = tag(LEFT, rest)
            polarity[p] = A.pol(rest).flip()
        else:
            labels[p] = tag(RIGHT, rest)
            polarity[p] = C.pol(rest)

    structure = replace(projection.structure, polarity=polarity)
    name = f"{tau.name}⊙{sigma.name}" if sigma.name and tau.name else ""
    strategy = PreStrategy(
        EsMap(structure, strategy_game(A, C), labels), left=A, right=C, name=name
    )

    logger.info(
        f"Composition kept {len(visible)} of {len(result.structure.events)} events"
    )
    return CompositionResult(
        structure=structure,
        strategy=strategy,
        hiding=EsMap(result.structure, structure, {p: p for p in visible}),
        interaction=result,
    )


def minimal_witness(c: CompositionResult, z: Configuration) -> Configuration:
    """[z] in the interaction; every maximal event of it is visible."""
    if not is_configuration(c.structure, z):
        raise PreconditionError(f"Not a configuration: {format_config(z)}")
    return down_closure(c.interaction.structure, z)


def interaction_strategy(result: InteractionResult) -> PreStrategy:
    """The interaction τ ⊛ σ as a pre-strategy on (A ∥ B)⊥ ∥ C."""
    if result.strategies is None:
        raise PreconditionError("Interaction does not come from two strategies")
    sigma, tau = result.strategies
    A, B = split_games(sigma)
    _, C = split_games(tau)

    outer = parallel(A, B).structure
    game = strategy_game(outer, C)
    sides = {"0": f"{LEFT}.0", "1": f"{LEFT}.1", "2": RIGHT}
    labels = {p: _retag(label, sides) for p, label in result.labelling.mapping.items()}
    inner = replace(result.structure, polarity={p: game.pol(a) for p, a in labels.items()})
    return PreStrategy(EsMap(inner, game, labels), left=outer, right=C)


def open_hiding(c: CompositionResult) -> tuple[PreStrategy, EsMap]:
    """The hiding map of a composition, from the interaction seen as a pre-strategy."""
    source = interaction_strategy(c.interaction)
    return source, EsMap(source.inner, c.structure, dict(c.hiding.mapping))


def _erase_middle(label: str) -> str | None:
    side, rest = untag(label)
    if side != LEFT:
        return label
    component, event = untag(rest)
    return tag(LEFT, event) if component == "0" else None


def zipped_hiding(
    hid: EsMap,
    rho: PreStrategy,
    *,
    source: PreStrategy,
    target: PreStrategy,
    settings: Settings | None = None,
) -> EsMap:
    """
    Extend a hiding map S ⇀ S′ through interaction with ρ: U ⊛ S ⇀ U ⊛ S′.

    `source` is a pre-strategy on (A ∥ B)⊥ ∥ C and `target` one on A⊥ ∥ C;
    hid must agree with erasing B from the game.

    Raises:
        PreconditionError: If the square with the erasure does not commute.
    """
    if hid.source != source.inner or hid.target != target.inner:
        raise PreconditionError("Hiding map does not go between the given strategies")
    for s in sorted(source.inner.events):
        erased = _erase_middle(source(s))
        image = hid(s)
        if (erased is None) != (image is None) or (
            image is not None and target(image) != erased
        ):
            raise PreconditionError(f"Hiding map does not commute with the game at {s}")

    outer = interaction(source, rho, settings)
    inner = interaction(target, rho, settings)

    alpha: dict[str, str] = {}
    beta: dict[str, str] = {}
    for p in outer.structure.events:
        side, rest = untag(outer.left.mapping[p])
        if side == "1":
            alpha[p] = tag("1", rest)
        elif rest in hid.mapping:
            alpha[p] = tag("0", hid.mapping[rest])

        side, rest = untag(outer.right.mapping[p])
        if side == "1":
            beta[p] = tag("1", rest)
        else:
            component, event = untag(rest)
            if component == "0":
                beta[p] = tag("0", event)

    return mediating(
        EsMap(outer.structure, inner.sigma.source, alpha),
        EsMap(outer.structure, inner.tau.source, beta),
        inner,
    )


def interaction_map(
    f: EsMap, g: EsMap, source: InteractionResult, target: InteractionResult
) -> EsMap:
    """
    g ⊛ f, induced by maps f : S → S′ and g : T → T′ of pre-strategies.

    Raises:
        PreconditionError: If f and g do not commute with the labellings.
    """
    alpha: dict[str, str] = {}
    beta: dict[str, str] = {}
    for p in source.structure.events:
        side, rest = untag(source.left.mapping[p])
        if side == "1":
            alpha[p] = tag("1", rest)
        elif rest in f.mapping:
            alpha[p] = tag("0", f.mapping[rest])

        side, rest = untag(source.right.mapping[p])
        if side == "0":
            beta[p] = tag("0", rest)
        elif rest in g.mapping:
            beta[p] = tag("1", g.mapping[rest])

    return mediating(
        EsMap(source.structure, target.sigma.source, alpha),
        EsMap(source.structure, target.tau.source, beta),
        target,
    )


def composition_map(
    f: EsMap, g: EsMap, source: CompositionResult, target: CompositionResult
) -> EsMap:
    """g ⊙ f, the restriction of g ⊛ f to visible events."""
    full = interaction_map(f, g, source.interaction, target.interaction)
    mapping: dict[str, str] = {}
    for e in sorted(source.structure.events):
        image = full.mapping.get(e)
        if image is None or image not in target.structure.events:
            raise MapError(f"Event {e} is not sent to a visible event")
        mapping[e] = image
    return EsMap(source.structure, target.structure, mapping)


def synchronized_pairs_secured(
    sigma: EsMap, tau: EsMap, settings: Settings | None = None
) -> LawVerdict:
    """
    Check that every pair of configurations with equal images is secured.

    Counterexamples are the offending (x, y).
    """
    S, T = sigma.source, tau.source
    by_image: dict[frozenset[str], list[Configuration]] = {}
    for y in configurations(T, settings):
        by_image.setdefault(tau.image(y), []).append(y)

    for x in configurations(S, settings):
        for y in by_image.get(sigma.image(x), []):
            pairs = {(s, t) for s in x for t in y if sigma.mapping[s] == tau.mapping[t]}
            if not is_secured(pairs, S, T):
                return LawVerdict(False, counterexample=(x, y))
    return LawVerdict(True)
