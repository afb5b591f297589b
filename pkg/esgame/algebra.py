import logging
from collections.abc import Sequence
from functools import reduce

from esgame.games import copycat, dual, left, right, strategy_game
from esgame.interactions import (
    bijection_components,
    compose,
    composition_map,
    interaction,
    mediating,
    minimal_witness,
    open_hiding,
    split_games,
    zipped_hiding,
)
from esgame.strategies import left_unitor, require_strategy_map, right_unitor
from esgame.structures import (
    EMPTY_GAME,
    compose_maps,
    identity_map,
    inverse_map,
    is_isomorphism,
    parallel,
    strategy_isomorphism,
    tag,
    untag,
)
from esgame.types import (
    CompositionResult,
    Configuration,
    EsMap,
    EventStructure,
    GuardExceededError,
    LawVerdict,
    MapError,
    PreStrategy,
    StructuralIso,
    StructuralRole,
)
from esgame.utils.core import Settings, get_settings

logger = logging.getLogger(__name__)


def tensor(sigma1: PreStrategy, sigma2: PreStrategy) -> PreStrategy:
    """
    σ₁ ⊗ σ₂ on (A₁ ∥ A₂)⊥ ∥ (B₁ ∥ B₂).

    The carrier is S₁ ∥ S₂; labels are regrouped so that both left games
    come first.
    """
    A1, B1 = split_games(sigma1)
    A2, B2 = split_games(sigma2)
    A = parallel(A1, A2).structure
    B = parallel(B1, B2).structure
    inner = parallel(sigma1.inner, sigma2.inner).structure

    mapping: dict[str, str] = {}
    for index, sigma in (("0", sigma1), ("1", sigma2)):
        for s, label in sigma.labelling.mapping.items():
            side, rest = untag(label)
            mapping[tag(index, s)] = tag(side, tag(index, rest))

    name = f"{sigma1.name}⊗{sigma2.name}" if sigma1.name and sigma2.name else ""
    return PreStrategy(
        EsMap(inner, strategy_game(A, B), mapping), left=A, right=B, name=name
    )


def lift(f: EsMap) -> PreStrategy:
    """
    The lifting of a map of games f : A → B to a strategy on A⊥ ∥ B.

    Raises:
        PreconditionError: If f is not receptive and courteous.
    """
    require_strategy_map(f)
    A, B = f.source, f.target
    cc = copycat(A)
    mapping = {left(a): left(a) for a in A.events}
    mapping.update({right(a): right(f.mapping[a]) for a in A.events})
    return PreStrategy(
        EsMap(cc.inner, strategy_game(A, B), mapping), left=A, right=B, name="lift"
    )


def colift(f: EsMap) -> PreStrategy:
    """The co-lifting of f : B⊥ → A⊥ to a strategy on A⊥ ∥ B."""
    require_strategy_map(f)
    A, B = dual(f.target), dual(f.source)
    cc = copycat(B)
    mapping = {left(b): left(f.mapping[b]) for b in B.events}
    mapping.update({right(b): right(b) for b in B.events})
    return PreStrategy(
        EsMap(cc.inner, strategy_game(A, B), mapping), left=A, right=B, name="colift"
    )


ARITY: dict[StructuralRole, int] = {"rho": 1, "lambda": 1, "swap": 2, "alpha": 3}


def structural(role: StructuralRole, *games: EventStructure) -> StructuralIso:
    """
    One of the structural isomorphisms of games, with its lifting.

    * ``rho``: A ∥ 1 → A
    * ``lambda``: 1 ∥ A → A
    * ``swap``: A ∥ B → B ∥ A
    * ``alpha``: (A ∥ B) ∥ C → A ∥ (B ∥ C)
    """
    if role not in ARITY:
        raise ValueError(f"Unknown structural isomorphism: {role}")
    if len(games) != ARITY[role]:
        raise ValueError(f"{role} takes {ARITY[role]} games, got {len(games)}")

    match role:
        case "rho":
            (A,) = games
            source = parallel(A, EMPTY_GAME).structure
            target = A
            mapping = {tag("0", a): a for a in A.events}
        case "lambda":
            (A,) = games
            source = parallel(EMPTY_GAME, A).structure
            target = A
            mapping = {tag("1", a): a for a in A.events}
        case "swap":
            A, B = games
            source = parallel(A, B).structure
            target = parallel(B, A).structure
            mapping = {tag("0", a): tag("1", a) for a in A.events}
            mapping.update({tag("1", b): tag("0", b) for b in B.events})
        case _:
            A, B, C = games
            source = parallel(parallel(A, B).structure, C).structure
            target = parallel(A, parallel(B, C).structure).structure
            mapping = {tag("0", tag("0", a)): tag("0", a) for a in A.events}
            mapping.update({tag("0", tag("1", b)): tag("1", tag("0", b)) for b in B.events})
            mapping.update({tag("1", c): tag("1", tag("1", c)) for c in C.events})

    underlying = EsMap(source, target, mapping)
    return StructuralIso(underlying=underlying, role=role, strategy=lift(underlying))


def lift_inverse(iso: StructuralIso) -> PreStrategy:
    return lift(inverse_map(iso.underlying))


# Associativity and unit coherence


def _inner_right_triples(
    sigma: PreStrategy, tau: PreStrategy, rho: PreStrategy, settings: Settings | None
) -> tuple[CompositionResult, dict[str, tuple[Configuration, ...]]]:
    inner = compose(tau, rho, settings)
    outer = compose(sigma, inner.strategy, settings)
    triples = {}
    for e in outer.structure.events:
        witness = minimal_witness(outer, outer.structure.below[e])
        lefts, rights = bijection_components(outer.interaction.bijection(witness))
        inner_witness = minimal_witness(inner, frozenset(rights["1"]))
        inner_lefts, inner_rights = bijection_components(
            inner.interaction.bijection(inner_witness)
        )
        triples[e] = (
            frozenset(lefts["0"]),
            frozenset(inner_lefts["0"]),
            frozenset(inner_rights["1"]),
        )
    return outer, triples


def _inner_left_triples(
    sigma: PreStrategy, tau: PreStrategy, rho: PreStrategy, settings: Settings | None
) -> tuple[CompositionResult, dict[str, tuple[Configuration, ...]]]:
    inner = compose(sigma, tau, settings)
    outer = compose(inner.strategy, rho, settings)
    triples = {}
    for e in outer.structure.events:
        witness = minimal_witness(outer, outer.structure.below[e])
        lefts, rights = bijection_components(outer.interaction.bijection(witness))
        inner_witness = minimal_witness(inner, frozenset(lefts["0"]))
        inner_lefts, inner_rights = bijection_components(
            inner.interaction.bijection(inner_witness)
        )
        triples[e] = (
            frozenset(inner_lefts["0"]),
            frozenset(inner_rights["1"]),
            frozenset(rights["1"]),
        )
    return outer, triples


def associator_by_witnesses(
    sigma: PreStrategy,
    tau: PreStrategy,
    rho: PreStrategy,
    settings: Settings | None = None,
) -> EsMap:
    """
    The associator read off configurations: each event of (ρ ⊙ τ) ⊙ σ goes to
    the event of ρ ⊙ (τ ⊙ σ) whose history reaches the same configurations
    of S, T and U.

    Raises:
        MapError: If some event has no match.
    """
    source, source_triples = _inner_right_triples(sigma, tau, rho, settings)
    target, target_triples = _inner_left_triples(sigma, tau, rho, settings)
    by_triple = {triple: e for e, triple in target_triples.items()}

    mapping: dict[str, str] = {}
    for e, triple in sorted(source_triples.items()):
        if triple not in by_triple:
            raise MapError(f"No event of the other bracketing matches {e}")
        mapping[e] = by_triple[triple]
    return EsMap(source.structure, target.structure, mapping)


def _triple_component(label: str) -> str:
    """Which of A, B, C, D an event of ρ ⊛ (τ ⊛ σ) lies over."""
    side, rest = untag(label)
    if side == "0":
        return "A" if untag(rest)[0] == "0" else "B"
    return "C" if side == "1" else "D"


def associator(
    sigma: PreStrategy,
    tau: PreStrategy,
    rho: PreStrategy,
    settings: Settings | None = None,
) -> EsMap:
    """
    The isomorphism (ρ ⊙ τ) ⊙ σ → ρ ⊙ (τ ⊙ σ).

    Both composites are hidings of the triple interaction W = ρ ⊛ (τ ⊛ σ).
    W reaches ρ ⊙ (τ ⊙ σ) by zipping the hiding of τ ⊛ σ with ρ, and reaches
    (ρ ⊙ τ) ⊙ σ by mediating twice: first into ρ ⊛ τ, then into the
    interaction of σ with ρ ⊙ τ. The associator is the second hiding after
    the inverse of the first, on the events over A and D.

    Raises:
        MapError: If the induced function is not an isomorphism of strategies.
    """
    inner_left = compose(sigma, tau, settings)
    inner_right = compose(tau, rho, settings)
    source = compose(sigma, inner_right.strategy, settings)
    target = compose(inner_left.strategy, rho, settings)

    opened, hid = open_hiding(inner_left)
    W = interaction(opened, rho, settings)
    J = inner_left.interaction
    components = {w: _triple_component(W.labelling.mapping[w]) for w in W.structure.events}

    # W ⇀ ρ ⊛ τ, defined off A
    to_tu: dict[str, str] = {}
    from_bu: dict[str, str] = {}
    for w in W.structure.events:
        side, rest = untag(W.left.mapping[w])
        if side == "1":
            to_tu[w] = tag("1", rest)
        elif untag(J.right.mapping[rest])[0] == "1":
            to_tu[w] = tag("0", untag(J.right.mapping[rest])[1])

        side, rest = untag(W.right.mapping[w])
        if side == "1":
            from_bu[w] = tag("1", rest)
        elif untag(rest)[0] == "1":
            from_bu[w] = tag("0", untag(rest)[1])

    I_r = inner_right.interaction
    m_tu = mediating(
        EsMap(W.structure, I_r.sigma.source, to_tu),
        EsMap(W.structure, I_r.tau.source, from_bu),
        I_r,
    )

    # W ⇀ (ρ ⊙ τ) ⊛ σ, defined off C
    to_s: dict[str, str] = {}
    to_tu_visible: dict[str, str] = {}
    for w, component in components.items():
        if component == "C":
            continue
        side, rest = untag(W.left.mapping[w])
        if side == "1":
            to_s[w] = tag("1", rest)
        else:
            to_s[w] = tag("0", untag(J.left.mapping[rest])[1])
        if component == "A":
            to_tu_visible[w] = tag("0", untag(untag(W.labelling.mapping[w])[1])[1])
        else:
            to_tu_visible[w] = tag("1", m_tu.mapping[w])

    O_s = source.interaction
    m_source = mediating(
        EsMap(W.structure, O_s.sigma.source, to_s),
        EsMap(W.structure, O_s.tau.source, to_tu_visible),
        O_s,
    )
    m_target = zipped_hiding(
        hid, rho, source=opened, target=inner_left.strategy, settings=settings
    )

    mapping: dict[str, str] = {}
    for w in sorted(W.structure.events):
        if components[w] not in ("A", "D"):
            continue
        e, image = m_source.mapping[w], m_target.mapping.get(w)
        if e in mapping or image is None:
            raise MapError(f"Hidings of the triple interaction disagree at {w}")
        mapping[e] = image

    result = EsMap(source.structure, target.structure, mapping)
    if not is_isomorphism(result):
        raise MapError("Associator is not an isomorphism")
    if any(target.strategy(mapping[e]) != source.strategy(e) for e in mapping):
        raise MapError("Associator does not commute with the labellings")
    return result


def _compare(lhs: EsMap, rhs: EsMap) -> LawVerdict:
    if lhs.mapping == rhs.mapping:
        return LawVerdict(True, witness=lhs)
    differing = sorted(e for e in lhs.mapping if lhs.mapping[e] != rhs.mapping.get(e))
    return LawVerdict(False, counterexample=differing)


def pentagon(
    s1: PreStrategy,
    s2: PreStrategy,
    s3: PreStrategy,
    s4: PreStrategy,
    settings: Settings | None = None,
) -> LawVerdict:
    """Check that both ways of rebracketing four strategies give one map."""
    c12 = compose(s1, s2, settings).strategy
    c23 = compose(s2, s3, settings).strategy
    c34 = compose(s3, s4, settings).strategy

    path_a = compose_maps(
        associator(s1, s2, c34, settings), associator(c12, s3, s4, settings)
    )

    first = composition_map(
        identity_map(s1.inner),
        associator(s2, s3, s4, settings),
        compose(s1, compose(s2, c34, settings).strategy, settings),
        compose(s1, compose(c23, s4, settings).strategy, settings),
    )
    second = associator(s1, c23, s4, settings)
    third = composition_map(
        associator(s1, s2, s3, settings),
        identity_map(s4.inner),
        compose(compose(s1, c23, settings).strategy, s4, settings),
        compose(compose(c12, s3, settings).strategy, s4, settings),
    )
    path_b = compose_maps(compose_maps(first, second), third)

    return _compare(path_a, path_b)


def unit_triangle(
    sigma: PreStrategy, tau: PreStrategy, settings: Settings | None = None
) -> LawVerdict:
    """Check τ ⊙ λ_σ ∘ α = ρ_τ ⊙ σ for σ, τ meeting at B."""
    _, B = split_games(sigma)
    cc = copycat(B)
    plain = compose(sigma, tau, settings)

    direct = composition_map(
        identity_map(sigma.inner),
        right_unitor(tau, settings),
        compose(sigma, compose(cc, tau, settings).strategy, settings),
        plain,
    )
    through = compose_maps(
        associator(sigma, cc, tau, settings),
        composition_map(
            left_unitor(sigma, settings),
            identity_map(tau.inner),
            compose(compose(sigma, cc, settings).strategy, tau, settings),
            plain,
        ),
    )
    return _compare(direct, through)


# Compact closure


def eta(A: EventStructure) -> PreStrategy:
    """η_A on 1⊥ ∥ (A⊥ ∥ A), carried by CC_A."""
    cc = copycat(A)
    target = parallel(dual(A), A).structure
    mapping = {left(a): right(tag("0", a)) for a in A.events}
    mapping.update({right(a): right(tag("1", a)) for a in A.events})
    return PreStrategy(
        EsMap(cc.inner, strategy_game(EMPTY_GAME, target), mapping),
        left=EMPTY_GAME,
        right=target,
        name="eta",
    )


def epsilon(A: EventStructure) -> PreStrategy:
    """ε_A on (A ∥ A⊥)⊥ ∥ 1, carried by CC_A."""
    cc = copycat(A)
    source = parallel(A, dual(A)).structure
    mapping = {left(a): left(tag("0", a)) for a in A.events}
    mapping.update({right(a): left(tag("1", a)) for a in A.events})
    return PreStrategy(
        EsMap(cc.inner, strategy_game(source, EMPTY_GAME), mapping),
        left=source,
        right=EMPTY_GAME,
        name="epsilon",
    )


def compose_chain(
    strategies: Sequence[PreStrategy], settings: Settings | None = None
) -> PreStrategy:
    """Compose left to right: the first strategy plays first."""
    return reduce(lambda acc, nxt: compose(acc, nxt, settings).strategy, strategies)


def snake_chains(A: EventStructure) -> tuple[list[PreStrategy], list[PreStrategy]]:
    """The two five-fold composites of the snake equations for A and A⊥."""
    dA = dual(A)
    first = [
        lift_inverse(structural("rho", A)),
        tensor(copycat(A), eta(A)),
        lift_inverse(structural("alpha", A, dA, A)),
        tensor(epsilon(A), copycat(A)),
        structural("lambda", A).strategy,
    ]
    second = [
        lift_inverse(structural("lambda", dA)),
        tensor(eta(A), copycat(dA)),
        structural("alpha", dA, A, dA).strategy,
        tensor(copycat(dA), epsilon(A)),
        structural("rho", dA).strategy,
    ]
    return first, second


def snake_check(A: EventStructure, settings: Settings | None = None) -> LawVerdict:
    """
    Check both snake equations for A up to isomorphism.

    The witness holds the two isomorphisms found.

    Raises:
        GuardExceededError: If A is too large for the composites.
    """
    settings = settings or get_settings()
    if 2 * len(A.events) > settings.max_events:
        raise GuardExceededError(
            f"Snake equations on {len(A.events)} events exceed the guard of "
            f"{settings.max_events}"
        )

    first, second = snake_chains(A)
    isos = []
    for label, chain, expected in (
        ("first", first, copycat(A)),
        ("second", second, copycat(dual(A))),
    ):
        composite = compose_chain(chain, settings)
        iso = strategy_isomorphism(composite, expected)
        if iso is None:
            logger.info(f"The {label} snake equation fails")
            return LawVerdict(False, counterexample=label)
        isos.append(iso)
    return LawVerdict(True, witness=tuple(isos))
