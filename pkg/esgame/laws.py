import logging
import random
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor, as_completed
from itertools import combinations, product
from pathlib import Path

from esgame.algebra import (
    associator,
    associator_by_witnesses,
    pentagon,
    snake_check,
    unit_triangle,
)
from esgame.documents import parse
from esgame.games import (
    copycat,
    copycat_links,
    scott_leq,
    scott_leq_by_copycat,
    scott_leq_by_search,
)
from esgame.interactions import (
    compose,
    is_secured,
    mediating,
    open_hiding,
    pair_key,
    pullback,
    split_games,
    zipped_hiding,
)
from esgame.seeders import (
    MAX_SEED,
    EspSeeder,
    PreStrategySeeder,
    StrategyFamilySeeder,
)
from esgame.strategies import (
    check_strategy,
    is_courteous,
    is_receptive,
    unitor_naturality,
)
from esgame.structures import (
    check_hiding_map,
    check_map,
    compose_maps,
    configurations,
    is_configuration,
    is_consistent,
    make_structure,
    parallel,
    project,
    relabel,
    strategy_isomorphism,
    tag,
)
from esgame.types import (
    EsMap,
    EventStructure,
    GuardExceededError,
    Operation,
    OperationResult,
    Pair,
    PreStrategy,
    format_config,
)
from esgame.utils.core import Settings, get_settings
from esgame.utils.graphs import topo_sort

logger = logging.getLogger(__name__)

FIXTURES_DIR = Path(__file__).parent / "fixtures"
SNAKE_FIXTURES = ("y.esp.json", "w.esp.json", "bool.esp.json")

Trial = Callable[[random.Random], str | None]

# Trial counts at the default of 200 trials; other values scale them.
BASE_TRIALS = {
    "equivalence": 200,
    "pullback": 100,
    "scott": 50,
    "product": 50,
    "closure": 50,
    "coherence": 20,
    "snake": 20,
    "hiding": 30,
    "copycat": 50,
}


def renamed_copy(sigma: PreStrategy, suffix: str = "'") -> tuple[PreStrategy, EsMap]:
    """A copy of σ with renamed events, and the isomorphism σ ⇒ copy."""
    rename = {s: f"{s}{suffix}" for s in sigma.inner.events}
    inner = relabel(sigma.inner, rename)
    labelling = {rename[s]: a for s, a in sigma.labelling.mapping.items()}
    copy = PreStrategy(
        EsMap(inner, sigma.game, labelling),
        left=sigma.left,
        right=sigma.right,
        name=sigma.name,
    )
    return copy, EsMap(sigma.inner, inner, rename)


def secured_bijections(
    sigma: EsMap, tau: EsMap, settings: Settings | None = None
) -> list[frozenset[Pair]]:
    """The secured bijections between configurations with equal images."""
    S, T = sigma.source, tau.source
    by_image: dict[frozenset[str], list[frozenset[str]]] = {}
    for y in configurations(T, settings):
        by_image.setdefault(tau.image(y), []).append(y)

    found = []
    for x in configurations(S, settings):
        for y in by_image.get(sigma.image(x), []):
            phi = frozenset(
                (s, t) for s in x for t in y if sigma.mapping[s] == tau.mapping[t]
            )
            if is_secured(phi, S, T):
                found.append(phi)
    return sorted(found, key=pair_key)


def random_cone(
    rng: random.Random,
    phi: frozenset[Pair],
    S: EventStructure,
    T: EventStructure,
    link_probability: float = 0.3,
) -> tuple[EsMap, EsMap]:
    """
    A cone over a secured bijection φ: one event per pair, ordered as S and
    T order the pairs, plus random extra links. The legs send each event to
    its two components.
    """
    pairs = sorted(phi)
    names = {p: f"x{i}" for i, p in enumerate(pairs)}
    causes = {
        (names[p], names[q])
        for p in pairs
        for q in pairs
        if p != q and (S.leq(p[0], q[0]) or T.leq(p[1], q[1]))
    }
    deps = {names[q]: sorted(a for a, b in causes if b == names[q]) for q in pairs}
    order = topo_sort(deps)
    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            if rng.random() < link_probability:
                causes.add((a, b))

    X = make_structure(sorted(names.values()), causes)
    alpha = EsMap(X, S, {names[p]: p[0] for p in pairs})
    beta = EsMap(X, T, {names[p]: p[1] for p in pairs})
    return alpha, beta


class LawSuite:
    """
    Seeded property checks over generated games and strategies.

    Each stage runs its trials on a thread pool and reports an
    `OperationResult` whose metadata counts passed, failed and skipped
    trials. A trial is skipped when it exceeds the enumeration guard.
    """

    def __init__(
        self,
        seed: int = 0,
        trials: int = 200,
        max_events: int = 6,
        settings: Settings | None = None,
        max_workers: int = 10,
    ):
        if trials < 1:
            raise ValueError("trials must be positive")
        self.seed = seed
        self.trials = trials
        self.max_events = max_events
        self.settings = settings or get_settings()
        self.max_workers = max_workers

    def get_configuration(self) -> dict[str, list[str]]:
        """Map each stage to the laws it checks."""
        return {
            "Equivalence": ["receptive ∧ courteous", "Scott fibration", "±-fibrations", "cc ⊙ σ ≅ σ"],
            "Pullback": ["mediating map", "uniqueness"],
            "Scott order": ["three criteria agree", "partial order"],
            "Product": ["𝒞(E ∥ F) ≅ 𝒞(E) × 𝒞(F)"],
            "Closure": ["τ ⊙ σ receptive", "τ ⊙ σ courteous"],
            "Coherence": ["associator constructions agree", "pentagon", "unit triangle", "unitor naturality"],
            "Snake": ["first equation", "second equation"],
            "Hiding": ["projections", "composites", "zipping"],
            "Copycat": ["immediate causality", "consistency", "idempotence"],
        }

    def stages(self) -> list[tuple[str, Operation]]:
        return [
            ("Equivalence", self.equivalence),
            ("Pullback", self.pullback),
            ("Scott order", self.scott),
            ("Product", self.product),
            ("Closure", self.closure),
            ("Coherence", self.coherence),
            ("Snake", self.snake),
            ("Hiding", self.hiding),
            ("Copycat", self.copycat),
        ]

    def _count(self, stage: str) -> int:
        return max(1, BASE_TRIALS[stage] * self.trials // 200)

    def _rng(self, stage: str, index: int) -> random.Random:
        return random.Random(f"{self.seed}:{stage}:{index}")

    def _game(self, rng: random.Random, n_max: int, polarity: bool = True) -> EventStructure:
        n = rng.randint(0, min(n_max, self.max_events))
        return EspSeeder(
            rng.randrange(MAX_SEED), n, polarity=polarity, settings=self.settings
        ).seed()

    def _run(self, stage: str, trial: Trial) -> OperationResult:
        count = self._count(stage)
        logger.info(f"Running {count} {stage} trials")

        failures: list[str] = []
        errors: list[str] = []
        skipped = 0

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_index = {
                executor.submit(trial, self._rng(stage, i)): i for i in range(count)
            }
            for future in as_completed(future_to_index):
                index = future_to_index[future]
                try:
                    failure = future.result()
                except GuardExceededError as e:
                    skipped += 1
                    logger.warning(f"Trial {index} skipped: {e}")
                    continue
                except Exception as e:
                    errors.append(f"Trial {index} raised {e!r}")
                    logger.error(f"Trial {index} raised {e!r}")
                    continue
                if failure is not None:
                    failures.append(f"Trial {index}: {failure}")
                    logger.warning(f"Trial {index} failed: {failure}")

        passed = count - len(failures) - len(errors) - skipped
        messages = [f"Ran {count} trials", f"{passed} passed"]
        if skipped:
            messages.append(f"{skipped} skipped by the guard")
        messages.extend(sorted(failures)[:5])
        messages.extend(sorted(errors)[:5])

        if failures or errors:
            result = "failure"
        elif skipped:
            result = "partial_success"
        else:
            result = "success"

        return OperationResult(
            result=result,
            messages=messages,
            metadata={
                "stage": stage,
                "trials": count,
                "passed": passed,
                "failed": len(failures) + len(errors),
                "skipped": skipped,
            },
        )

    # Stages

    def equivalence(self) -> OperationResult:
        """The characterisations of strategies agree on every trial."""

        def trial(rng: random.Random) -> str | None:
            family = rng.random() < 0.5
            if family:
                sigma = StrategyFamilySeeder(rng.randrange(MAX_SEED), size=2, depth=1).seed()
            else:
                game = self._game(rng, self.max_events)
                sigma = PreStrategySeeder(
                    rng.randrange(MAX_SEED), game, max_events=self.max_events
                ).seed()

            verdict = check_strategy(sigma, self.settings)
            if not verdict.agrees:
                return f"characterisations disagree on {sigma!r}"
            if family and not verdict.copycat_invariant:
                return f"{sigma!r} from the strategy family is not a strategy"
            return None

        return self._run("equivalence", trial)

    def pullback(self) -> OperationResult:
        """Mediating maps exist, commute and are unique."""

        def trial(rng: random.Random) -> str | None:
            game = self._game(rng, 3)
            sigma = PreStrategySeeder(rng.randrange(MAX_SEED), game, max_events=4).seed()
            tau = PreStrategySeeder(rng.randrange(MAX_SEED), game, max_events=4).seed()
            pb = pullback(sigma.labelling, tau.labelling, self.settings)

            phi = rng.choice(secured_bijections(sigma.labelling, tau.labelling, self.settings))
            alpha, beta = random_cone(rng, phi, sigma.inner, tau.inner)
            X = alpha.source
            for leg in (alpha, beta):
                if not check_map(leg, self.settings).is_map:
                    return f"cone leg over {sorted(phi)} is not a map"

            m = mediating(alpha, beta, pb)
            if compose_maps(m, pb.left).mapping != alpha.mapping:
                return f"left triangle fails over {sorted(phi)}"
            if compose_maps(m, pb.right).mapping != beta.mapping:
                return f"right triangle fails over {sorted(phi)}"

            options = [
                [
                    p
                    for p in sorted(pb.structure.events)
                    if pb.tops[p] == (alpha.mapping[e], beta.mapping[e])
                ]
                for e in sorted(X.events)
            ]
            candidates = [
                dict(zip(sorted(X.events), choice, strict=True))
                for choice in product(*options)
            ]
            maps = [
                c for c in candidates if check_map(EsMap(X, pb.structure, c), self.settings).is_map
            ]
            if maps != [m.mapping]:
                return f"{len(maps)} mediating maps over {sorted(phi)}"
            return None

        return self._run("pullback", trial)

    def scott(self) -> OperationResult:
        """The three criteria for ⊑ agree and ⊑ is a partial order."""

        def trial(rng: random.Random) -> str | None:
            A = self._game(rng, 5)
            xs = configurations(A, self.settings)
            leq = {}
            for x, y in product(xs, repeat=2):
                direct = scott_leq(A, x, y)[0]
                by_copycat = scott_leq_by_copycat(A, x, y)
                by_search = scott_leq_by_search(A, x, y, self.settings)
                if not direct == by_copycat == by_search:
                    return f"criteria disagree on {format_config(x)} ⊑ {format_config(y)}"
                leq[x, y] = direct

            for x in xs:
                if not leq[x, x]:
                    return f"not reflexive at {format_config(x)}"
            for x, y in combinations(xs, 2):
                if leq[x, y] and leq[y, x]:
                    return f"not antisymmetric at {format_config(x)}, {format_config(y)}"
            for x, y, z in product(xs, repeat=3):
                if leq[x, y] and leq[y, z] and not leq[x, z]:
                    return f"not transitive at {format_config(x)}, {format_config(z)}"
            return None

        return self._run("scott", trial)

    def product(self) -> OperationResult:
        """Configurations of E ∥ F are the pairs of configurations."""

        def trial(rng: random.Random) -> str | None:
            polarity = rng.random() < 0.5
            E = self._game(rng, 5, polarity)
            F = self._game(rng, 5, polarity)
            joint = set(configurations(parallel(E, F).structure, self.settings))
            pairs = {
                frozenset(tag("0", e) for e in x) | frozenset(tag("1", f) for f in y)
                for x in configurations(E, self.settings)
                for y in configurations(F, self.settings)
            }
            if joint != pairs:
                return f"{len(joint)} configurations instead of {len(pairs)}"
            return None

        return self._run("product", trial)

    def closure(self) -> OperationResult:
        """Composites of strategies are strategies."""

        def trial(rng: random.Random) -> str | None:
            sigma = StrategyFamilySeeder(rng.randrange(MAX_SEED), size=2, depth=1).seed()
            _, B = split_games(sigma)
            tau = StrategyFamilySeeder(rng.randrange(MAX_SEED), depth=1).seed_from(B)
            composite = compose(sigma, tau, self.settings).strategy

            receptive = is_receptive(composite, self.settings)
            if not receptive:
                return f"composite is not receptive at {receptive.counterexample}"
            courteous = is_courteous(composite)
            if not courteous:
                return f"composite is not courteous at {courteous.counterexample}"
            return None

        return self._run("closure", trial)

    def coherence(self) -> OperationResult:
        """Associator cross-check, pentagon, unit triangle and unitor naturality."""

        def trial(rng: random.Random) -> str | None:
            chain = [StrategyFamilySeeder(rng.randrange(MAX_SEED), depth=0).seed_from(
                self._game(rng, 2)
            )]
            for _ in range(3):
                _, B = split_games(chain[-1])
                chain.append(StrategyFamilySeeder(rng.randrange(MAX_SEED), depth=0).seed_from(B))

            through_pullbacks = associator(*chain[:3], settings=self.settings)
            through_witnesses = associator_by_witnesses(*chain[:3], settings=self.settings)
            if through_pullbacks.mapping != through_witnesses.mapping:
                return "associator constructions disagree"

            verdict = pentagon(*chain, settings=self.settings)
            if not verdict:
                return f"pentagon differs at {verdict.counterexample}"
            verdict = unit_triangle(chain[0], chain[1], self.settings)
            if not verdict:
                return f"unit triangle differs at {verdict.counterexample}"

            copy, f = renamed_copy(chain[0])
            verdict = unitor_naturality(f, chain[0], copy, self.settings)
            if not verdict:
                return f"left unitor is not natural at {verdict.counterexample}"
            return None

        return self._run("coherence", trial)

    def snake(self) -> OperationResult:
        """Both snake equations, on generated games and the bundled ones."""
        bundled = [
            game
            for game in (parse(FIXTURES_DIR / name) for name in SNAKE_FIXTURES)
            if isinstance(game, EventStructure)
        ]

        def trial(rng: random.Random) -> str | None:
            games = [self._game(rng, 3)]
            if bundled and rng.random() < 0.25:
                games.append(rng.choice(bundled))
            for A in games:
                verdict = snake_check(A, self.settings)
                if not verdict:
                    return f"the {verdict.counterexample} snake equation fails on {A!r}"
            return None

        return self._run("snake", trial)

    def hiding(self) -> OperationResult:
        """Projections are hiding maps, closed under composition and zipping."""

        def trial(rng: random.Random) -> str | None:
            E = self._game(rng, 5)
            V = frozenset(e for e in E.events if rng.random() < 0.6)
            V2 = frozenset(e for e in V if rng.random() < 0.6)
            outer = project(E, V).hiding
            inner = project(outer.target, V2).hiding
            for label, f in (
                ("projection", outer),
                ("second projection", inner),
                ("composite", compose_maps(outer, inner)),
            ):
                verdict = check_hiding_map(f, self.settings)
                if not verdict:
                    return f"{label} is not a hiding map: {verdict.reason}"

            sigma = StrategyFamilySeeder(rng.randrange(MAX_SEED), size=1, depth=0).seed()
            _, B = split_games(sigma)
            tau = StrategyFamilySeeder(rng.randrange(MAX_SEED), depth=0).seed_from(B)
            _, C = split_games(tau)
            rho = StrategyFamilySeeder(rng.randrange(MAX_SEED), depth=0).seed_from(C)

            c = compose(sigma, tau, self.settings)
            source, hid = open_hiding(c)
            zipped = zipped_hiding(
                hid, rho, source=source, target=c.strategy, settings=self.settings
            )
            verdict = check_hiding_map(zipped, self.settings)
            if not verdict:
                return f"zipped map is not a hiding map: {verdict.reason}"
            return None

        return self._run("hiding", trial)

    def copycat(self) -> OperationResult:
        """Copycat has the expected links and consistency, and is idempotent."""

        def trial(rng: random.Random) -> str | None:
            A = self._game(rng, 5)
            cc = copycat(A)
            if cc.inner.causes != copycat_links(A):
                return f"immediate causality of copycat differs on {A!r}"

            events = sorted(cc.inner.events)
            below = cc.inner.below
            for size in range(len(events) + 1):
                for X in combinations(events, size):
                    members = frozenset(X)
                    if any(not below[e] <= members for e in members):
                        continue
                    if is_configuration(cc.inner, members) != is_consistent(cc.game, members):
                        return f"consistency of copycat differs at {format_config(members)}"

            if len(A.events) <= 3:
                doubled = compose(cc, cc, self.settings).strategy
                if strategy_isomorphism(doubled, cc) is None:
                    return f"cc ⊙ cc is not isomorphic to cc on {A!r}"
            return None

        return self._run("copycat", trial)

    def run(self) -> list[OperationResult]:
        return [operation() for _, operation in self.stages()]
