import argparse
import logging
import sys
import time
from collections.abc import Sequence
from typing import Any, TextIO

from rich import box
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from rich.text import Text

import esgame
from esgame.algebra import colift, lift, pentagon, snake_check, tensor
from esgame.documents import (
    DocumentValue,
    dot_export,
    parse,
    serialize,
    write_text,
)
from esgame.games import copycat, dual
from esgame.interactions import compose, interaction, interaction_strategy
from esgame.laws import LawSuite
from esgame.seeders import EspSeeder, PreStrategySeeder, StrategyFamilySeeder
from esgame.strategies import (
    FIBRATION_VARIANTS,
    check_strategy,
    is_courteous,
    is_discrete_fibration,
    is_receptive,
    is_strategy,
)
from esgame.structures import (
    enumerate_configurations,
    find_isomorphisms,
    parallel,
    project,
    strategy_isomorphism,
)
from esgame.types import (
    DocumentError,
    EsgameError,
    EsMap,
    EventStructure,
    GuardExceededError,
    LawVerdict,
    OperationResult,
    PreconditionError,
    PreStrategy,
    format_config,
)
from esgame.utils.core import Settings, configure, get_settings
from esgame.utils.progress import LiveProgressLogger, status_for

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_GUARD = 3


def describe(value: Any) -> str:
    """Human-readable rendering of counterexamples and witnesses."""
    if isinstance(value, frozenset):
        return format_config(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(describe(v) for v in value) + ")"
    if isinstance(value, list):
        return "[" + ", ".join(describe(v) for v in value) + "]"
    if isinstance(value, EsMap):
        return ", ".join(f"{s} ↦ {t}" for s, t in sorted(value.mapping.items()))
    return str(value)


def _expect_structure(value: DocumentValue, path: str) -> EventStructure:
    if not isinstance(value, EventStructure):
        raise DocumentError(f"{path} is not an esp document")
    return value


def _expect_strategy(value: DocumentValue, path: str) -> PreStrategy:
    if not isinstance(value, PreStrategy):
        raise DocumentError(f"{path} is not a pre-strategy document")
    return value


def _expect_map(value: DocumentValue, path: str) -> EsMap:
    if isinstance(value, PreStrategy):
        return value.labelling
    if not isinstance(value, EsMap):
        raise DocumentError(f"{path} is not a map document")
    return value


class BaseCommand:
    name: str = ""
    help: str = ""

    def __init__(self, stdout: TextIO, console: Console):
        self.stdout = stdout
        self.console = console
        self.settings = Settings()

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def handle(self, options: argparse.Namespace) -> int:
        raise NotImplementedError

    def write(self, text: str, path: str) -> None:
        if path == "-":
            self.stdout.write(text)
        else:
            write_text(text, path)

    def emit(self, value: DocumentValue, options: argparse.Namespace, name: str = "") -> None:
        self.write(serialize(value, name), getattr(options, "output", "-"))

    def verdict(self, law: str, verdict: LawVerdict) -> int:
        if verdict:
            self.console.print(f"{law}: [green]holds[/green]")
            return EXIT_OK
        self.console.print(f"{law}: [red]fails[/red]")
        self.console.print(f"  counterexample: {describe(verdict.counterexample)}", markup=False)
        return EXIT_FAILED


def add_output_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", default="-", help="Output path, - for stdout")


class ValidateCommand(BaseCommand):
    name = "validate"
    help = "Check that a document describes a valid esp, map or pre-strategy"

    def add_arguments(self, parser):
        parser.add_argument("path")

    def handle(self, options):
        value = parse(options.path)
        if isinstance(value, EventStructure):
            self.stdout.write(
                f"esp: {len(value.events)} events, {len(value.causes)} causal links, "
                f"{len(value.conflicts)} conflicts\n"
            )
        elif isinstance(value, PreStrategy):
            self.stdout.write(
                f"prestrategy: {len(value.inner.events)} events on a game of "
                f"{len(value.game.events)}\n"
            )
        else:
            self.stdout.write(f"map: {len(value.mapping)} of {len(value.source.events)} events\n")
        return EXIT_OK


class ConfigsCommand(BaseCommand):
    name = "configs"
    help = "List the configurations of an esp"

    def add_arguments(self, parser):
        parser.add_argument("path")
        parser.add_argument("--covers", action="store_true", help="Also list covering steps")
        parser.add_argument("--dot", metavar="PATH", help="Write the domain as DOT")

    def handle(self, options):
        value = parse(options.path)
        E = value.inner if isinstance(value, PreStrategy) else _expect_structure(value, options.path)
        domain = enumerate_configurations(E, self.settings)
        for x in domain:
            self.stdout.write(format_config(x) + "\n")
        if options.covers:
            for i, j, e in domain.covers:
                self.stdout.write(
                    f"{format_config(domain.configurations[i])} -{e}-> "
                    f"{format_config(domain.configurations[j])}\n"
                )
        if options.dot:
            self.write(dot_export(domain), options.dot)
        return EXIT_OK


class ParallelCommand(BaseCommand):
    name = "parallel"
    help = "Parallel composition of esps, tagged 0., 1., ..."

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs="+")
        add_output_argument(parser)

    def handle(self, options):
        structures = [_expect_structure(parse(p), p) for p in options.paths]
        self.emit(parallel(*structures).structure, options)
        return EXIT_OK


class DualCommand(BaseCommand):
    name = "dual"
    help = "Reverse the polarities of a game"

    def add_arguments(self, parser):
        parser.add_argument("path")
        add_output_argument(parser)

    def handle(self, options):
        self.emit(dual(_expect_structure(parse(options.path), options.path)), options)
        return EXIT_OK


class ProjectCommand(BaseCommand):
    name = "project"
    help = "Restrict an esp to some of its events"

    def add_arguments(self, parser):
        parser.add_argument("path")
        parser.add_argument("--keep", required=True, help="Comma-separated event ids")
        add_output_argument(parser)

    def handle(self, options):
        E = _expect_structure(parse(options.path), options.path)
        keep = [e.strip() for e in options.keep.split(",") if e.strip()]
        self.emit(project(E, keep).structure, options)
        return EXIT_OK


class CopycatCommand(BaseCommand):
    name = "copycat"
    help = "The copycat strategy on a game"

    def add_arguments(self, parser):
        parser.add_argument("path")
        add_output_argument(parser)

    def handle(self, options):
        self.emit(copycat(_expect_structure(parse(options.path), options.path)), options)
        return EXIT_OK


class InteractCommand(BaseCommand):
    name = "interact"
    help = "Interaction of two strategies, before hiding"

    def add_arguments(self, parser):
        parser.add_argument("sigma")
        parser.add_argument("tau")
        parser.add_argument("--dot", metavar="PATH", help="Write the interaction as DOT")
        add_output_argument(parser)

    def handle(self, options):
        sigma = _expect_strategy(parse(options.sigma), options.sigma)
        tau = _expect_strategy(parse(options.tau), options.tau)
        result = interaction(sigma, tau, self.settings)
        if options.dot:
            self.write(dot_export(result), options.dot)
        self.emit(interaction_strategy(result), options)
        return EXIT_OK


class ComposeCommand(BaseCommand):
    name = "compose"
    help = "Compose two strategies; the first one plays first"

    def add_arguments(self, parser):
        parser.add_argument("sigma")
        parser.add_argument("tau")
        add_output_argument(parser)

    def handle(self, options):
        sigma = _expect_strategy(parse(options.sigma), options.sigma)
        tau = _expect_strategy(parse(options.tau), options.tau)
        self.emit(compose(sigma, tau, self.settings).strategy, options)
        return EXIT_OK


class CheckCommand(BaseCommand):
    name = "check"
    help = "Check the strategy laws of a pre-strategy"

    def add_arguments(self, parser):
        parser.add_argument("path")
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--receptive", action="store_true")
        group.add_argument("--courteous", action="store_true")
        group.add_argument("--fibration", choices=FIBRATION_VARIANTS)
        group.add_argument("--strategy", action="store_true", help="cc ⊙ σ ≅ σ")

    def handle(self, options):
        sigma = _expect_strategy(parse(options.path), options.path)
        if options.receptive:
            return self.verdict("receptive", is_receptive(sigma, self.settings))
        if options.courteous:
            return self.verdict("courteous", is_courteous(sigma))
        if options.fibration:
            return self.verdict(
                f"{options.fibration} fibration",
                is_discrete_fibration(sigma, options.fibration, self.settings),
            )
        if options.strategy:
            return self.verdict("strategy", is_strategy(sigma, self.settings))

        verdict = check_strategy(sigma, self.settings)
        rows = [
            ("receptive", verdict.receptive),
            ("courteous", verdict.courteous),
            *((f"{v} fibration", verdict.fibration[v]) for v in FIBRATION_VARIANTS),
            ("cc ⊙ σ ≅ σ", verdict.copycat_invariant),
        ]
        table = Table(show_header=True, header_style="bold", box=box.SQUARE)
        table.add_column("Law", style="cyan", no_wrap=True)
        table.add_column("Holds")
        table.add_column("Counterexample", style="white")
        for law, v in rows:
            table.add_row(
                law,
                "[green]yes[/green]" if v else "[red]no[/red]",
                Text("" if v else describe(v.counterexample)),
            )
        self.console.print(table)
        if not verdict.agrees:
            self.console.print("[yellow]The characterisations disagree[/yellow]")
        return EXIT_OK if verdict.copycat_invariant else EXIT_FAILED


class IsoCommand(BaseCommand):
    name = "iso"
    help = "Find an isomorphism between two esps or two pre-strategies"

    def add_arguments(self, parser):
        parser.add_argument("first")
        parser.add_argument("second")
        parser.add_argument("--over", metavar="GAME", help="Require both to play on GAME")
        add_output_argument(parser)

    def handle(self, options):
        first, second = parse(options.first), parse(options.second)

        if isinstance(first, PreStrategy) and isinstance(second, PreStrategy):
            if options.over:
                game = _expect_structure(parse(options.over), options.over)
                if first.game != game or second.game != game:
                    raise PreconditionError("Pre-strategies do not play on the given game")
            iso = strategy_isomorphism(first, second)
        else:
            if options.over:
                raise PreconditionError("--over needs two pre-strategies")
            S = _expect_structure(first, options.first)
            T = _expect_structure(second, options.second)
            found = find_isomorphisms(S, T, limit=1)
            iso = EsMap(S, T, found[0]) if found else None

        if iso is None:
            self.console.print("[red]not isomorphic[/red]")
            return EXIT_FAILED
        self.emit(iso, options, name="iso")
        return EXIT_OK


class TensorCommand(BaseCommand):
    name = "tensor"
    help = "Tensor product of two strategies"

    def add_arguments(self, parser):
        parser.add_argument("sigma")
        parser.add_argument("tau")
        add_output_argument(parser)

    def handle(self, options):
        sigma = _expect_strategy(parse(options.sigma), options.sigma)
        tau = _expect_strategy(parse(options.tau), options.tau)
        self.emit(tensor(sigma, tau), options)
        return EXIT_OK


class LiftCommand(BaseCommand):
    name = "lift"
    help = "Lift a map of games to a strategy"

    def add_arguments(self, parser):
        parser.add_argument("path")
        parser.add_argument("--co", action="store_true", help="Co-lift f : B⊥ → A⊥ instead")
        add_output_argument(parser)

    def handle(self, options):
        f = _expect_map(parse(options.path), options.path)
        self.emit(colift(f) if options.co else lift(f), options)
        return EXIT_OK


class SnakeCommand(BaseCommand):
    name = "snake"
    help = "Check the snake equations of a game"

    def add_arguments(self, parser):
        parser.add_argument("path")

    def handle(self, options):
        A = _expect_structure(parse(options.path), options.path)
        return self.verdict("snake equations", snake_check(A, self.settings))


class PentagonCommand(BaseCommand):
    name = "pentagon"
    help = "Check the associator pentagon on four composable strategies"

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs=4)

    def handle(self, options):
        strategies = [_expect_strategy(parse(p), p) for p in options.paths]
        return self.verdict("pentagon", pentagon(*strategies, settings=self.settings))


class GenCommand(BaseCommand):
    name = "gen"
    help = "Generate a seeded esp, pre-strategy or strategy"

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=0)
        mode = parser.add_mutually_exclusive_group()
        mode.add_argument("--events", type=int, default=None, help="Generate an esp")
        mode.add_argument("--prestrategy", metavar="GAME", help="Generate a pre-strategy on GAME")
        mode.add_argument("--family", action="store_true", help="Generate a strategy")
        parser.add_argument("--no-polarity", action="store_true")
        parser.add_argument("--max-events", type=int, default=6)
        parser.add_argument("--size", type=int, default=2)
        add_output_argument(parser)

    def handle(self, options):
        if options.prestrategy:
            game = _expect_structure(parse(options.prestrategy), options.prestrategy)
            value: DocumentValue = PreStrategySeeder(
                options.seed, game, max_events=options.max_events
            ).seed()
        elif options.family:
            value = StrategyFamilySeeder(options.seed, size=options.size).seed()
        else:
            value = EspSeeder(
                options.seed,
                options.events if options.events is not None else options.size,
                polarity=not options.no_polarity,
                settings=self.settings,
            ).seed()
        self.emit(value, options, name=f"seed-{options.seed}")
        return EXIT_OK


class LawsCommand(BaseCommand):
    name = "laws"
    help = "Run the seeded law suite"

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--trials", type=int, default=200)
        parser.add_argument("--max-events", type=int, default=6)

    def handle(self, options):
        suite = LawSuite(
            seed=options.seed,
            trials=options.trials,
            max_events=options.max_events,
            settings=self.settings,
        )

        header = f"ESGAME v{esgame.__version__} law suite (seed {options.seed})"
        self.console.print(header, style="bold")
        self.console.print("─" * len(header))
        self.console.print("")

        started = time.time()
        progress_logger = LiveProgressLogger(
            console=self.console,
            level=logging.DEBUG if options.verbose else logging.INFO,
        )
        results = [
            (stage, self.execute_stage(progress_logger, stage, operation))
            for stage, operation in suite.stages()
        ]

        self.console.print(f"[[green]DONE[/green]] Law suite finished in {time.time() - started:.1f}s")
        self.console.print()

        table = Table(show_header=True, header_style="bold", box=box.SQUARE)
        table.add_column("Stage", style="cyan", no_wrap=True)
        table.add_column("Trials", justify="right")
        table.add_column("Passed", justify="right")
        table.add_column("Failed", justify="right")
        table.add_column("Skipped", justify="right")
        table.add_column("Status")
        for stage, result in results:
            metadata = result.metadata if result else {}
            table.add_row(
                stage,
                str(metadata.get("trials", "-")),
                str(metadata.get("passed", "-")),
                str(metadata.get("failed", "-")),
                str(metadata.get("skipped", "-")),
                status_for(result.result if result else "failure"),
            )
        self.console.print(table)

        failed = any(result is None or result.result == "failure" for _, result in results)
        status = "[red]FAILED[/red]" if failed else "[green]ALL LAWS HOLD[/green]"
        self.console.print(f"Result: {status}")
        return EXIT_FAILED if failed else EXIT_OK

    def execute_stage(
        self, progress_logger: LiveProgressLogger, stage: str, operation
    ) -> OperationResult | None:
        with progress_logger.stage(stage) as handle:
            try:
                result = operation()
                messages = result.messages
                handle.set_status(status_for(result.result))
            except Exception as e:
                result = None
                messages = [f"Error: {e}"]
                handle.set_status("FAIL")

        for message in messages:
            self.console.print(f"  {message}", markup=False)
        self.console.print("")
        return result


class DotCommand(BaseCommand):
    name = "dot"
    help = "Render an esp or pre-strategy as DOT"

    def add_arguments(self, parser):
        parser.add_argument("path")
        parser.add_argument("--name", default="G")
        add_output_argument(parser)

    def handle(self, options):
        value = parse(options.path)
        if isinstance(value, EsMap):
            raise DocumentError(f"{options.path} is a map; only esps and pre-strategies render")
        self.write(dot_export(value, options.name), options.output)
        return EXIT_OK


COMMANDS: list[type[BaseCommand]] = [
    ValidateCommand,
    ConfigsCommand,
    ParallelCommand,
    DualCommand,
    ProjectCommand,
    CopycatCommand,
    InteractCommand,
    ComposeCommand,
    CheckCommand,
    IsoCommand,
    TensorCommand,
    LiftCommand,
    SnakeCommand,
    PentagonCommand,
    GenCommand,
    LawsCommand,
    DotCommand,
]


def build_parser(commands: Sequence[BaseCommand]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esgame", description="Event structures, games and strategies"
    )
    parser.add_argument("--version", action="version", version=esgame.__version__)
    parser.add_argument("--guard", type=int, help="Enumeration ceiling (events)")
    parser.add_argument("-v", "--verbose", action="store_true")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in commands:
        subparser = subparsers.add_parser(command.name, help=command.help)
        subparser.set_defaults(handler=command)
        command.add_arguments(subparser)
    return parser


def main(
    argv: Sequence[str] | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    stdout = stdout or sys.stdout
    console = Console(file=stderr or sys.stderr, highlight=False)

    parser = build_parser([command(stdout, console) for command in COMMANDS])
    try:
        options = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_INVALID

    if options.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s | %(message)s")

    try:
        if options.guard is not None:
            if options.guard <= 0:
                raise ValueError(f"Invalid guard: {options.guard}")
            configure(Settings(max_events=options.guard))
        command: BaseCommand = options.handler
        command.settings = get_settings()
        return command.handle(options)
    except GuardExceededError as e:
        console.print(f"[red]Guard exceeded:[/red] {escape(str(e))}")
        return EXIT_GUARD
    except (EsgameError, ValueError) as e:
        console.print(f"[red]Invalid input:[/red] {escape(str(e))}")
        return EXIT_INVALID
    finally:
        configure(None)
