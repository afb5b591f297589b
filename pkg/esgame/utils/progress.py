import logging
from collections import deque
from collections.abc import Iterator
from contextlib import contextmanager

from rich import box
from rich.console import Console, Group
from rich.live import Live
from rich.panel import Panel
from rich.progress import Progress, ProgressColumn, Task, TextColumn
from rich.text import Text

STATUS_MARKUP = {
    "OK": "[[green]OK[/green]]",
    "WARN": "[[yellow]WARN[/yellow]]",
    "FAIL": "[[red]FAIL[/red]]",
}


def status_for(result: str) -> str:
    """Display status of an `OperationResult.result` value."""
    return {"success": "OK", "partial_success": "WARN"}.get(result, "FAIL")


class LeaderColumn(ProgressColumn):
    """Dots leading from the stage name to its status."""

    def __init__(self, total_width: int = 72):
        super().__init__()
        self.total_width = total_width

    def render(self, task: Task) -> Text:
        # name, status, elapsed time and three separating spaces
        used = len(task.description) + 6 + 6 + 3
        return Text("." * max(5, self.total_width - used), style="dim")


class StatusColumn(ProgressColumn):
    def render(self, task: Task) -> Text:
        if not task.finished:
            return Text.from_markup("[RUNNING]")
        return Text.from_markup(STATUS_MARKUP[task.fields.get("status", "OK")])


class ElapsedColumn(ProgressColumn):
    """Elapsed seconds, frozen once the stage finishes."""

    def render(self, task: Task) -> Text:
        elapsed = task.finished_time if task.finished else task.elapsed
        style = "white" if task.finished else "progress.elapsed"
        return Text(f"{elapsed or 0.0:.1f}s", style=style)


class LogPanelHandler(logging.Handler):
    """Keeps the most recent records as rich Text lines and reports each update."""

    LEVEL_COLORS = {
        "DEBUG": "cyan",
        "INFO": "blue",
        "WARNING": "yellow",
        "ERROR": "red",
        "CRITICAL": "magenta",
    }

    def __init__(self, max_lines: int = 12, on_emit=None):
        super().__init__()
        self.records: deque[logging.LogRecord] = deque(maxlen=max_lines)
        self.on_emit = on_emit

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.records.append(record)
            if self.on_emit:
                self.on_emit(self.lines())
        except Exception:
            self.handleError(record)

    def lines(self) -> list[Text]:
        if not self.records:
            return []
        level_width = max(len(r.levelname) for r in self.records)
        name_width = max(len(r.name) for r in self.records)

        lines = []
        for record in self.records:
            color = self.LEVEL_COLORS.get(record.levelname, "white")
            emphasis = color if record.levelno >= logging.WARNING else None
            line = Text()
            line.append("[ ", style="dim bold")
            line.append(record.levelname.ljust(level_width), style=color)
            line.append(" ] ", style="dim bold")
            line.append(record.name.ljust(name_width), style="dim")
            line.append(" | ", style="dim bold")
            line.append(record.getMessage(), style=emphasis)
            lines.append(line)
        return lines


class LoggingCapture:
    """Route the package logger to one handler for the duration of a block."""

    def __init__(self, handler: logging.Handler, level: int = logging.INFO, name: str = "esgame"):
        self.handler = handler
        self.level = level
        self.logger = logging.getLogger(name)

    def __enter__(self) -> "LoggingCapture":
        self.saved = (self.logger.level, self.logger.handlers.copy(), self.logger.propagate)
        self.logger.handlers.clear()
        self.logger.addHandler(self.handler)
        self.logger.setLevel(self.level)
        self.logger.propagate = False
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        level, handlers, propagate = self.saved
        self.logger.handlers.clear()
        self.logger.handlers.extend(handlers)
        self.logger.setLevel(level)
        self.logger.propagate = propagate


class StageHandle:
    def __init__(self, progress: Progress, task_id):
        self.progress = progress
        self.task_id = task_id

    def set_status(self, status: str) -> None:
        """Set the final status shown for the stage: OK, WARN or FAIL."""
        self.progress.update(self.task_id, status=status)


class LiveProgressLogger:
    """A progress line per stage with a panel of the stage's recent log records."""

    def __init__(
        self,
        console: Console | None = None,
        level: int = logging.INFO,
        total_width: int = 72,
        max_log_lines: int = 12,
    ):
        self.console = console
        self.level = level
        self.total_width = total_width
        self.max_log_lines = max_log_lines

    @contextmanager
    def stage(self, description: str) -> Iterator[StageHandle]:
        progress = Progress(
            TextColumn("{task.description}"),
            LeaderColumn(total_width=self.total_width),
            StatusColumn(),
            ElapsedColumn(),
            console=self.console,
            expand=False,
        )

        with Live(progress, console=self.console, refresh_per_second=10) as live:

            def refresh(lines: list[Text]) -> None:
                panel = Panel(Group(*lines), border_style="dim", box=box.SQUARE, padding=0)
                live.update(Group(progress, panel))

            handler = LogPanelHandler(max_lines=self.max_log_lines, on_emit=refresh)
            with LoggingCapture(handler, level=self.level):
                task_id = progress.add_task(description, total=1, status="OK")
                yield StageHandle(progress, task_id)
                progress.update(task_id, completed=1)
            # Only the stage line stays once the stage is over.
            live.update(progress)
