"""Progress presentation utilities."""

from __future__ import annotations

import logging
import os
import shutil
import sys
from typing import Sequence

_BLUE = "\033[34m"
_RED = "\033[31m"
_GREEN = "\033[32m"
_YELLOW = "\033[33m"
_MAGENTA = "\033[35m"
_CYAN = "\033[36m"
_RESET = "\033[0m"

_PALETTE = (_BLUE, _GREEN, _MAGENTA, _CYAN, _YELLOW, _RED)


def _supports_color() -> bool:
    return sys.stderr.isatty() and os.environ.get("NO_COLOR") is None


_COLOR_ENABLED = _supports_color()


def _get_terminal_width() -> int:
    """Get the current terminal width, with fallback to 100."""
    try:
        return shutil.get_terminal_size(fallback=(100, 24)).columns
    except (OSError, ValueError):
        return 100


def _truncate_to_fit(text: str, max_width: int | None = None) -> str:
    """Truncate text to ``max_width`` (terminal width by default), ending in '...'."""
    if max_width is None:
        max_width = _get_terminal_width()

    # ANSI colour codes take no visual space
    effective_length = len(text) - text.count("\033[") * 5 if "\033[" in text else len(text)
    if effective_length <= max_width:
        return text
    cut_at = max(max_width - 3, 1)
    if cut_at > 20:
        last_space = text[:cut_at].rfind(" ")
        if last_space > cut_at - 20:
            cut_at = last_space
    return text[:cut_at] + "..."


class _ColorCycle:
    """Hands out palette colours in a fixed order so logs are reproducible."""

    def __init__(self, palette: Sequence[str]) -> None:
        self._palette = tuple(palette)
        self._position = 0

    def next(self) -> str:
        color = self._palette[self._position % len(self._palette)]
        self._position += 1
        return color


_COLORS = _ColorCycle(_PALETTE)


def next_progress_color() -> str:
    return _COLORS.next()


def _paint(text: str, *, color: str | None = None) -> str:
    if not _COLOR_ENABLED or color is None:
        return text
    return f"{color}{text}{_RESET}"


def format_progress(
    current: int, total: int, *, width: int = 20, color: str | None = None
) -> str:
    safe_total = max(total, 1)
    safe_current = max(0, min(current, safe_total))
    ratio = safe_current / safe_total
    filled = int(ratio * width)
    if safe_current > 0 and filled == 0:
        filled = 1
    bar = "#" * filled + "-" * (width - filled)
    percent = int(round(ratio * 100))
    return f"{_paint('[' + bar + ']', color=color)} {percent:3d}% ({safe_current}/{safe_total})"


class ProgressTracker:
    """Emit progress log lines for a loop of known length."""

    def __init__(
        self,
        total: int,
        *,
        width: int = 20,
        color: str | None = None,
        indent: int = 0,
        prefix: str = "",
    ) -> None:
        self.total = max(int(total), 1)
        self.width = width
        self.current = 0
        if color is None and _COLOR_ENABLED:
            color = next_progress_color()
        self.color = color
        self._indent = max(0, int(indent))
        self._prefix = prefix

    def _emit(self, logger: logging.Logger, message: str) -> None:
        bar = format_progress(self.current, self.total, width=self.width, color=self.color)
        text = f"{' ' * self._indent}{self._prefix}{bar} {message}"
        logger.info(_truncate_to_fit(text))

    def log(self, logger: logging.Logger, message: str) -> None:
        self._emit(logger, message)

    def advance(
        self, logger: logging.Logger, message: str, *, steps: int = 1, absolute: int | None = None
    ) -> None:
        if absolute is not None:
            self.current = max(0, min(self.total, absolute))
        else:
            self.current = max(0, min(self.total, self.current + steps))
        self._emit(logger, message)

    def complete(self, logger: logging.Logger, message: str) -> None:
        self.current = self.total
        self._emit(logger, message)


def log_summary(
    log_fn, label: str, items: Sequence[object], *, limit: int = 5
) -> None:
    """Log ``label`` followed by at most ``limit`` items and a remainder count."""
    if not items:
        return
    log_fn("%s (%d):", label, len(items))
    for item in items[:limit]:
        log_fn("  - %s", item)
    remaining = len(items) - limit
    if remaining > 0:
        log_fn("  ... %d more", remaining)


__all__ = [
    "format_progress",
    "ProgressTracker",
    "next_progress_color",
    "log_summary",
]
