"""Exception types shared across the package."""

from __future__ import annotations


class PolitenessKitError(Exception):
    """Base class for errors raised on bad input data or misuse."""


class DataFormatError(PolitenessKitError):
    """A data file could not be parsed; carries file and line context."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class LexiconError(PolitenessKitError):
    """A lexicon file is missing, unreadable or empty."""
