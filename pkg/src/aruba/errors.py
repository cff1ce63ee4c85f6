"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto the
0 / 1 / 2 contract without a lookup table: configuration problems are usage
errors (2), everything else about the data is a data error (1).
"""

from __future__ import annotations


class ArubaError(Exception):
    exit_code = 1

    def details(self) -> dict:
        return {}


class ConfigError(ArubaError, ValueError):
    """Invalid hyperparameter or option value."""

    exit_code = 2


class ParseError(ArubaError):
    """Document is not syntactically valid (e.g. malformed JSON)."""

    def __init__(self, message: str, path: str | None = None, byte_offset: int | None = None):
        super().__init__(message)
        self.path = path
        self.byte_offset = byte_offset

    def details(self) -> dict:
        return {"path": self.path, "byte_offset": self.byte_offset}


class SchemaError(ArubaError):
    """A required key is missing or has the wrong type."""

    def __init__(self, message: str, key: str, annotation_id=None, path: str | None = None):
        super().__init__(message)
        self.key = key
        self.annotation_id = annotation_id
        self.path = path

    def details(self) -> dict:
        return {"key": self.key, "annotation_id": self.annotation_id, "path": self.path}


class RecordError(ArubaError):
    """A single annotation record is invalid."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None,
                 annotation_id=None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.annotation_id = annotation_id

    def details(self) -> dict:
        return {"path": self.path, "line": self.line, "annotation_id": self.annotation_id}


class EmptyDatasetError(ArubaError):
    pass


class EmptyClusterError(ArubaError):
    pass


class DivergenceError(ArubaError):
    def __init__(self, message: str, learning_rate: float):
        super().__init__(message)
        self.learning_rate = learning_rate

    def details(self) -> dict:
        return {"learning_rate": self.learning_rate}
