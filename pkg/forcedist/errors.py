from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class ForcedistError(ValueError):
    pass


class ParameterDomainError(ForcedistError):
    pass


class GeometryError(ForcedistError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class SchemaError(ForcedistError):
    pass


class ConfigurationError(ForcedistError):
    pass


class InputError(ForcedistError):
    pass


class SceneError(ForcedistError):
    pass


class PairingError(ForcedistError):
    def __init__(self, offenders: Iterable[str], label: str = "indentation ids"):
        self.offenders = tuple(sorted(str(x) for x in offenders))
        shown = ", ".join(self.offenders[:10])
        more = "" if len(self.offenders) <= 10 else f" (+{len(self.offenders) - 10} more)"
        super().__init__(f"unmatched {label}: {shown}{more}")


class CsvFormatError(ForcedistError):
    def __init__(
        self,
        path: str | Path,
        message: str,
        *,
        row: int | None = None,
        column: str | None = None,
    ):
        self.path = str(path)
        self.row = row
        self.column = column
        where = self.path
        if row is not None:
            where += f" row {row}"
        if column is not None:
            where += f" column [{column}]"
        super().__init__(f"{where}: {message}")


class OptimizationError(RuntimeError):
    def __init__(self, message: str, diagnostics: list[dict[str, Any]] | None = None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)
