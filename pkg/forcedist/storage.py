from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import CsvFormatError


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def write_text_atomic(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + ".tmp")
    temp_path.write_text(text, encoding="utf-8", newline="")
    temp_path.replace(path)
    return path


def write_bytes_atomic(path: Path, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + ".tmp")
    temp_path.write_bytes(payload)
    temp_path.replace(path)
    return path


def write_json(path: Path, data: Any) -> Path:
    return write_text_atomic(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> dict[str, Any]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"JSON document is not an object: {path}")
    return data


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return write_text_atomic(path, buffer.getvalue())


def format_float(value: float, digits: int = 17) -> str:
    return f"{float(value):.{digits}g}"


def read_csv_rows(path: Path, columns: Sequence[str]) -> list[tuple[int, dict[str, str]]]:
    """Read a headed CSV and return (row number, row) pairs.

    Row numbers count the header as row 1, matching what a spreadsheet shows.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration as exc:
            raise CsvFormatError(path, "missing header row") from exc
        missing = [name for name in columns if name not in header]
        if missing:
            raise CsvFormatError(
                path,
                f"header lacks column(s) {', '.join(missing)}; expected {','.join(columns)}",
                row=1,
            )
        rows: list[tuple[int, dict[str, str]]] = []
        for number, values in enumerate(reader, start=2):
            if not values or all(not v.strip() for v in values):
                continue
            if len(values) != len(header):
                raise CsvFormatError(
                    path,
                    f"expected {len(header)} fields, found {len(values)}",
                    row=number,
                )
            rows.append((number, dict(zip(header, (v.strip() for v in values)))))
    return rows


def csv_float(path: Path, number: int, row: dict[str, str], column: str) -> float:
    text = row[column]
    try:
        value = float(text)
    except ValueError as exc:
        raise CsvFormatError(path, f"not a number: {text!r}", row=number, column=column) from exc
    if not math.isfinite(value):
        raise CsvFormatError(path, f"not finite: {text!r}", row=number, column=column)
    return value


def csv_int(path: Path, number: int, row: dict[str, str], column: str) -> int:
    text = row[column]
    try:
        return int(text)
    except ValueError as exc:
        raise CsvFormatError(path, f"not an integer: {text!r}", row=number, column=column) from exc
