"""Deterministic CSV and JSON output of result tables.

A table is a named sequence of rows of one pydantic model. Columns follow
the model's field order (aliases used as names); an optional column that
is None in every row is left out, and remaining None values are written
as empty CSV cells or JSON nulls. Floats are written with `repr`, so re-reading a CSV
reproduces the table exactly.

Every file embeds the resolved configuration: CSV files start with a
`# ` comment line holding it as JSON, JSON documents keep it under
`config`. Each table also gets a `<name>.schema.json` JSON schema.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Literal, TypeVar

import numpy as np
from expression.collections import Block
from expression.extra.result import catch
from pydantic import BaseModel

from lshmc.sampler.driver import ChainResult


logger = logging.getLogger(__name__)

_TModel = TypeVar("_TModel", bound=BaseModel)

Format = Literal["csv", "json"]


def _columns(model: type[BaseModel], rows: Sequence[BaseModel]) -> list[tuple[str, str]]:
    """(attribute, column name) pairs of the columns to write.

    Only fields with a default may be dropped, so every written table still
    validates against its row model.
    """
    columns: list[tuple[str, str]] = []
    for name, info in model.model_fields.items():
        if info.is_required() or any(getattr(row, name) is not None for row in rows):
            columns.append((name, info.alias or name))
    return columns


def _cell(value: Any) -> str:
    match value:
        case None:
            return ""
        case bool():
            return "true" if value else "false"
        case float():
            return repr(value)
        case _:
            return str(value)


def _provenance_line(provenance: Mapping[str, Any]) -> str:
    return "# " + json.dumps(provenance, sort_keys=True, separators=(",", ":")) + "\n"


def table_csv(rows: Sequence[BaseModel], provenance: Mapping[str, Any]) -> str:
    if not rows:
        raise ValueError("cannot write an empty table")
    columns = _columns(type(rows[0]), rows)
    buffer = io.StringIO()
    buffer.write(_provenance_line(provenance))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([column for _, column in columns])
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name, _ in columns])
    return buffer.getvalue()


def table_json(rows: Sequence[BaseModel], provenance: Mapping[str, Any]) -> str:
    if not rows:
        raise ValueError("cannot write an empty table")
    columns = _columns(type(rows[0]), rows)
    keep = {column for _, column in columns}
    records = [
        {key: value for key, value in row.model_dump(mode="json", by_alias=True).items() if key in keep}
        for row in rows
    ]
    return json.dumps({"config": dict(provenance), "rows": records}, indent=2) + "\n"


def table_schema(model: type[BaseModel]) -> dict[str, Any]:
    """JSON schema of a JSON table document with rows of `model`."""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": model.__name__ + "Table",
        "type": "object",
        "required": ["config", "rows"],
        "properties": {
            "config": {"type": "object"},
            "rows": {"type": "array", "items": model.model_json_schema(by_alias=True)},
        },
    }


def _write(path: Path, text: str) -> Path:
    with path.open("w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)
    logger.debug("wrote %s", path)
    return path


@catch(exception=OSError)
def emit_report(
    tables: Mapping[str, Sequence[BaseModel]], out_dir: Path, fmt: Format, provenance: Mapping[str, Any]
) -> list[Path]:
    """Write `<name>.<fmt>` and `<name>.schema.json` for every table.

    Returns:
        The written paths, or `Error(OSError)` naming the path that could
        not be written.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name, rows in tables.items():
        text = table_csv(rows, provenance) if fmt == "csv" else table_json(rows, provenance)
        written.append(_write(out_dir / f"{name}.{fmt}", text))
        schema = json.dumps(table_schema(type(rows[0])), indent=2) + "\n"
        written.append(_write(out_dir / f"{name}.schema.json", schema))
    return written


@catch(exception=OSError)
def write_document(path: Path, payload: Mapping[str, Any], provenance: Mapping[str, Any]) -> Path:
    """A single JSON object with the configuration under `config`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    return _write(path, json.dumps({"config": dict(provenance), **payload}, indent=2) + "\n")


def read_csv_table(text: str, model: type[_TModel]) -> Block[_TModel]:
    """Parse a table written by `emit_report` back into rows of `model`.

    Empty cells read as None.
    """
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.DictReader(lines)
    return Block(
        model.model_validate({key: (None if value == "" else value) for key, value in record.items()})
        for record in reader
    )


def chains_csv(chains: Sequence[ChainResult], provenance: Mapping[str, Any]) -> str:
    """Recorded iterates as `chain,iter,accept,delta_H,x_0,...,x_{d-1}`.

    `accept` and `delta_H` describe the step that produced the recorded
    iterate and are empty for iteration 0.
    """
    dim = chains[0].samples.shape[1] if chains else 0
    buffer = io.StringIO()
    buffer.write(_provenance_line(provenance))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["chain", "iter", "accept", "delta_H", *(f"x_{i}" for i in range(dim))])
    for chain in chains:
        for it, x in zip(chain.iterations.tolist(), chain.samples):
            if it == 0:
                step = ["", ""]
            else:
                step = [str(int(chain.accept_flags[it - 1])), repr(float(chain.delta_h[it - 1]))]
            writer.writerow([str(chain.chain), str(it), *step, *(repr(float(v)) for v in np.asarray(x))])
    return buffer.getvalue()


@catch(exception=OSError)
def write_chains(chains: Sequence[ChainResult], path: Path, provenance: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return _write(path, chains_csv(chains, provenance))


@catch(exception=OSError)
def write_draws(draws: np.ndarray[Any, Any], path: Path, provenance: Mapping[str, Any]) -> Path:
    """Independent draws of shape (n, d) as `replicate,x_0,...,x_{d-1}`."""
    buffer = io.StringIO()
    buffer.write(_provenance_line(provenance))
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["replicate", *(f"x_{i}" for i in range(draws.shape[1]))])
    for i, x in enumerate(draws):
        writer.writerow([str(i), *(repr(float(v)) for v in x)])
    path.parent.mkdir(parents=True, exist_ok=True)
    return _write(path, buffer.getvalue())


__all__ = [
    "Format",
    "chains_csv",
    "emit_report",
    "read_csv_table",
    "table_csv",
    "table_json",
    "table_schema",
    "write_chains",
    "write_document",
    "write_draws",
]
