"""Loading delimited stop-record files under a declared schema.

Cells matching a configurable NA token set (case-insensitive, trimmed) are
masked, as are cells that fail to parse under their declared kind.  Parse
failures are additionally tallied per column so data corruption stays
distinguishable from recorded NA.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import date, time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import SchemaError

log = logging.getLogger(__name__)

COLUMN_KINDS = (
    "date",
    "time",
    "number",
    "category",
    "boolean",
    "latitude",
    "longitude",
    "text",
)

COLUMN_ROLES = ("conditioning-candidate", "analysis", "passthrough")

#: NA encodings vary across stop-record exports; this default covers the
#: common ones and is overridable per dataset.
DEFAULT_NA_TOKENS = frozenset({"", "NA", "N/A", "NULL", "null", "unknown"})

#: The twenty variables most commonly shared across stop-record datasets,
#: used as the default variable set for dataset-level missingness.
CORE_VARIABLES = (
    "date",
    "subject_race",
    "outcome",
    "location",
    "time",
    "subject_sex",
    "citation_issued",
    "subject_age",
    "latitude",
    "longitude",
    "warning_issued",
    "arrest_made",
    "search_conducted",
    "violation",
    "officer_id_hash",
    "contraband_found",
    "search_basis",
    "reason_for_stop",
    "county_name",
    "vehicle_make",
)

_TRUE_TOKENS = {"true", "t", "1", "yes", "y"}
_FALSE_TOKENS = {"false", "f", "0", "no", "n"}


@dataclass(frozen=True)
class ColumnSchema:
    """Declared name, kind and analysis role of one input column."""

    name: str
    kind: str
    role: str = "analysis"

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.role not in COLUMN_ROLES:
            raise SchemaError(f"unknown column role {self.role!r} for {self.name!r}")


def _validate_schema(schema: Sequence[ColumnSchema]) -> None:
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise SchemaError("schema column names must be unique")
    for kind in ("latitude", "longitude"):
        if sum(1 for c in schema if c.kind == kind) > 1:
            raise SchemaError(f"at most one {kind} column allowed")


def _parse_date(token: str):
    return date.fromisoformat(token)


def _parse_time(token: str):
    return time.fromisoformat(token)


def _parse_number(token: str):
    value = float(token)
    if not math.isfinite(value):
        raise ValueError("non-finite number")
    return value


def _parse_latitude(token: str):
    value = _parse_number(token)
    if not -90.0 <= value <= 90.0:
        raise ValueError("latitude out of range")
    return value


def _parse_longitude(token: str):
    value = _parse_number(token)
    if not -180.0 <= value <= 180.0:
        raise ValueError("longitude out of range")
    return value


def _parse_boolean(token: str):
    lowered = token.casefold()
    if lowered in _TRUE_TOKENS:
        return True
    if lowered in _FALSE_TOKENS:
        return False
    raise ValueError("not a boolean token")


_PARSERS = {
    "date": _parse_date,
    "time": _parse_time,
    "number": _parse_number,
    "latitude": _parse_latitude,
    "longitude": _parse_longitude,
    "boolean": _parse_boolean,
    "category": str,
    "text": str,
}


class StopTable:
    """Columnar, immutable view of one loaded stop-record dataset.

    Values are kept per column; ``na_mask[i, j]`` is True iff cell (i, j)
    carried an NA token or failed type parsing.  Instances never mutate
    after construction and are safe to share across threads.
    """

    __slots__ = ("_schemas", "_columns", "_na_mask", "_coercion_failures")

    def __init__(
        self,
        schemas: Sequence[ColumnSchema],
        columns: Sequence[np.ndarray],
        na_mask: np.ndarray,
        coercion_failures: Optional[dict] = None,
    ):
        _validate_schema(schemas)
        if len(schemas) != len(columns):
            raise SchemaError("one value vector required per schema column")
        n = len(columns[0]) if columns else 0
        for schema, col in zip(schemas, columns):
            if len(col) != n:
                raise SchemaError(f"column {schema.name!r} has mismatched length")
        mask = np.asarray(na_mask, dtype=bool)
        if mask.shape != (n, len(schemas)):
            raise SchemaError(
                f"na_mask shape {mask.shape} does not match {(n, len(schemas))}"
            )
        self._schemas = tuple(schemas)
        cols = []
        for col in columns:
            arr = np.asarray(col)
            arr.setflags(write=False)
            cols.append(arr)
        self._columns = tuple(cols)
        mask = mask.copy()
        mask.setflags(write=False)
        self._na_mask = mask
        self._coercion_failures = dict(coercion_failures or {})

    @property
    def n(self) -> int:
        return 0 if not self._columns else len(self._columns[0])

    @property
    def m(self) -> int:
        return len(self._schemas)

    @property
    def schemas(self) -> tuple:
        return self._schemas

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self._schemas)

    @property
    def na_mask(self) -> np.ndarray:
        return self._na_mask

    @property
    def coercion_failures(self) -> dict:
        return dict(self._coercion_failures)

    def _index(self, name: str) -> int:
        for i, schema in enumerate(self._schemas):
            if schema.name == name:
                return i
        raise SchemaError(f"unknown column {name!r}")

    def schema(self, name: str) -> ColumnSchema:
        return self._schemas[self._index(name)]

    def values(self, name: str) -> np.ndarray:
        return self._columns[self._index(name)]

    def na_column(self, name: str) -> np.ndarray:
        return self._na_mask[:, self._index(name)]

    def column_of_kind(self, kind: str) -> Optional[str]:
        for schema in self._schemas:
            if schema.kind == kind:
                return schema.name
        return None

    def subset(self, names: Sequence[str]) -> "StopTable":
        """View with only the given columns, in this table's order."""
        keep = [i for i, s in enumerate(self._schemas) if s.name in set(names)]
        schemas = [self._schemas[i] for i in keep]
        columns = [self._columns[i] for i in keep]
        mask = self._na_mask[:, keep] if keep else np.zeros((self.n, 0), dtype=bool)
        failures = {
            s.name: self._coercion_failures[s.name]
            for s in schemas
            if s.name in self._coercion_failures
        }
        return StopTable(schemas, columns, mask, failures)

    def __repr__(self):
        return f"StopTable(n={self.n}, m={self.m}, columns={list(self.names)})"


@dataclass(frozen=True)
class VariableMissingSummary:
    """Per-variable missingness fraction; ``pct_missing`` is None when n=0."""

    variable: str
    pct_missing: Optional[float]
    n_total: int


@dataclass(frozen=True)
class IngestConfig:
    """Schema plus parse options, as read from a TOML/JSON config file."""

    columns: tuple
    na_tokens: frozenset = DEFAULT_NA_TOKENS
    delimiter: str = ","


def _normalize_tokens(na_tokens: Iterable[str]) -> frozenset:
    return frozenset(tok.strip().casefold() for tok in na_tokens)


def load_table(
    path,
    schema: Sequence[ColumnSchema],
    na_tokens: Iterable[str] = DEFAULT_NA_TOKENS,
    delimiter: str = ",",
) -> StopTable:
    """Load a delimited text file with a header row into a StopTable.

    Only columns named in ``schema`` are kept.  Cells equal to an NA token
    (case-insensitive, trimmed) or failing their declared kind are masked.
    Row order is preserved.

    Raises SchemaError if the header lacks a schema column or contains
    duplicates, FileNotFoundError if the file is absent.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    _validate_schema(schema)
    tokens = _normalize_tokens(na_tokens)

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file has no header row")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate header names")
        positions = {name: i for i, name in enumerate(header)}
        missing = [c.name for c in schema if c.name not in positions]
        if missing:
            raise SchemaError(f"missing column(s) in header: {', '.join(missing)}")

        parsers = [_PARSERS[c.kind] for c in schema]
        indices = [positions[c.name] for c in schema]
        values = [[] for _ in schema]
        mask_rows = []
        failures = {c.name: 0 for c in schema}

        for row in reader:
            mask_row = []
            for j, (parser, idx, col_schema) in enumerate(
                zip(parsers, indices, schema)
            ):
                raw = row[idx] if idx < len(row) else ""
                if raw.strip().casefold() in tokens:
                    values[j].append(None)
                    mask_row.append(True)
                    continue
                try:
                    parsed = parser(raw.strip())
                except (ValueError, TypeError):
                    values[j].append(None)
                    mask_row.append(True)
                    failures[col_schema.name] += 1
                else:
                    values[j].append(parsed)
                    mask_row.append(False)
            mask_rows.append(mask_row)

    n = len(mask_rows)
    columns = []
    for col_schema, vals in zip(schema, values):
        if col_schema.kind in ("number", "latitude", "longitude"):
            arr = np.array(
                [v if v is not None else np.nan for v in vals], dtype=float
            )
        else:
            arr = np.empty(n, dtype=object)
            arr[:] = vals
        columns.append(arr)
    mask = (
        np.array(mask_rows, dtype=bool)
        if mask_rows
        else np.zeros((0, len(schema)), dtype=bool)
    )
    return StopTable(schema, columns, mask, failures)


def core_variable_subset(table: StopTable, core_list: Sequence[str]) -> StopTable:
    """Restrict a table to the core variable list; absent names are skipped.

    Raises SchemaError when no column survives.
    """
    if not core_list:
        raise SchemaError("core_list must be non-empty")
    present = set(table.names)
    skipped = [name for name in core_list if name not in present]
    if skipped:
        log.warning("core variables absent from table, skipped: %s", skipped)
    survivors = [name for name in table.names if name in set(core_list)]
    if not survivors:
        raise SchemaError("zero surviving columns")
    return table.subset(survivors)


def per_variable_missing_summary(table: StopTable) -> list:
    """One VariableMissingSummary per column, in schema order."""
    out = []
    for j, schema in enumerate(table.schemas):
        if table.n == 0:
            pct = None
        else:
            pct = int(table.na_mask[:, j].sum()) / table.n
        out.append(VariableMissingSummary(schema.name, pct, table.n))
    return out


def read_config(path) -> IngestConfig:
    """Read schema + NA tokens + delimiter from a TOML or JSON config file.

    Expected keys: ``columns`` (list of {name, kind, role}), ``na_tokens``
    (list of strings) and ``delimiter``.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    else:
        with path.open(encoding="utf-8") as handle:
            raw = json.load(handle)
    if "columns" not in raw or not raw["columns"]:
        raise SchemaError("config must declare a non-empty 'columns' list")
    columns = tuple(
        ColumnSchema(
            name=spec["name"],
            kind=spec["kind"],
            role=spec.get("role", "analysis"),
        )
        for spec in raw["columns"]
    )
    _validate_schema(columns)
    na_tokens = frozenset(raw.get("na_tokens", DEFAULT_NA_TOKENS))
    delimiter = raw.get("delimiter", ",")
    return IngestConfig(columns=columns, na_tokens=na_tokens, delimiter=delimiter)
