"""Synthetic stop tables with controlled missingness mechanisms.

Complete values are drawn first, then a mask is applied per mechanism:

* ``mcar(p)``  - every target cell is masked i.i.d. with probability p.
* ``mar``      - the target column is masked with probability
  ``logistic(intercept + slope * driver)`` where the driver is a fully
  observed column (week position for dates, hour fraction for times).
* ``mnar``     - subject race is masked at a rate depending on the race
  value itself.

The unmasked shadow table is returned alongside the masked one so any
diagnostic can be scored against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, time, timedelta
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import StopAuditError
from .ingest import ColumnSchema, StopTable

MECHANISMS = ("mcar", "mar", "mnar")

#: Columns of every generated table, in order.
SYNTH_COLUMNS = (
    ColumnSchema("date", "date", "conditioning-candidate"),
    ColumnSchema("time", "time", "conditioning-candidate"),
    ColumnSchema("subject_race", "category", "analysis"),
    ColumnSchema("searched", "boolean", "analysis"),
    ColumnSchema("contraband", "boolean", "analysis"),
)

_MASKABLE = ("time", "subject_race", "searched", "contraband")

_RACES = ("white", "black", "hispanic", "asian")
_RACE_PROBS = (0.55, 0.25, 0.15, 0.05)
_SEARCH_RATE = 0.08
_CONTRABAND_GIVEN_SEARCH = 0.3

#: First Monday of the generated date range.
_START_MONDAY = date(2016, 1, 4)


@dataclass(frozen=True)
class MechanismSpec:
    """Mechanism kind plus its parameters, row count and seed."""

    kind: str
    n: int
    seed: int
    p: float = 0.3
    targets: Optional[Sequence[str]] = None
    driver: str = "date"
    slope: float = 4.0
    intercept: float = -2.0
    rates: Optional[Mapping[str, float]] = None
    weeks: int = 50

    def __post_init__(self):
        if self.kind not in MECHANISMS:
            raise StopAuditError(f"unknown mechanism {self.kind!r}")
        if self.n < 0:
            raise StopAuditError("n must be >= 0")
        if self.weeks < 1:
            raise StopAuditError("weeks must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise StopAuditError("p must be in [0, 1]")
        if self.rates is not None:
            for race, rate in self.rates.items():
                if not 0.0 <= rate <= 1.0:
                    raise StopAuditError(f"mask rate for {race!r} must be in [0, 1]")
        if self.targets is not None:
            unknown = set(self.targets) - set(_MASKABLE)
            if unknown:
                raise StopAuditError(f"unmaskable target(s): {sorted(unknown)}")
        if self.kind == "mar" and self.targets and self.driver in self.targets:
            raise StopAuditError("mar driver must stay fully observed")


@dataclass(frozen=True)
class SynthResult:
    """Masked table plus the complete shadow it was derived from."""

    table: StopTable
    shadow: StopTable


def _logistic(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _complete_values(spec: MechanismSpec, rng: np.random.Generator):
    n, weeks = spec.n, spec.weeks
    week_of_row = (np.arange(n) * weeks) // max(n, 1)
    day_offset = rng.integers(0, 7, size=n)
    dates = np.empty(n, dtype=object)
    for i in range(n):
        dates[i] = _START_MONDAY + timedelta(
            days=int(week_of_row[i]) * 7 + int(day_offset[i])
        )
    seconds = rng.integers(0, 86400, size=n)
    times = np.empty(n, dtype=object)
    for i in range(n):
        s = int(seconds[i])
        times[i] = time(s // 3600, (s % 3600) // 60, s % 60)
    races = rng.choice(np.array(_RACES, dtype=object), size=n, p=_RACE_PROBS)
    searched = rng.random(n) < _SEARCH_RATE
    contraband = searched & (rng.random(n) < _CONTRABAND_GIVEN_SEARCH)
    columns = {
        "date": dates,
        "time": times,
        "subject_race": races,
        "searched": searched.astype(object),
        "contraband": contraband.astype(object),
    }
    return columns, week_of_row


def _driver_position(spec: MechanismSpec, columns, week_of_row) -> np.ndarray:
    """Driver value normalized to [0, 1]."""
    if spec.driver == "date":
        span = max(spec.weeks - 1, 1)
        return week_of_row / span
    if spec.driver == "time":
        hours = np.array([t.hour for t in columns["time"]], dtype=float)
        return hours / 23.0
    raise StopAuditError(f"unsupported driver {spec.driver!r}")


def generate(spec: MechanismSpec) -> SynthResult:
    """Generate a masked StopTable and its complete shadow."""
    rng = np.random.default_rng(spec.seed)
    columns, week_of_row = _complete_values(spec, rng)
    n = spec.n
    mask = {name: np.zeros(n, dtype=bool) for name in _MASKABLE}

    if spec.kind == "mcar":
        targets = tuple(spec.targets) if spec.targets is not None else _MASKABLE
        for name in targets:
            mask[name] = rng.random(n) < spec.p
    elif spec.kind == "mar":
        targets = tuple(spec.targets) if spec.targets is not None else ("subject_race",)
        position = _driver_position(spec, columns, week_of_row)
        prob = _logistic(spec.intercept + spec.slope * position)
        for name in targets:
            mask[name] = rng.random(n) < prob
    else:  # mnar: race-value-dependent masking of the race column
        rates = dict(spec.rates or {"black": 0.4, "white": 0.1})
        prob = np.array(
            [rates.get(str(race), 0.0) for race in columns["subject_race"]]
        )
        mask["subject_race"] = rng.random(n) < prob

    shadow_cols = [columns[s.name] for s in SYNTH_COLUMNS]
    zero_mask = np.zeros((n, len(SYNTH_COLUMNS)), dtype=bool)
    shadow = StopTable(SYNTH_COLUMNS, shadow_cols, zero_mask)

    masked_cols = []
    mask_matrix = np.zeros((n, len(SYNTH_COLUMNS)), dtype=bool)
    for j, schema in enumerate(SYNTH_COLUMNS):
        col = columns[schema.name].copy()
        if schema.name in mask:
            col_mask = mask[schema.name]
            col[col_mask] = None
            mask_matrix[:, j] = col_mask
        masked_cols.append(col)
    table = StopTable(SYNTH_COLUMNS, masked_cols, mask_matrix)
    return SynthResult(table=table, shadow=shadow)
