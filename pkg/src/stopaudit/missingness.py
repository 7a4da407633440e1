"""Missingness matrix and conditional missingness rates.

A variable-level rate is the NA fraction of one target column among the
rows falling in each bin of a conditioning variable.  The dataset-level
rate averages those per-bin rates over a variable list.  Rates are carried
with their integer numerator and denominator so rational identities can be
asserted exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .binning import BinSpec, row_bins
from .errors import SchemaError
from .ingest import CORE_VARIABLES, StopTable


@dataclass(frozen=True)
class MissingnessMatrix:
    """Binary matrix with a 1 wherever the table cell is NA."""

    omega: np.ndarray


def missingness_matrix(table: StopTable) -> MissingnessMatrix:
    return MissingnessMatrix(omega=np.array(table.na_mask, dtype=bool, copy=True))


@dataclass(frozen=True)
class CMRPoint:
    """Missingness rate of one bin: ``na_cells`` NA out of ``cell_total``.

    ``bin_count`` is the number of rows in the bin; for variable-level
    series ``cell_total == bin_count``, for dataset-level series
    ``cell_total == bin_count * len(variables)``.
    """

    bin_id: str
    na_cells: int
    cell_total: int
    bin_count: int

    @property
    def rate(self) -> float:
        return self.na_cells / self.cell_total


@dataclass(frozen=True)
class CMRSeries:
    """Ordered per-bin missingness rates for one target and conditioning variable.

    ``target`` is a column name for variable-level series and ``"dataset"``
    for dataset-level ones.  Bins with no rows are absent.  ``unbinnable``
    counts rows whose conditioning value was NA.
    """

    conditioning_variable: str
    target: str
    spec: BinSpec
    points: tuple
    unbinnable: int = 0

    @property
    def bin_ids(self) -> tuple:
        return tuple(p.bin_id for p in self.points)

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points], dtype=float)


def _grouped_na_counts(assignment, mask_columns: Sequence[np.ndarray]):
    """Per-bin row counts and NA-cell counts summed over the mask columns.

    Returns (ordered bin ids, bin row counts, na counts) with bins sorted
    by key.
    """
    keys = assignment.keys
    valid_idx = [i for i, k in enumerate(keys) if k is not None]
    if not valid_idx:
        return [], np.array([], dtype=int), np.array([], dtype=int)
    valid_keys = np.array([keys[i] for i in valid_idx], dtype=object)
    bin_ids, inverse = np.unique(valid_keys, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(bin_ids))
    na_counts = np.zeros(len(bin_ids), dtype=int)
    idx = np.array(valid_idx, dtype=int)
    for mask in mask_columns:
        na_counts += np.bincount(
            inverse, weights=mask[idx].astype(float), minlength=len(bin_ids)
        ).astype(int)
    return list(bin_ids), counts, na_counts


def cmr(
    table: StopTable,
    target_var: str,
    cond_var: Optional[str],
    spec: BinSpec,
) -> CMRSeries:
    """Variable-level conditional missingness rate series.

    For each bin with at least one row, the rate is the fraction of rows in
    the bin whose target cell is NA.  Rows with an NA conditioning value are
    excluded and tallied as unbinnable.  ``cond_var`` is ignored for geohash
    bins, which condition on the latitude/longitude columns.
    """
    if spec.kind == "geohash":
        cond_var = None
    elif target_var == cond_var:
        raise SchemaError("target variable must differ from conditioning variable")
    table.schema(target_var)  # raises on unknown column
    assignment = row_bins(table, cond_var, spec)
    mask = table.na_column(target_var)
    bin_ids, counts, na_counts = _grouped_na_counts(assignment, [mask])
    points = tuple(
        CMRPoint(bin_id=b, na_cells=int(na), cell_total=int(c), bin_count=int(c))
        for b, c, na in zip(bin_ids, counts, na_counts)
    )
    return CMRSeries(
        conditioning_variable=assignment.label,
        target=target_var,
        spec=spec,
        points=points,
        unbinnable=assignment.unbinnable,
    )


def default_dcmr_variables(
    table: StopTable, cond_var: Optional[str], spec: Optional[BinSpec] = None
) -> list:
    """Core variables present in the table, minus the conditioning variable(s).

    Geohash bins condition on latitude and longitude jointly, so both are
    excluded in that case.
    """
    exclude = {cond_var} if cond_var else set()
    if spec is not None and spec.kind == "geohash":
        exclude.update(
            name
            for name in (table.column_of_kind("latitude"), table.column_of_kind("longitude"))
            if name
        )
    return [n for n in table.names if n in set(CORE_VARIABLES) and n not in exclude]


def dcmr(
    table: StopTable,
    cond_var: Optional[str],
    spec: BinSpec,
    variables: Optional[Sequence[str]] = None,
) -> CMRSeries:
    """Dataset-level conditional missingness rate series.

    The per-bin rate is the mean over ``variables`` of their variable-level
    rates in that bin, computed exactly as (total NA cells) divided by
    (len(variables) * bin row count).  ``variables`` defaults to the core
    variables present in the table, excluding the conditioning variable.
    """
    if variables is None:
        variables = default_dcmr_variables(table, cond_var, spec)
    variables = list(variables)
    if not variables:
        raise SchemaError("dcmr requires a non-empty variable list")
    if cond_var is not None and cond_var in variables:
        raise SchemaError("variable list must exclude the conditioning variable")
    for name in variables:
        table.schema(name)
    assignment = row_bins(table, None if spec.kind == "geohash" else cond_var, spec)
    masks = [table.na_column(name) for name in variables]
    bin_ids, counts, na_counts = _grouped_na_counts(assignment, masks)
    k = len(variables)
    points = tuple(
        CMRPoint(bin_id=b, na_cells=int(na), cell_total=int(c) * k, bin_count=int(c))
        for b, c, na in zip(bin_ids, counts, na_counts)
    )
    return CMRSeries(
        conditioning_variable=assignment.label,
        target="dataset",
        spec=spec,
        points=points,
        unbinnable=assignment.unbinnable,
    )
