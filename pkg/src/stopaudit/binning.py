"""Mapping conditioning-variable values onto discrete bins.

Supported bins: calendar day, ISO-8601 week (Monday start), hour of day,
and base-32 geohash cells.  Bin keys are strings that sort lexicographically
in their natural order within one bin kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, time
from typing import Optional, Tuple

import numpy as np

from .errors import BinningError

GEOHASH_ALPHABET = "0123456789bcdefghjkmnpqrstuvwxyz"
_GEOHASH_INDEX = {ch: i for i, ch in enumerate(GEOHASH_ALPHABET)}

BIN_KINDS = ("day", "week", "hour", "geohash")


@dataclass(frozen=True)
class BinSpec:
    """Choice of bin kind; geohash_precision applies to geohash only."""

    kind: str
    geohash_precision: int = 6

    def __post_init__(self):
        if self.kind not in BIN_KINDS:
            raise BinningError(f"unknown bin kind {self.kind!r}")
        if not 1 <= self.geohash_precision <= 12:
            raise BinningError("geohash_precision must be in [1, 12]")


def iso_week_key(value: date) -> str:
    year, week, _ = value.isocalendar()
    return f"{year:04d}-W{week:02d}"


def bin_value(value, spec: BinSpec) -> str:
    """Deterministic bin key for one non-NA value.

    ``value`` must be a date for day/week, a time for hour, and a
    (lat, lon) pair for geohash.  Raises BinningError on NA or kind
    mismatch.
    """
    if value is None:
        raise BinningError("NA input")
    if spec.kind == "day":
        if not isinstance(value, date):
            raise BinningError("day binning requires a date value")
        return value.isoformat()
    if spec.kind == "week":
        if not isinstance(value, date):
            raise BinningError("week binning requires a date value")
        return iso_week_key(value)
    if spec.kind == "hour":
        if not isinstance(value, time):
            raise BinningError("hour binning requires a time value")
        return f"{value.hour:02d}"
    # geohash
    try:
        lat, lon = value
    except (TypeError, ValueError):
        raise BinningError("geohash binning requires a (lat, lon) pair")
    if lat is None or lon is None or math.isnan(lat) or math.isnan(lon):
        raise BinningError("NA input")
    return geohash_encode(float(lat), float(lon), spec.geohash_precision)


def geohash_encode(lat: float, lon: float, precision: int = 6) -> str:
    """Standard base-32 geohash: interleaved bit subdivision, longitude first."""
    if not -90.0 <= lat <= 90.0:
        raise BinningError("latitude out of range")
    if not -180.0 <= lon <= 180.0:
        raise BinningError("longitude out of range")
    if not 1 <= precision <= 12:
        raise BinningError("precision must be in [1, 12]")
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    chars = []
    bits = 0
    bit_count = 0
    even = True
    while len(chars) < precision:
        if even:
            mid = (lon_lo + lon_hi) / 2
            if lon >= mid:
                bits = (bits << 1) | 1
                lon_lo = mid
            else:
                bits = bits << 1
                lon_hi = mid
        else:
            mid = (lat_lo + lat_hi) / 2
            if lat >= mid:
                bits = (bits << 1) | 1
                lat_lo = mid
            else:
                bits = bits << 1
                lat_hi = mid
        even = not even
        bit_count += 1
        if bit_count == 5:
            chars.append(GEOHASH_ALPHABET[bits])
            bits = 0
            bit_count = 0
    return "".join(chars)


def geohash_bounds(key: str) -> Tuple[float, float, float, float]:
    """(lat_lo, lat_hi, lon_lo, lon_hi) of a geohash cell."""
    if not key:
        raise BinningError("empty geohash")
    lat_lo, lat_hi = -90.0, 90.0
    lon_lo, lon_hi = -180.0, 180.0
    even = True
    for ch in key:
        try:
            value = _GEOHASH_INDEX[ch]
        except KeyError:
            raise BinningError(f"invalid geohash character {ch!r}")
        for shift in range(4, -1, -1):
            bit = (value >> shift) & 1
            if even:
                mid = (lon_lo + lon_hi) / 2
                if bit:
                    lon_lo = mid
                else:
                    lon_hi = mid
            else:
                mid = (lat_lo + lat_hi) / 2
                if bit:
                    lat_lo = mid
                else:
                    lat_hi = mid
            even = not even
    return lat_lo, lat_hi, lon_lo, lon_hi


def geohash_decode(key: str) -> Tuple[float, float]:
    """Cell-center (lat, lon) of a geohash."""
    lat_lo, lat_hi, lon_lo, lon_hi = geohash_bounds(key)
    return (lat_lo + lat_hi) / 2, (lon_lo + lon_hi) / 2


@dataclass(frozen=True)
class BinAssignment:
    """Row-to-bin keys for one table and spec.

    ``keys`` holds one bin key per row, with None for rows whose
    conditioning value is NA (those are excluded from every bin and
    counted in ``unbinnable``).
    """

    label: str
    keys: tuple
    unbinnable: int


_KIND_FOR_BIN = {"day": "date", "week": "date", "hour": "time"}


def row_bins(table, cond_var: Optional[str], spec: BinSpec) -> BinAssignment:
    """Assign every table row to a bin of ``spec``.

    For day/week/hour bins ``cond_var`` names the conditioning column and
    must have the matching kind.  For geohash bins the table's latitude and
    longitude columns are used and ``cond_var`` is ignored.
    """
    if spec.kind == "geohash":
        lat_name = table.column_of_kind("latitude")
        lon_name = table.column_of_kind("longitude")
        if lat_name is None or lon_name is None:
            raise BinningError("geohash binning requires latitude and longitude columns")
        lats = table.values(lat_name)
        lons = table.values(lon_name)
        na = table.na_column(lat_name) | table.na_column(lon_name)
        keys = []
        for i in range(table.n):
            if na[i]:
                keys.append(None)
            else:
                keys.append(
                    geohash_encode(float(lats[i]), float(lons[i]), spec.geohash_precision)
                )
        return BinAssignment(f"{lat_name}+{lon_name}", tuple(keys), int(na.sum()))

    if cond_var is None:
        raise BinningError("conditioning variable required for non-geohash bins")
    schema = table.schema(cond_var)
    wanted = _KIND_FOR_BIN[spec.kind]
    if schema.kind != wanted:
        raise BinningError(
            f"{spec.kind} binning requires a {wanted} column, "
            f"{cond_var!r} has kind {schema.kind!r}"
        )
    values = table.values(cond_var)
    na = table.na_column(cond_var)
    keys = []
    for i in range(table.n):
        if na[i]:
            keys.append(None)
        else:
            keys.append(bin_value(values[i], spec))
    return BinAssignment(cond_var, tuple(keys), int(np.count_nonzero(na)))
