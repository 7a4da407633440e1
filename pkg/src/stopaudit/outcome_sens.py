"""Outcome-test disparity and its sensitivity to missing race labels.

The disparity is the Black contraband hit rate minus the white hit rate
among searched drivers; a negative value indicates discrimination against
Black drivers.  Sensitivity enumerates every allocation of the NA-race
searched drivers to the two groups and asks whether the disparity sign can
switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ExclusionError
from .ingest import StopTable

#: Enumeration guard: counties with more allocations than this are thinned
#: to a corner-preserving grid.
DEFAULT_ALLOCATION_CAP = 1_000_000

CLASS_REMAINS_NEG = "remains(-)"
CLASS_REMAINS_POS = "remains(+)"
CLASS_SWITCH_NEG_TO_POS = "(-)->(+) possible"
CLASS_SWITCH_POS_TO_NEG = "(+)->(-) possible"
CLASS_BOUNDARY = "boundary"
CLASS_EXCLUDED = "excluded"


@dataclass(frozen=True)
class RaceOutcomeCounts:
    """Searched-driver contraband counts for one county/department.

    ``na_hit`` / ``na_miss`` are the NA-race searched drivers with and
    without contraband.
    """

    group_id: str
    black_hit: int
    black_miss: int
    white_hit: int
    white_miss: int
    na_hit: int
    na_miss: int

    def __post_init__(self):
        for name in ("black_hit", "black_miss", "white_hit", "white_miss", "na_hit", "na_miss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def black_searched(self) -> int:
        return self.black_hit + self.black_miss

    @property
    def white_searched(self) -> int:
        return self.white_hit + self.white_miss

    @property
    def na_searched(self) -> int:
        return self.na_hit + self.na_miss


@dataclass(frozen=True)
class AllocationPair:
    """NA-race counts assigned to the Black group: ``a`` with contraband
    (out of c), ``b`` without (out of m); the remainder goes to white."""

    a: int
    b: int


@dataclass(frozen=True)
class CountySensitivity:
    """Sensitivity scan result for one county.

    ``points`` holds the evaluated allocations as parallel arrays
    (a, b, prop_white, disparity).  ``exclusion_reason`` is set iff
    ``classification == "excluded"``.
    """

    group_id: str
    classification: str
    ignore_na_disparity: Optional[float] = None
    min_disparity: Optional[float] = None
    max_disparity: Optional[float] = None
    n_allocations: int = 0
    na_searched: int = 0
    points: Optional[dict] = field(default=None, repr=False)
    exclusion_reason: Optional[str] = None


def disparity_ignore_na(counts: RaceOutcomeCounts) -> float:
    """Black hit rate minus white hit rate, dropping NA-race drivers."""
    if counts.black_searched == 0:
        raise ExclusionError("zero searched Black drivers")
    if counts.white_searched == 0:
        raise ExclusionError("zero searched white drivers")
    return (
        counts.black_hit / counts.black_searched
        - counts.white_hit / counts.white_searched
    )


def _thinned_levels(limit: int, n_levels: int) -> np.ndarray:
    """Up to ``n_levels`` integer levels in [0, limit], endpoints included."""
    n_levels = max(2, min(n_levels, limit + 1))
    return np.unique(np.round(np.linspace(0, limit, n_levels)).astype(int))


def enumerate_allocations(
    c: int, m: int, cap: int = DEFAULT_ALLOCATION_CAP
) -> list:
    """All (a, b) with 0 <= a <= c, 0 <= b <= m, as combinations.

    When the full product (c+1)(m+1) exceeds ``cap``, a uniform grid is
    used instead.  The four corner allocations are always retained, even if
    that overshoots a cap below 4.
    """
    if c < 0 or m < 0:
        raise ValueError("counts must be >= 0")
    size_a, size_b = c + 1, m + 1
    if size_a * size_b <= cap:
        a_levels = np.arange(size_a)
        b_levels = np.arange(size_b)
    else:
        # split the budget across the two axes in proportion to their sizes
        ratio = math.sqrt(cap * size_a / size_b)
        ka = 1 if size_a == 1 else max(2, min(size_a, int(ratio)))
        kb = 1 if size_b == 1 else max(2, min(size_b, cap // ka))
        while ka * kb > cap and ka > 2:
            ka -= 1
            kb = 1 if size_b == 1 else max(2, min(size_b, cap // ka))
        a_levels = _thinned_levels(c, ka) if c > 0 else np.array([0])
        b_levels = _thinned_levels(m, kb) if m > 0 else np.array([0])
    return [AllocationPair(int(a), int(b)) for a in a_levels for b in b_levels]


def augmented_disparity(counts: RaceOutcomeCounts, alloc: AllocationPair) -> float:
    """Disparity after assigning ``alloc`` of the NA-race drivers to Black
    and the remainder to white."""
    c, m = counts.na_hit, counts.na_miss
    if not (0 <= alloc.a <= c and 0 <= alloc.b <= m):
        raise ValueError("allocation outside NA counts")
    black_hits = counts.black_hit + alloc.a
    black_total = counts.black_searched + alloc.a + alloc.b
    white_hits = counts.white_hit + (c - alloc.a)
    white_total = counts.white_searched + (c - alloc.a) + (m - alloc.b)
    if black_total == 0:
        raise ExclusionError("zero searched Black drivers after augmentation")
    if white_total == 0:
        raise ExclusionError("zero searched white drivers after augmentation")
    return black_hits / black_total - white_hits / white_total


def _scan_allocations(counts: RaceOutcomeCounts, allocations: Sequence[AllocationPair]):
    """Vectorized disparity over allocations; returns parallel arrays."""
    a = np.array([p.a for p in allocations], dtype=float)
    b = np.array([p.b for p in allocations], dtype=float)
    c, m = counts.na_hit, counts.na_miss
    black = (counts.black_hit + a) / (counts.black_searched + a + b)
    white = (counts.white_hit + (c - a)) / (
        counts.white_searched + (c - a) + (m - b)
    )
    disparity = black - white
    na_total = c + m
    if na_total > 0:
        prop_white = ((c - a) + (m - b)) / na_total
    else:
        prop_white = np.full(len(allocations), np.nan)
    return {"a": a.astype(int), "b": b.astype(int), "prop_white": prop_white, "disparity": disparity}


def county_sensitivity(
    counts: RaceOutcomeCounts,
    cap: int = DEFAULT_ALLOCATION_CAP,
    keep_points: bool = True,
) -> CountySensitivity:
    """Scan all allocations of one county and classify its switch potential.

    Classification uses strict sign comparisons; an exactly-zero ignore-NA
    disparity is tagged "boundary".  Counties whose ignore-NA disparity is
    not computable are tagged "excluded" with the reason.
    """
    try:
        ignore_na = disparity_ignore_na(counts)
    except ExclusionError as exc:
        return CountySensitivity(
            group_id=counts.group_id,
            classification=CLASS_EXCLUDED,
            exclusion_reason=exc.reason,
            na_searched=counts.na_searched,
        )
    allocations = enumerate_allocations(counts.na_hit, counts.na_miss, cap)
    scan = _scan_allocations(counts, allocations)
    lo = float(scan["disparity"].min())
    hi = float(scan["disparity"].max())
    if ignore_na == 0:
        classification = CLASS_BOUNDARY
    elif ignore_na > 0:
        classification = CLASS_SWITCH_POS_TO_NEG if lo < 0 else CLASS_REMAINS_POS
    else:
        classification = CLASS_SWITCH_NEG_TO_POS if hi > 0 else CLASS_REMAINS_NEG
    return CountySensitivity(
        group_id=counts.group_id,
        classification=classification,
        ignore_na_disparity=ignore_na,
        min_disparity=lo,
        max_disparity=hi,
        n_allocations=len(allocations),
        na_searched=counts.na_searched,
        points=scan if keep_points else None,
    )


@dataclass(frozen=True)
class StatewideSummary:
    """Tallies across counties, shaped like the per-state disparity table."""

    dataset: str
    total_groups: int
    groups_with_missingness: int
    ignore_na_negative: int
    ignore_na_positive: int
    switch_neg_to_pos: int
    switch_pos_to_neg: int
    remain_negative: int
    remain_positive: int


def statewide_summary(
    sensitivities: Iterable[CountySensitivity], dataset: str = ""
) -> StatewideSummary:
    """Aggregate county classifications into a one-row summary.

    Sign and switch tallies cover the counties that have NA-race searched
    drivers; excluded counties contribute only to the total.
    """
    sensitivities = list(sensitivities)
    with_missing = [
        s
        for s in sensitivities
        if s.classification != CLASS_EXCLUDED and s.na_searched > 0
    ]
    neg = [s for s in with_missing if s.ignore_na_disparity < 0]
    pos = [s for s in with_missing if s.ignore_na_disparity > 0]
    return StatewideSummary(
        dataset=dataset,
        total_groups=len(sensitivities),
        groups_with_missingness=len(with_missing),
        ignore_na_negative=len(neg),
        ignore_na_positive=len(pos),
        switch_neg_to_pos=sum(
            1 for s in neg if s.classification == CLASS_SWITCH_NEG_TO_POS
        ),
        switch_pos_to_neg=sum(
            1 for s in pos if s.classification == CLASS_SWITCH_POS_TO_NEG
        ),
        remain_negative=sum(1 for s in neg if s.classification == CLASS_REMAINS_NEG),
        remain_positive=sum(1 for s in pos if s.classification == CLASS_REMAINS_POS),
    )


def counts_from_table(
    table: StopTable,
    group_by: str,
    race_var: str = "subject_race",
    search_var: str = "search_conducted",
    contraband_var: str = "contraband_found",
    black_label: str = "black",
    white_label: str = "white",
) -> list:
    """Tally RaceOutcomeCounts per group from searched rows of a table.

    Rows are used when the search flag is a non-NA True and the contraband
    flag is non-NA.  Race labels other than the Black/white labels (and NA)
    are ignored, matching the two-group analysis.
    """
    for name in (group_by, race_var, search_var, contraband_var):
        table.schema(name)
    groups = table.values(group_by)
    group_na = table.na_column(group_by)
    race = table.values(race_var)
    race_na = table.na_column(race_var)
    searched = table.values(search_var)
    searched_na = table.na_column(search_var)
    contraband = table.values(contraband_var)
    contraband_na = table.na_column(contraband_var)

    tallies: dict = {}
    for i in range(table.n):
        if group_na[i] or searched_na[i] or contraband_na[i]:
            continue
        if not searched[i]:
            continue
        key = str(groups[i])
        entry = tallies.setdefault(
            key,
            {"black_hit": 0, "black_miss": 0, "white_hit": 0, "white_miss": 0, "na_hit": 0, "na_miss": 0},
        )
        hit = bool(contraband[i])
        if race_na[i]:
            prefix = "na"
        elif race[i] == black_label:
            prefix = "black"
        elif race[i] == white_label:
            prefix = "white"
        else:
            continue
        entry[f"{prefix}_hit" if hit else f"{prefix}_miss"] += 1

    return [
        RaceOutcomeCounts(group_id=key, **tallies[key]) for key in sorted(tallies)
    ]
