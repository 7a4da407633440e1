"""Search-rate disparity, sharp ATE bounds in the share of racially
discriminatory stops, and allocation-based sensitivity sweeps.

The estimand is the searched-given-stopped contrast "as if Black" minus
"as if white"; a positive value indicates discrimination against Black
drivers.  With ``rho`` the share of racially discriminatory stops among
Black stops, the racially-stopped stratum would not have been stopped (and
so not searched) under the white counterfactual, while the always-stopped
stratum is exchangeable.  That leaves exactly one unidentified quantity:
the always-stopped Black search rate ``a`` entering the white-stops
counterfactual, constrained by the mixture identity
``p1 = (1 - rho) * a + rho * s`` with stratum mean ``s`` in [0, 1].  The
bounds are the min/max of a linear objective over the feasible interval
for ``a``, evaluated at its endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ExclusionError, StopAuditError
from .ingest import StopTable

ESTIMANDS = ("pooled", "black-stops")

PLAN_IGNORE_NA = "ignore_na"
PLAN_PROPORTION = "proportion"
PLAN_RANDOM = "random"
PLAN_EXTREME_TO_BLACK = "extreme_searched_to_black"
PLAN_EXTREME_TO_WHITE = "extreme_searched_to_white"

PLAN_KINDS = (
    PLAN_IGNORE_NA,
    PLAN_PROPORTION,
    PLAN_RANDOM,
    PLAN_EXTREME_TO_BLACK,
    PLAN_EXTREME_TO_WHITE,
)

DEFAULT_PROPORTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class StopSearchCounts:
    """Searched/stop counts per recorded race group, including NA race."""

    black_searched: int
    black_stops: int
    white_searched: int
    white_stops: int
    na_searched: int = 0
    na_stops: int = 0

    def __post_init__(self):
        for searched, stops in (
            (self.black_searched, self.black_stops),
            (self.white_searched, self.white_stops),
            (self.na_searched, self.na_stops),
        ):
            if stops < 0 or searched < 0:
                raise ValueError("counts must be >= 0")
            if searched > stops:
                raise ValueError("searched count exceeds stop count")

    @property
    def total_stops(self) -> int:
        return self.black_stops + self.white_stops + self.na_stops

    @property
    def total_searched(self) -> int:
        return self.black_searched + self.white_searched + self.na_searched


@dataclass(frozen=True)
class RhoGrid:
    """Grid of candidate shares of racially discriminatory stops."""

    values: tuple = (0.25, 0.5, 0.75)

    def __post_init__(self):
        for rho in self.values:
            if not 0.0 <= rho <= 1.0:
                raise ValueError("rho values must be in [0, 1]")


@dataclass(frozen=True)
class BoundsResult:
    """Sharp interval for the disparity at one rho.

    ``pi`` is the Black share of stops used to pool the two race groups
    (1.0 under the black-stops estimand).  At rho = 0 the interval
    collapses to the naive disparity.
    """

    rho: float
    naive: float
    lower: float
    upper: float
    pi: float


@dataclass(frozen=True)
class AugmentationPlan:
    """How NA-race stops are assigned to the Black and white groups.

    ``p_white`` applies to the proportion/random kinds; ``seed`` drives
    their hypergeometric draw of searched counts.
    """

    kind: str
    p_white: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise ValueError(f"unknown plan kind {self.kind!r}")
        if self.kind in (PLAN_PROPORTION, PLAN_RANDOM):
            if self.p_white is None or not 0.0 <= self.p_white <= 1.0:
                raise ValueError("p_white must be in [0, 1]")

    def label(self) -> str:
        return self.kind


def naive_search_disparity(counts: StopSearchCounts) -> float:
    """Black search rate minus white search rate, dropping NA-race stops."""
    if counts.black_stops == 0:
        raise ExclusionError("zero Black stops")
    if counts.white_stops == 0:
        raise ExclusionError("zero white stops")
    return (
        counts.black_searched / counts.black_stops
        - counts.white_searched / counts.white_stops
    )


def _feasible_interval(p1: float, rho: float):
    """Feasible range of the always-stopped Black search rate."""
    if rho >= 1.0:
        return 0.0, 1.0
    lo = max(0.0, (p1 - rho) / (1.0 - rho))
    hi = min(1.0, p1 / (1.0 - rho))
    return lo, hi


def sharp_ate_bounds(
    counts: StopSearchCounts, rho: float, estimand: str = "pooled"
) -> BoundsResult:
    """Sharp bounds on the disparity given a share ``rho`` of racially
    discriminatory stops.

    Under the pooled estimand the objective is linear in the unidentified
    always-stopped search rate, so the extremes are its feasible-interval
    endpoints.  Under the black-stops estimand the disparity is point
    identified at ``p1 - (1 - rho) * p0``.
    """
    if not 0.0 <= rho <= 1.0:
        raise StopAuditError("rho must be in [0, 1]")
    if estimand not in ESTIMANDS:
        raise StopAuditError(f"unknown estimand {estimand!r}")
    if counts.black_stops == 0:
        raise ExclusionError("zero Black stops")
    if counts.white_stops == 0:
        raise ExclusionError("zero white stops")
    p1 = counts.black_searched / counts.black_stops
    p0 = counts.white_searched / counts.white_stops
    naive = p1 - p0
    black_term = p1 - (1.0 - rho) * p0
    if estimand == "black-stops":
        return BoundsResult(rho=rho, naive=naive, lower=black_term, upper=black_term, pi=1.0)
    pi = counts.black_stops / (counts.black_stops + counts.white_stops)
    a_lo, a_hi = _feasible_interval(p1, rho)
    lower = pi * black_term + (1.0 - pi) * (a_lo - p0)
    upper = pi * black_term + (1.0 - pi) * (a_hi - p0)
    return BoundsResult(rho=rho, naive=naive, lower=lower, upper=upper, pi=pi)


def _split_na(counts: StopSearchCounts, n_to_white: int, seed: int):
    """Hypergeometric split of the NA rows: how many searched go to white."""
    rng = np.random.default_rng(seed)
    searched_to_white = int(
        rng.hypergeometric(
            ngood=counts.na_searched,
            nbad=counts.na_stops - counts.na_searched,
            nsample=n_to_white,
        )
        if 0 < n_to_white
        else 0
    )
    return searched_to_white


def apply_augmentation(
    counts: StopSearchCounts, plan: AugmentationPlan
) -> StopSearchCounts:
    """Fold the NA-race stops into the Black/white groups per the plan.

    Proportion/random plans move round(p_white * na_stops) NA rows to the
    white group, drawing their searched count hypergeometrically without
    replacement; the rest go to Black.  The extreme plans send all searched
    NA rows to one group and all unsearched NA rows to the other.  NA
    counts are zero afterwards (except for ignore_na, which leaves the
    counts untouched).
    """
    if plan.kind == PLAN_IGNORE_NA:
        return counts
    if counts.na_stops == 0:
        return StopSearchCounts(
            counts.black_searched,
            counts.black_stops,
            counts.white_searched,
            counts.white_stops,
            0,
            0,
        )
    if plan.kind == PLAN_EXTREME_TO_BLACK:
        searched_to_white, n_to_white = 0, counts.na_stops - counts.na_searched
    elif plan.kind == PLAN_EXTREME_TO_WHITE:
        searched_to_white, n_to_white = counts.na_searched, counts.na_searched
    else:
        n_to_white = int(np.floor(plan.p_white * counts.na_stops + 0.5))
        searched_to_white = _split_na(counts, n_to_white, plan.seed or 0)
    searched_to_black = counts.na_searched - searched_to_white
    n_to_black = counts.na_stops - n_to_white
    return StopSearchCounts(
        black_searched=counts.black_searched + searched_to_black,
        black_stops=counts.black_stops + n_to_black,
        white_searched=counts.white_searched + searched_to_white,
        white_stops=counts.white_stops + n_to_white,
        na_searched=0,
        na_stops=0,
    )


@dataclass(frozen=True)
class SweepCell:
    """One (plan, draw, rho) cell of a sensitivity sweep."""

    plan: str
    p_white: Optional[float]
    draw: int
    rho: float
    bounds: BoundsResult


def _sub_seed(run_seed: int, plan_index: int, draw: int) -> int:
    """Deterministic per-(plan, draw) seed: SeedSequence(run_seed) with
    spawn key (plan_index, draw), so any single cell can be reproduced."""
    seq = np.random.SeedSequence(run_seed, spawn_key=(plan_index, draw))
    return int(seq.generate_state(1)[0])


def ate_sensitivity_run(
    counts: StopSearchCounts,
    rho_grid: Iterable[float] = (0.25, 0.5, 0.75),
    plans: Optional[Sequence[AugmentationPlan]] = None,
    draws_per_proportion: int = 1,
    seed: int = 0,
    estimand: str = "pooled",
) -> list:
    """Naive disparity and sharp bounds for every (plan, draw, rho) cell.

    ``random`` plans are replicated ``draws_per_proportion`` times with
    derived sub-seeds; all other plans run once.  Output order and values
    are deterministic given the seed.
    """
    if plans is None:
        plans = default_plans()
    cells = []
    for plan_index, plan in enumerate(plans):
        if plan.kind == PLAN_RANDOM:
            draws = range(draws_per_proportion)
        else:
            draws = range(1)
        for draw in draws:
            if plan.kind in (PLAN_PROPORTION, PLAN_RANDOM):
                cell_seed = (
                    plan.seed
                    if plan.seed is not None
                    else _sub_seed(seed, plan_index, draw)
                )
                effective = AugmentationPlan(plan.kind, plan.p_white, cell_seed)
            else:
                effective = plan
            augmented = apply_augmentation(counts, effective)
            for rho in rho_grid:
                bounds = sharp_ate_bounds(augmented, rho, estimand)
                cells.append(
                    SweepCell(
                        plan=plan.label(),
                        p_white=plan.p_white,
                        draw=draw,
                        rho=rho,
                        bounds=bounds,
                    )
                )
    return cells


def default_plans(
    proportions: Sequence[float] = DEFAULT_PROPORTIONS,
) -> list:
    """ignore-NA, the fixed proportion grid, and both extreme assignments."""
    plans = [AugmentationPlan(PLAN_IGNORE_NA)]
    plans.extend(AugmentationPlan(PLAN_PROPORTION, p_white=p) for p in proportions)
    plans.append(AugmentationPlan(PLAN_EXTREME_TO_BLACK))
    plans.append(AugmentationPlan(PLAN_EXTREME_TO_WHITE))
    return plans


def counts_from_table(
    table: StopTable,
    race_var: str = "subject_race",
    search_var: str = "search_conducted",
    black_label: str = "black",
    white_label: str = "white",
) -> StopSearchCounts:
    """Tally stop/search counts from a table's rows.

    Rows with an NA search flag are dropped; race labels other than the
    Black/white labels (and NA) are ignored.
    """
    for name in (race_var, search_var):
        table.schema(name)
    race = table.values(race_var)
    race_na = table.na_column(race_var)
    searched = table.values(search_var)
    searched_na = table.na_column(search_var)
    tallies = {
        "black": [0, 0],
        "white": [0, 0],
        "na": [0, 0],
    }
    for i in range(table.n):
        if searched_na[i]:
            continue
        if race_na[i]:
            key = "na"
        elif race[i] == black_label:
            key = "black"
        elif race[i] == white_label:
            key = "white"
        else:
            continue
        tallies[key][1] += 1
        if searched[i]:
            tallies[key][0] += 1
    return StopSearchCounts(
        black_searched=tallies["black"][0],
        black_stops=tallies["black"][1],
        white_searched=tallies["white"][0],
        white_stops=tallies["white"][1],
        na_searched=tallies["na"][0],
        na_stops=tallies["na"][1],
    )
