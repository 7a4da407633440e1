"""Maximal correlation between two numeric vectors via alternating
conditional expectations.

Each conditional-expectation pass is an equal-frequency binned-mean
smoother.  The number of bins for a pass is chosen by leave-one-out
cross-validation over a small ladder capped at the configured maximum,
preferring fewer bins within one standard error.  The adaptive choice is
what keeps independent noise from scoring as dependence: a fixed bin count
at the configured cap lets the alternating fixpoint climb to the top sample
canonical correlation of two fine partitions, which is far from zero even
for independent inputs.

Transforms are standardized to zero mean and unit variance after every
pass, and iteration stops when the achieved correlation moves by less than
the tolerance.  The whole procedure is deterministic and, because bins are
rank-based, exactly invariant to strictly increasing transforms of either
input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .binning import geohash_decode
from .errors import ConstantInputError, StopAuditError

_BIN_LADDER = (2, 3, 5, 8, 13, 21, 34, 50)


@dataclass(frozen=True)
class AceConfig:
    """Iteration and smoother settings.

    ``smoother_bins`` is the maximum bin count offered to the smoother; when
    None it defaults to min(50, n // 20), and never drops below 2.
    """

    max_iterations: int = 100
    tolerance: float = 1e-6
    smoother_bins: Optional[int] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise StopAuditError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise StopAuditError("tolerance must be positive")
        if self.smoother_bins is not None and self.smoother_bins < 2:
            raise StopAuditError("smoother_bins must be >= 2")

    def bin_cap(self, n: int) -> int:
        if self.smoother_bins is not None:
            return max(2, min(self.smoother_bins, n))
        return max(2, min(50, n // 20))


@dataclass(frozen=True)
class MaxCorrResult:
    """Estimated maximal correlation in [0, 1].

    ``value`` is NaN iff ``failure`` is set (e.g. a constant rate series
    surfaced as a flagged result instead of an exception).
    """

    value: float
    iterations_used: int
    converged: bool
    failure: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.failure is not None


def _equal_freq_assign(values: np.ndarray, nbins: int) -> np.ndarray:
    """Rank-based equal-frequency bin index per observation.

    Stable sort makes tie handling deterministic.
    """
    n = len(values)
    order = np.argsort(values, kind="stable")
    assign = np.empty(n, dtype=np.intp)
    assign[order] = (np.arange(n) * nbins) // n
    return assign


def _bin_means(values: np.ndarray, assign: np.ndarray, nbins: int) -> np.ndarray:
    sums = np.bincount(assign, weights=values, minlength=nbins)
    counts = np.bincount(assign, minlength=nbins)
    means = np.zeros(nbins)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]
    return means


def _smooth(values: np.ndarray, assign: np.ndarray, nbins: int) -> np.ndarray:
    return _bin_means(values, assign, nbins)[assign]


def _loo_cv_error(values: np.ndarray, assign: np.ndarray, nbins: int) -> float:
    """Leave-one-out squared error of the binned-mean fit."""
    n = len(values)
    sums = np.bincount(assign, weights=values, minlength=nbins)
    counts = np.bincount(assign, minlength=nbins)
    cnt = counts[assign]
    tot = sums[assign]
    # singleton bins fall back to the leave-one-out global mean
    global_loo = (values.sum() - values) / max(n - 1, 1)
    pred = np.where(cnt > 1, (tot - values) / np.maximum(cnt - 1, 1), global_loo)
    return float(np.mean((values - pred) ** 2))


def _standardize(values: np.ndarray) -> Optional[np.ndarray]:
    sd = values.std()
    if not sd > 0:
        return None
    return (values - values.mean()) / sd


class _Smoother:
    """Equal-frequency binned-mean smoother with CV-chosen bin count."""

    def __init__(self, values: np.ndarray, cap: int):
        self.n = len(values)
        ladder = sorted({b for b in _BIN_LADDER if b < cap} | {cap})
        self.ladder = [b for b in ladder if b <= self.n]
        self.assignments = {b: _equal_freq_assign(values, b) for b in self.ladder}

    def pick_bins(self, target: np.ndarray) -> int:
        errors = [
            _loo_cv_error(target, self.assignments[b], b) for b in self.ladder
        ]
        best = min(errors)
        slack = best * math.sqrt(2.0 / self.n)
        for b, err in zip(self.ladder, errors):
            if err <= best + slack:
                return b
        return self.ladder[-1]

    def conditional_mean(self, target: np.ndarray) -> np.ndarray:
        nbins = self.pick_bins(target)
        return _smooth(target, self.assignments[nbins], nbins)


def maximal_correlation(
    x, y, cfg: AceConfig = AceConfig()
) -> MaxCorrResult:
    """Estimate the maximal correlation between ``x`` and ``y``.

    Alternately replaces the transform of one variable by the smoothed
    conditional mean of the other's transform, standardizing each time,
    until the achieved correlation stabilizes.  Inputs must be equal-length
    numeric vectors of length >= 3 with no NA pairs and nonzero variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise StopAuditError("inputs must be 1-d vectors of equal length")
    n = len(x)
    if n < 3:
        raise StopAuditError("need at least 3 observations")
    if np.isnan(x).any() or np.isnan(y).any():
        raise StopAuditError("NA pairs must be removed before calling")
    if not (x.std() > 0 and y.std() > 0):
        raise ConstantInputError("constant input vector")

    cap = cfg.bin_cap(n)
    smoother_x = _Smoother(x, cap)
    smoother_y = _Smoother(y, cap)

    g = _standardize(y)
    f = _standardize(smoother_x.conditional_mean(g))
    if f is None:
        return MaxCorrResult(0.0, 0, True)

    last = float(np.corrcoef(f, g)[0, 1])
    iterations = 0
    converged = False
    for _ in range(cfg.max_iterations):
        iterations += 1
        g_next = _standardize(smoother_y.conditional_mean(f))
        if g_next is None:
            break
        g = g_next
        f_next = _standardize(smoother_x.conditional_mean(g))
        if f_next is None:
            break
        f = f_next
        corr = float(np.corrcoef(f, g)[0, 1])
        if abs(corr - last) < cfg.tolerance:
            last = corr
            converged = True
            break
        last = corr
    value = min(max(abs(last), 0.0), 1.0)
    return MaxCorrResult(value, iterations, converged)


def series_maxcorr(series, cfg: AceConfig = AceConfig()) -> MaxCorrResult:
    """Maximal correlation between bin ordinal and rate of a CMR series.

    A constant rate series is surfaced as a flagged NaN result rather than
    an exception so a batch audit keeps going.
    """
    points = series.points
    if len(points) < 3:
        raise StopAuditError("need at least 3 bins")
    x = np.arange(len(points), dtype=float)
    y = np.array([p.rate for p in points], dtype=float)
    try:
        return maximal_correlation(x, y, cfg)
    except ConstantInputError as exc:
        return MaxCorrResult(float("nan"), 0, False, failure=str(exc))


def latlon_maxcorr(
    geo_series,
    lat_of_bin: Optional[dict] = None,
    lon_of_bin: Optional[dict] = None,
    cfg: AceConfig = AceConfig(),
) -> MaxCorrResult:
    """Mean of the lat-vs-rate and lon-vs-rate maximal correlations.

    Bin coordinates default to geohash cell centers decoded from the bin
    keys.  Degenerate inputs are surfaced as a flagged NaN result.
    """
    points = geo_series.points
    if len(points) < 3:
        raise StopAuditError("need at least 3 bins")
    lats = []
    lons = []
    for p in points:
        if lat_of_bin is not None and lon_of_bin is not None:
            lats.append(float(lat_of_bin[p.bin_id]))
            lons.append(float(lon_of_bin[p.bin_id]))
        else:
            lat, lon = geohash_decode(p.bin_id)
            lats.append(lat)
            lons.append(lon)
    rates = np.array([p.rate for p in points], dtype=float)
    results = []
    for coords in (np.array(lats), np.array(lons)):
        try:
            results.append(maximal_correlation(coords, rates, cfg))
        except ConstantInputError as exc:
            return MaxCorrResult(float("nan"), 0, False, failure=str(exc))
    value = (results[0].value + results[1].value) / 2
    return MaxCorrResult(
        value=value,
        iterations_used=max(r.iterations_used for r in results),
        converged=all(r.converged for r in results),
    )
