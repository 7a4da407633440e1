"""Missingness audits and disparity sensitivity analysis for stop-record data.

The package loads delimited stop-record files under a declared schema,
measures conditional missingness rates against temporal and spatial bins,
scores their dependence with a maximal-correlation estimator, and
quantifies how unrecorded race labels could shift two disparity
statistics: the outcome-test hit-rate gap and sharp bounds on the search
rate contrast.
"""

from .ate_sens import (
    AugmentationPlan,
    BoundsResult,
    RhoGrid,
    StopSearchCounts,
    apply_augmentation,
    ate_sensitivity_run,
    naive_search_disparity,
    sharp_ate_bounds,
)
from .binning import BinSpec, bin_value, geohash_decode, geohash_encode
from .errors import (
    BinningError,
    ConstantInputError,
    ExclusionError,
    SchemaError,
    StopAuditError,
)
from .ingest import (
    CORE_VARIABLES,
    ColumnSchema,
    StopTable,
    VariableMissingSummary,
    core_variable_subset,
    load_table,
    per_variable_missing_summary,
    read_config,
)
from .maxcorr import AceConfig, MaxCorrResult, latlon_maxcorr, maximal_correlation, series_maxcorr
from .missingness import CMRSeries, cmr, dcmr, missingness_matrix
from .outcome_sens import (
    AllocationPair,
    CountySensitivity,
    RaceOutcomeCounts,
    augmented_disparity,
    county_sensitivity,
    disparity_ignore_na,
    enumerate_allocations,
    statewide_summary,
)
from .report import RunManifest, run_pipeline
from .svg import render_svg
from .synth import MechanismSpec, SynthResult, generate

__version__ = "0.1.0"

__all__ = [
    "AceConfig",
    "AllocationPair",
    "AugmentationPlan",
    "BinSpec",
    "BinningError",
    "BoundsResult",
    "CMRSeries",
    "CORE_VARIABLES",
    "ColumnSchema",
    "ConstantInputError",
    "CountySensitivity",
    "ExclusionError",
    "MaxCorrResult",
    "MechanismSpec",
    "RaceOutcomeCounts",
    "RhoGrid",
    "RunManifest",
    "SchemaError",
    "StopAuditError",
    "StopSearchCounts",
    "StopTable",
    "SynthResult",
    "VariableMissingSummary",
    "apply_augmentation",
    "ate_sensitivity_run",
    "augmented_disparity",
    "bin_value",
    "cmr",
    "core_variable_subset",
    "county_sensitivity",
    "dcmr",
    "disparity_ignore_na",
    "enumerate_allocations",
    "generate",
    "geohash_decode",
    "geohash_encode",
    "latlon_maxcorr",
    "load_table",
    "maximal_correlation",
    "missingness_matrix",
    "naive_search_disparity",
    "per_variable_missing_summary",
    "read_config",
    "render_svg",
    "run_pipeline",
    "series_maxcorr",
    "sharp_ate_bounds",
    "statewide_summary",
]
