"""Pipeline orchestration: run a command, write machine-readable outputs,
record a manifest.

Analytic files (CSV/JSON) contain no timestamps, so identical inputs and
seed reproduce them byte for byte; wall-clock timings live only in the
manifest.  Rendered SVGs are built from rows read back out of the written
CSVs, never from in-memory recomputation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import ate_sens, outcome_sens, synth as synth_mod
from .binning import BinSpec
from .errors import StopAuditError
from .ingest import load_table, read_config
from .maxcorr import AceConfig, MaxCorrResult, latlon_maxcorr, series_maxcorr
from .missingness import cmr, dcmr, default_dcmr_variables
from .svg import render_ate_ribbons, render_outcome_strip, render_series_scatter

COMMANDS = ("audit", "outcome-sens", "ate-sens", "synth")

STATUS_OK = "ok"
STATUS_EXCLUSIONS_ONLY = "exclusions-only"


@dataclass
class RunManifest:
    """What ran, with what inputs, and what it wrote."""

    dataset_id: str
    command: str
    seed: Optional[int]
    config_digest: str
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = STATUS_OK

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        payload = {
            "dataset_id": self.dataset_id,
            "command": self.command,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "outputs": self.outputs,
            "timings": self.timings,
            "status": self.status,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def _read_csv_rows(path: Path) -> list:
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_pipeline(command: str, config: dict) -> RunManifest:
    """Execute one pipeline command and return its manifest.

    ``config`` keys are command-specific; see the CLI module for the
    mapping from flags.  The manifest (and all outputs) land in
    ``config["out"]``.
    """
    if command not in COMMANDS:
        raise StopAuditError(f"unknown command {command!r}")
    out_dir = Path(config.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        dataset_id=config.get("dataset_id")
        or Path(config.get("input", "synthetic")).stem,
        command=command,
        seed=config.get("seed"),
        config_digest=_digest(config),
    )
    started = _time.perf_counter()
    runner = {
        "audit": _run_audit,
        "outcome-sens": _run_outcome_sens,
        "ate-sens": _run_ate_sens,
        "synth": _run_synth,
    }[command]
    runner(config, out_dir, manifest)
    manifest.timings["total_s"] = round(_time.perf_counter() - started, 6)
    manifest_path = manifest.write(out_dir)
    manifest.outputs.append(manifest_path.name)
    return manifest


def _load_input(config: dict):
    ingest_cfg = read_config(config["config"])
    return load_table(
        config["input"],
        ingest_cfg.columns,
        ingest_cfg.na_tokens,
        ingest_cfg.delimiter,
    )


def _maxcorr_payload(result) -> dict:
    return {
        "value": None if result.failed else result.value,
        "iterations_used": result.iterations_used,
        "converged": result.converged,
        "failure": result.failure,
    }


def _run_audit(config: dict, out_dir: Path, manifest: RunManifest) -> None:
    table = _load_input(config)
    spec = BinSpec(
        kind=config.get("bin", "week"),
        geohash_precision=config.get("geohash_precision", 6),
    )
    cond = None if spec.kind == "geohash" else config.get("cond", "date")
    variables = config.get("variables") or default_dcmr_variables(table, cond, spec)
    series = dcmr(table, cond, spec, variables)

    rows = [
        (p.bin_id, "dataset", repr(p.rate), p.bin_count) for p in series.points
    ]
    for var in variables:
        var_series = cmr(table, var, cond, spec)
        rows.extend(
            (p.bin_id, var, repr(p.rate), p.bin_count) for p in var_series.points
        )
    csv_path = out_dir / "audit.csv"
    _write_csv(csv_path, ("bin", "target", "rate", "count"), rows)
    manifest.outputs.append(csv_path.name)

    ace_cfg = AceConfig()
    if len(series.points) < 3:
        mc = MaxCorrResult(float("nan"), 0, False, failure="fewer than 3 bins")
    elif spec.kind == "geohash":
        mc = latlon_maxcorr(series, cfg=ace_cfg)
    else:
        mc = series_maxcorr(series, ace_cfg)
    sidecar = {
        "dataset_id": manifest.dataset_id,
        "conditioning_variable": series.conditioning_variable,
        "bin": {"kind": spec.kind, "geohash_precision": spec.geohash_precision},
        "variables": list(variables),
        "unbinnable_rows": series.unbinnable,
        "maximal_correlation": _maxcorr_payload(mc),
    }
    json_path = out_dir / "audit.json"
    _write_json(json_path, sidecar)
    manifest.outputs.append(json_path.name)
    if mc.failed:
        print(f"dCMR by {series.conditioning_variable}: maximal correlation NA ({mc.failure})")
    else:
        print(
            f"dCMR by {series.conditioning_variable}: maximal correlation "
            f"({mc.value:.3f})"
        )

    if config.get("svg"):
        points = [
            r for r in _read_csv_rows(csv_path) if r["target"] == "dataset"
        ]
        svg_path = out_dir / "audit.svg"
        svg_path.write_text(_series_svg_from_rows(points, manifest.dataset_id))
        manifest.outputs.append(svg_path.name)


class _CsvPoint:
    __slots__ = ("bin_id", "rate", "bin_count")

    def __init__(self, bin_id, rate, bin_count):
        self.bin_id = bin_id
        self.rate = rate
        self.bin_count = bin_count


class _CsvSeries:
    def __init__(self, points):
        self.points = points


def _series_svg_from_rows(rows, title: str) -> str:
    points = [
        _CsvPoint(r["bin"], float(r["rate"]), int(r["count"])) for r in rows
    ]
    return render_series_scatter(_CsvSeries(points), title=title)


def _run_outcome_sens(config: dict, out_dir: Path, manifest: RunManifest) -> None:
    table = _load_input(config)
    counts = outcome_sens.counts_from_table(
        table,
        group_by=config["group_by"],
        race_var=config.get("race_var", "subject_race"),
        search_var=config.get("search_var", "search_conducted"),
        contraband_var=config.get("contraband_var", "contraband_found"),
    )
    cap = config.get("cap", outcome_sens.DEFAULT_ALLOCATION_CAP)
    sensitivities = [outcome_sens.county_sensitivity(c, cap=cap) for c in counts]

    point_rows = []
    for sens in sensitivities:
        if sens.points is None:
            continue
        pts = sens.points
        for a, b, pw, disp in zip(
            pts["a"], pts["b"], pts["prop_white"], pts["disparity"]
        ):
            point_rows.append(
                (
                    sens.group_id,
                    int(a),
                    int(b),
                    "" if np.isnan(pw) else repr(float(pw)),
                    repr(float(disp)),
                )
            )
    alloc_path = out_dir / "outcome_allocations.csv"
    _write_csv(
        alloc_path, ("group", "a", "b", "prop_white", "disparity"), point_rows
    )
    manifest.outputs.append(alloc_path.name)

    county_rows = [
        (
            s.group_id,
            s.classification,
            "" if s.ignore_na_disparity is None else repr(s.ignore_na_disparity),
            "" if s.min_disparity is None else repr(s.min_disparity),
            "" if s.max_disparity is None else repr(s.max_disparity),
            s.n_allocations,
            s.exclusion_reason or "",
        )
        for s in sensitivities
    ]
    county_path = out_dir / "outcome_counties.csv"
    _write_csv(
        county_path,
        (
            "group",
            "classification",
            "ignore_na_disparity",
            "min_disparity",
            "max_disparity",
            "n_allocations",
            "exclusion_reason",
        ),
        county_rows,
    )
    manifest.outputs.append(county_path.name)

    # boxplot summary: median augmented disparity per prop_white decile,
    # per group, for the strip/box rendering
    median_rows = []
    for sens in sensitivities:
        if sens.points is None or len(sens.points["disparity"]) == 0:
            continue
        pts = sens.points
        pw = pts["prop_white"]
        buckets = np.where(np.isnan(pw), -1.0, np.floor(pw * 10.0) / 10.0)
        for bucket in sorted(set(buckets.tolist())):
            in_bucket = buckets == bucket
            median_rows.append(
                (
                    sens.group_id,
                    "" if bucket < 0 else repr(float(min(bucket, 1.0))),
                    repr(float(np.median(pts["disparity"][in_bucket]))),
                    int(in_bucket.sum()),
                )
            )
    medians_path = out_dir / "outcome_medians.csv"
    _write_csv(
        medians_path, ("group", "prop_white_bucket", "median", "n"), median_rows
    )
    manifest.outputs.append(medians_path.name)

    summary = outcome_sens.statewide_summary(
        sensitivities, dataset=manifest.dataset_id
    )
    summary_path = out_dir / "outcome_summary.csv"
    _write_csv(
        summary_path,
        (
            "dataset",
            "total_groups",
            "groups_with_missingness",
            "ignore_na_negative",
            "ignore_na_positive",
            "switch_neg_to_pos",
            "switch_pos_to_neg",
            "remain_negative",
            "remain_positive",
        ),
        [
            (
                summary.dataset,
                summary.total_groups,
                summary.groups_with_missingness,
                summary.ignore_na_negative,
                summary.ignore_na_positive,
                summary.switch_neg_to_pos,
                summary.switch_pos_to_neg,
                summary.remain_negative,
                summary.remain_positive,
            )
        ],
    )
    manifest.outputs.append(summary_path.name)

    if config.get("svg"):
        rows = _read_csv_rows(alloc_path)
        if rows:
            svg_path = out_dir / "outcome_sens.svg"
            svg_path.write_text(
                render_outcome_strip(rows, title=manifest.dataset_id)
            )
            manifest.outputs.append(svg_path.name)

    if sensitivities and all(
        s.classification == outcome_sens.CLASS_EXCLUDED for s in sensitivities
    ):
        manifest.status = STATUS_EXCLUSIONS_ONLY


def _run_ate_sens(config: dict, out_dir: Path, manifest: RunManifest) -> None:
    table = _load_input(config)
    counts = ate_sens.counts_from_table(
        table,
        race_var=config.get("race_var", "subject_race"),
        search_var=config.get("search_var", "search_conducted"),
    )
    rhos = ate_sens.RhoGrid(tuple(config.get("rhos", (0.25, 0.5, 0.75)))).values
    props = tuple(config.get("props", ate_sens.DEFAULT_PROPORTIONS))
    draws = config.get("draws", 1)
    seed = config.get("seed", 0)
    estimand = config.get("estimand", "pooled")

    prop_kind = ate_sens.PLAN_RANDOM if draws > 1 else ate_sens.PLAN_PROPORTION
    plans = [ate_sens.AugmentationPlan(ate_sens.PLAN_IGNORE_NA)]
    plans.extend(
        ate_sens.AugmentationPlan(prop_kind, p_white=p) for p in props
    )
    plans.append(ate_sens.AugmentationPlan(ate_sens.PLAN_EXTREME_TO_BLACK))
    plans.append(ate_sens.AugmentationPlan(ate_sens.PLAN_EXTREME_TO_WHITE))

    cells = ate_sens.ate_sensitivity_run(
        counts,
        rho_grid=rhos,
        plans=plans,
        draws_per_proportion=draws,
        seed=seed,
        estimand=estimand,
    )
    csv_path = out_dir / "ate_sens.csv"
    _write_csv(
        csv_path,
        ("plan", "p_white", "draw", "rho", "naive", "lower", "upper"),
        [
            (
                c.plan,
                "" if c.p_white is None else repr(c.p_white),
                c.draw,
                repr(c.rho),
                repr(c.bounds.naive),
                repr(c.bounds.lower),
                repr(c.bounds.upper),
            )
            for c in cells
        ],
    )
    manifest.outputs.append(csv_path.name)

    panels = []
    for rho in rhos:
        panels.append(
            {
                "rho": rho,
                "zero_line": "dashed",
                "rows": [
                    {
                        "plan": c.plan,
                        "p_white": c.p_white,
                        "draw": c.draw,
                        "naive": c.bounds.naive,
                        "lower": c.bounds.lower,
                        "upper": c.bounds.upper,
                    }
                    for c in cells
                    if c.rho == rho
                ],
            }
        )
    json_path = out_dir / "ate_sens.json"
    _write_json(json_path, {"estimand": estimand, "panels": panels})
    manifest.outputs.append(json_path.name)

    if config.get("svg"):
        rows = _read_csv_rows(csv_path)
        svg_path = out_dir / "ate_sens.svg"
        svg_path.write_text(render_ate_ribbons(rows, title=manifest.dataset_id))
        manifest.outputs.append(svg_path.name)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def _run_synth(config: dict, out_dir: Path, manifest: RunManifest) -> None:
    spec = synth_mod.MechanismSpec(
        kind=config["mechanism"],
        n=config.get("n", 10000),
        seed=config.get("seed", 0) or 0,
        p=config.get("p", 0.3),
        targets=config.get("targets"),
        driver=config.get("driver", "date"),
        slope=config.get("slope", 4.0),
        intercept=config.get("intercept", -2.0),
        rates=config.get("rates"),
        weeks=config.get("weeks", 50),
    )
    result = synth_mod.generate(spec)
    for name, table in (("synth_masked.csv", result.table), ("synth_shadow.csv", result.shadow)):
        path = out_dir / name
        header = table.names
        columns = [table.values(col) for col in header]
        mask = table.na_mask
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for i in range(table.n):
                writer.writerow(
                    [
                        "" if mask[i, j] else _format_cell(columns[j][i])
                        for j in range(len(header))
                    ]
                )
        manifest.outputs.append(name)
    manifest.dataset_id = f"synth-{spec.kind}"
