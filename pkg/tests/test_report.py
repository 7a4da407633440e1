import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from stopaudit import BinSpec
from stopaudit.cli import main
from stopaudit.missingness import CMRPoint, CMRSeries
from stopaudit.svg import render_ate_ribbons, render_outcome_strip, render_series_scatter

SVG_NS = "{http://www.w3.org/2000/svg}"


def _read_rows(path: Path):
    with path.open(newline="") as handle:
        return list(csv.DictReader(handle))


def _write_belmont_csv(path: Path):
    # searched rows with Belmont's hit/miss structure
    lines = ["county_name,subject_race,search_conducted,contraband_found"]
    rows = (
        [("black", "true")] * 45
        + [("black", "false")] * 170
        + [("white", "true")] * 286
        + [("white", "false")] * 1726
        + [("NA", "true")] * 4
        + [("NA", "false")] * 643
    )
    for race, hit in rows:
        lines.append(f"belmont,{race},true,{hit}")
    path.write_text("\n".join(lines) + "\n")


def _belmont_config(path: Path):
    config = {
        "columns": [
            {"name": "county_name", "kind": "category"},
            {"name": "subject_race", "kind": "category"},
            {"name": "search_conducted", "kind": "boolean"},
            {"name": "contraband_found", "kind": "boolean"},
        ]
    }
    path.write_text(json.dumps(config))


class TestAuditCommand:
    def test_audit_toy_fixture(self, toy_csv_path, toy_config_path, tmp_path, capsys):
        code = main(
            [
                "audit",
                "--input",
                str(toy_csv_path),
                "--config",
                str(toy_config_path),
                "--bin",
                "day",
                "--cond",
                "date",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        rows = _read_rows(tmp_path / "audit.csv")
        dataset_rows = [r for r in rows if r["target"] == "dataset"]
        assert len(dataset_rows) == 1
        assert float(dataset_rows[0]["rate"]) == 0.2
        assert dataset_rows[0]["bin"] == "2016-03-14"
        sidecar = json.loads((tmp_path / "audit.json").read_text())
        assert sidecar["conditioning_variable"] == "date"
        assert sidecar["maximal_correlation"]["failure"] is not None  # single bin
        out = capsys.readouterr().out
        assert "maximal correlation" in out

    def test_rerun_is_byte_identical(self, toy_csv_path, toy_config_path, tmp_path):
        args = lambda out: [
            "audit",
            "--input",
            str(toy_csv_path),
            "--config",
            str(toy_config_path),
            "--bin",
            "day",
            "--out",
            str(out),
        ]
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(args(first)) == 0
        assert main(args(second)) == 0
        for name in ("audit.csv", "audit.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_manifest_lists_outputs(self, toy_csv_path, toy_config_path, tmp_path):
        assert (
            main(
                [
                    "audit",
                    "--input",
                    str(toy_csv_path),
                    "--config",
                    str(toy_config_path),
                    "--bin",
                    "day",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 0
        )
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "audit"
        assert "audit.csv" in manifest["outputs"]
        assert "audit.json" in manifest["outputs"]
        assert manifest["status"] == "ok"
        assert "total_s" in manifest["timings"]

    def test_missing_input_exits_3(self, toy_config_path, tmp_path):
        code = main(
            [
                "audit",
                "--input",
                str(tmp_path / "absent.csv"),
                "--config",
                str(toy_config_path),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 3

    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["defenestrate"])
        assert excinfo.value.code == 2


class TestOutcomeSensCommand:
    def test_belmont_csv_rows(self, tmp_path):
        data = tmp_path / "belmont.csv"
        config = tmp_path / "config.json"
        _write_belmont_csv(data)
        _belmont_config(config)
        code = main(
            [
                "outcome-sens",
                "--input",
                str(data),
                "--config",
                str(config),
                "--group-by",
                "county_name",
                "--out",
                str(tmp_path),
                "--svg",
            ]
        )
        assert code == 0
        rows = _read_rows(tmp_path / "outcome_allocations.csv")
        assert len(rows) == 3220
        values = {
            (int(r["a"]), int(r["b"])): float(r["disparity"]) for r in rows
        }
        assert values[(4, 643)] == pytest.approx(-0.085, abs=1e-3)
        assert values[(0, 0)] == pytest.approx(0.100, abs=1e-3)
        summary = _read_rows(tmp_path / "outcome_summary.csv")[0]
        assert summary["groups_with_missingness"] == "1"
        assert summary["switch_pos_to_neg"] == "1"
        assert (tmp_path / "outcome_sens.svg").exists()

    def test_all_excluded_exits_1(self, tmp_path, capsys):
        data = tmp_path / "excluded.csv"
        config = tmp_path / "config.json"
        data.write_text(
            "county_name,subject_race,search_conducted,contraband_found\n"
            "a,black,true,true\n"
            "a,NA,true,false\n"
        )
        _belmont_config(config)
        code = main(
            [
                "outcome-sens",
                "--input",
                str(data),
                "--config",
                str(config),
                "--group-by",
                "county_name",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 1
        county = _read_rows(tmp_path / "outcome_counties.csv")[0]
        assert county["classification"] == "excluded"
        assert county["exclusion_reason"] != ""


class TestAteSensCommand:
    def _data(self, tmp_path):
        data = tmp_path / "stops.csv"
        config = tmp_path / "config.json"
        lines = ["subject_race,search_conducted"]
        lines += ["black,true"] * 30 + ["black,false"] * 70
        lines += ["white,true"] * 10 + ["white,false"] * 90
        lines += ["NA,true"] * 5 + ["NA,false"] * 45
        data.write_text("\n".join(lines) + "\n")
        config.write_text(
            json.dumps(
                {
                    "columns": [
                        {"name": "subject_race", "kind": "category"},
                        {"name": "search_conducted", "kind": "boolean"},
                    ]
                }
            )
        )
        return data, config

    def test_sweep_outputs(self, tmp_path):
        data, config = self._data(tmp_path)
        code = main(
            [
                "ate-sens",
                "--input",
                str(data),
                "--config",
                str(config),
                "--rhos",
                "0.25,0.5,0.75",
                "--props",
                "0,0.5,1",
                "--seed",
                "3",
                "--out",
                str(tmp_path),
                "--svg",
            ]
        )
        assert code == 0
        rows = _read_rows(tmp_path / "ate_sens.csv")
        # plans: ignore + 3 proportions + 2 extremes, times 3 rhos
        assert len(rows) == 6 * 3
        ignore_rows = [r for r in rows if r["plan"] == "ignore_na"]
        assert len(ignore_rows) == 3
        for row in ignore_rows:
            assert float(row["naive"]) == pytest.approx(0.2)
            assert float(row["lower"]) <= float(row["upper"])
        payload = json.loads((tmp_path / "ate_sens.json").read_text())
        assert len(payload["panels"]) == 3
        assert all(p["zero_line"] == "dashed" for p in payload["panels"])
        assert (tmp_path / "ate_sens.svg").exists()

    def test_invalid_rho_exits_3(self, tmp_path, capsys):
        data, config = self._data(tmp_path)
        code = main(
            [
                "ate-sens",
                "--input",
                str(data),
                "--config",
                str(config),
                "--rhos",
                "0.5,1.5",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 3
        assert "rho" in capsys.readouterr().err

    def test_deterministic_given_seed(self, tmp_path):
        data, config = self._data(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        base = [
            "ate-sens",
            "--input",
            str(data),
            "--config",
            str(config),
            "--draws",
            "3",
            "--seed",
            "11",
        ]
        assert main(base + ["--out", str(out_a)]) == 0
        assert main(base + ["--out", str(out_b)]) == 0
        assert (out_a / "ate_sens.csv").read_bytes() == (
            out_b / "ate_sens.csv"
        ).read_bytes()


class TestSynthCommand:
    def test_writes_masked_and_shadow(self, tmp_path):
        code = main(
            [
                "synth",
                "--mechanism",
                "mcar",
                "--n",
                "200",
                "--p",
                "0.25",
                "--seed",
                "5",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        masked = (tmp_path / "synth_masked.csv").read_text().splitlines()
        shadow = (tmp_path / "synth_shadow.csv").read_text().splitlines()
        assert masked[0] == shadow[0] == "date,time,subject_race,searched,contraband"
        assert len(masked) == len(shadow) == 201
        assert any(",," in line or line.endswith(",") for line in masked[1:])
        assert not any(",," in line or line.endswith(",") for line in shadow[1:])

    def test_roundtrip_through_loader(self, tmp_path):
        assert (
            main(
                [
                    "synth",
                    "--mechanism",
                    "mnar",
                    "--n",
                    "300",
                    "--seed",
                    "6",
                    "--out",
                    str(tmp_path),
                ]
            )
            == 0
        )
        from stopaudit import ColumnSchema, load_table

        schema = [
            ColumnSchema("date", "date"),
            ColumnSchema("time", "time"),
            ColumnSchema("subject_race", "category"),
            ColumnSchema("searched", "boolean"),
            ColumnSchema("contraband", "boolean"),
        ]
        table = load_table(tmp_path / "synth_masked.csv", schema)
        assert table.n == 300
        assert int(table.na_column("subject_race").sum()) > 0
        assert table.coercion_failures == {name: 0 for name in table.names}


class TestConsoleEntry:
    def test_module_invocation(self, toy_csv_path, toy_config_path, tmp_path):
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "stopaudit",
                "audit",
                "--input",
                str(toy_csv_path),
                "--config",
                str(toy_config_path),
                "--bin",
                "day",
                "--out",
                str(tmp_path),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert (tmp_path / "audit.csv").exists()


class TestSvgRendering:
    def test_render_svg_dispatcher(self):
        from stopaudit import render_svg

        points = tuple(CMRPoint(f"2016-W{i:02d}", i, 100, 100) for i in range(1, 4))
        series = CMRSeries("date", "dataset", BinSpec("week"), points)
        assert render_svg(series, "series-scatter").startswith("<svg")
        rows = [{"group": "g", "prop_white": "0.5", "disparity": "0.02"}]
        assert "median" in render_svg(rows, "outcome-strip")
        with pytest.raises(Exception, match="chart kind"):
            render_svg(series, "pie")

    def test_scatter_mark_count(self):
        points = tuple(
            CMRPoint(f"2016-W{i:02d}", i, 100, 100) for i in range(1, 4)
        )
        series = CMRSeries("date", "dataset", BinSpec("week"), points)
        svg = render_series_scatter(series)
        root = ET.fromstring(svg)
        circles = root.findall(f".//{SVG_NS}circle")
        assert len(circles) == 3

    def test_scatter_rejects_empty(self):
        series = CMRSeries("date", "dataset", BinSpec("week"), ())
        with pytest.raises(Exception):
            render_series_scatter(series)

    def test_outcome_strip_single_allocation(self):
        rows = [{"group": "g", "prop_white": "0.5", "disparity": "0.02"}]
        svg = render_outcome_strip(rows)
        root = ET.fromstring(svg)
        allocations = [
            c
            for c in root.findall(f".//{SVG_NS}circle")
            if c.get("class") == "allocation"
        ]
        medians = [
            l for l in root.findall(f".//{SVG_NS}line") if l.get("class") == "median"
        ]
        assert len(allocations) == 1
        assert len(medians) == 1
        # degenerate median sits at the single allocation's position
        assert medians[0].get("x1") == allocations[0].get("cx")

    def test_ate_panels_have_dashed_zero_lines(self):
        rows = []
        for rho in (0.25, 0.5, 0.75):
            rows.append(
                {
                    "plan": "ignore_na",
                    "p_white": "",
                    "draw": "0",
                    "rho": str(rho),
                    "naive": "0.2",
                    "lower": "0.1",
                    "upper": "0.3",
                }
            )
        svg = render_ate_ribbons(rows)
        root = ET.fromstring(svg)
        panels = [g for g in root.findall(f".//{SVG_NS}g") if g.get("class") == "panel"]
        assert len(panels) == 3
        for panel in panels:
            zeros = [
                l
                for l in panel.findall(f"{SVG_NS}line")
                if l.get("class") == "zero" and l.get("stroke-dasharray")
            ]
            assert len(zeros) == 1
