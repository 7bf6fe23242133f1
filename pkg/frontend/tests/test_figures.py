"""Figure rendering against the CSV/summary contract.

The end-to-end test drives the primary package through its CLI to produce
genuine artifacts, then renders them; everything else uses synthetic
files written directly against the documented formats.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from zkplots.figures import (
    CSV_HEADER,
    FigureError,
    FigureSpec,
    fit_log_residual,
    read_summary,
    read_timeseries,
    render,
)


def write_csv(path, rows):
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def exponential_rows(delta=0.8, q0=2.0, n=40):
    rows = []
    for i in range(n):
        t = 0.1 * i
        e = q0 * np.exp(-delta * t)
        rows.append([t, e, 0.5 * e, e, 3 * e, 0.0, 0.5 * e, 0.0])
    return rows


class TestReadTimeseries:
    def test_header_only(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text(CSV_HEADER + "\n")
        cols = read_timeseries(p)
        assert len(cols["t"]) == 0

    def test_bad_header_line_one(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("nope\n")
        with pytest.raises(FigureError, match=":1:"):
            read_timeseries(p)

    def test_bad_row_names_line(self, tmp_path):
        p = tmp_path / "row.csv"
        p.write_text(CSV_HEADER + "\n1,2\n")
        with pytest.raises(FigureError, match=":2:"):
            read_timeseries(p)

    def test_non_numeric_names_line(self, tmp_path):
        p = tmp_path / "nn.csv"
        good = ",".join(["1"] * 8)
        bad = ",".join(["1"] * 7 + ["x"])
        p.write_text(CSV_HEADER + "\n" + good + "\n" + bad + "\n")
        with pytest.raises(FigureError, match=":3:"):
            read_timeseries(p)

    def test_roundtrip_values(self, tmp_path):
        p = tmp_path / "vals.csv"
        rows = exponential_rows(n=5)
        write_csv(p, rows)
        cols = read_timeseries(p)
        assert np.array_equal(cols["E"], [r[1] for r in rows])


class TestRenderDecay:
    def test_header_only_gives_empty_axes(self, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text(CSV_HEADER + "\n")
        out = tmp_path / "fig.png"
        render(FigureSpec(kind="decay", inputs=[str(csv)], output=str(out)))
        assert out.is_file() and out.stat().st_size > 0

    def test_exact_exponential_fit_overlay(self, tmp_path):
        csv = tmp_path / "exp.csv"
        write_csv(csv, exponential_rows(delta=0.8, q0=2.0))
        summary = tmp_path / "summary.jsonl"
        summary.write_text(json.dumps({
            "suite": "uniform_decay", "params_hash": "x", "pass": True,
            "fits": {"E": {"delta_hat": 0.8, "lnC_hat": 0.0,
                           "r_squared": 1.0, "window": [0, 3.9]},
                     "h1_sq": {"delta_hat": 0.8, "lnC_hat": 0.0,
                               "r_squared": 1.0, "window": [0, 3.9]}},
            "details": {}, "reports": {},
        }) + "\n")
        out = tmp_path / "fig.png"
        render(FigureSpec(kind="decay", inputs=[str(csv)], output=str(out),
                          summary=str(summary), suite="uniform_decay"))
        assert out.is_file() and out.stat().st_size > 0
        # exact exponential input: the annotated residual is zero
        cols = read_timeseries(csv)
        resid = fit_log_residual(cols["t"], cols["E"],
                                 {"delta_hat": 0.8, "lnC_hat": 0.0})
        assert resid < 1e-12

    def test_deterministic_bytes(self, tmp_path):
        csv = tmp_path / "exp.csv"
        write_csv(csv, exponential_rows())
        out1, out2 = tmp_path / "a.png", tmp_path / "b.png"
        for out in (out1, out2):
            render(FigureSpec(kind="decay", inputs=[str(csv)], output=str(out)))
        assert out1.read_bytes() == out2.read_bytes()


class TestRenderDrift:
    def test_renders(self, tmp_path):
        csv = tmp_path / "c.csv"
        write_csv(csv, exponential_rows(delta=0.0))
        out = tmp_path / "drift.png"
        render(FigureSpec(kind="drift", inputs=[str(csv)], output=str(out)))
        assert out.is_file()


class TestRenderKato:
    def test_from_summary(self, tmp_path):
        summary = tmp_path / "summary.jsonl"
        summary.write_text(json.dumps({
            "suite": "smoothing", "params_hash": "x", "pass": True, "fits": {},
            "details": {"kato_lhs_undamped": 2.8, "kato_rhs_undamped": 37.5,
                        "kato_lhs_localized": 2.1, "kato_rhs_localized": 36.9,
                        "kato_residual_undamped": 4.7e-6,
                        "kato_residual_localized": 4.7e-6},
            "reports": {},
        }) + "\n")
        out = tmp_path / "kato.png"
        render(FigureSpec(kind="kato", output=str(out), summary=str(summary)))
        assert out.is_file()

    def test_missing_summary_rejected(self, tmp_path):
        with pytest.raises(FigureError, match="summary"):
            render(FigureSpec(kind="kato", output=str(tmp_path / "x.png")))


class TestRenderObservability:
    def test_from_summary(self, tmp_path):
        table = {f"T={t},L={l}": 1.0 + 0.1 * t * l
                 for t in (2.0, 5.0) for l in (0.5, 1.0)}
        summary = tmp_path / "summary.jsonl"
        summary.write_text(json.dumps({
            "suite": "observability", "params_hash": "x", "pass": True,
            "fits": {}, "details": {},
            "reports": {"max_ratio_table": table},
        }) + "\n")
        out = tmp_path / "obs.png"
        render(FigureSpec(kind="observability", output=str(out),
                          summary=str(summary)))
        assert out.is_file()


class TestSummaryReader:
    def test_picks_suite_record(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text(
            json.dumps({"suite": "a", "x": 1}) + "\n"
            + json.dumps({"suite": "b", "x": 2}) + "\n"
        )
        assert read_summary(p, "b")["x"] == 2
        with pytest.raises(FigureError, match="no record"):
            read_summary(p, "c")

    def test_invalid_json_names_line(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text('{"suite": "a"}\n{broken\n')
        with pytest.raises(FigureError, match=":2:"):
            read_summary(p)


@pytest.fixture(scope="module")
def suite_outputs(tmp_path_factory):
    """Genuine artifacts produced by driving the primary CLI."""
    out = tmp_path_factory.mktemp("primary_out")
    cfg = tmp_path_factory.mktemp("cfg") / "reduced.ini"
    cfg.write_text(
        "[uniform-decay]\npoints = 64\ndt = 0.005\nt_end = 0.5\nwidth = 2.0\n"
    )
    proc = subprocess.run(
        [sys.executable, "-m", "zkdamp.cli", "uniform-decay",
         "--config", str(cfg), "--out", str(out), "--quiet"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


class TestEndToEnd:
    """Render the primary's genuine artifacts."""

    def test_render_suite_csv(self, suite_outputs, tmp_path):
        out = tmp_path / "uniform.png"
        render(FigureSpec(
            kind="decay",
            inputs=[str(suite_outputs / "uniform_decay.csv")],
            output=str(out),
            summary=str(suite_outputs / "summary.jsonl"),
            suite="uniform_decay",
        ))
        assert out.is_file() and out.stat().st_size > 0

    def test_fitted_slope_matches_summary_to_printed_precision(self, suite_outputs):
        rec = read_summary(suite_outputs / "summary.jsonl", "uniform_decay")
        cols = read_timeseries(suite_outputs / "uniform_decay.csv")
        delta = rec["fits"]["E"]["delta_hat"]
        # annotation prints %.6g of delta_hat; refitting the CSV must agree
        t, q = cols["t"], cols["E"]
        slope = np.polyfit(t, np.log(q), 1)[0]
        assert f"{-slope:.6g}" == f"{delta:.6g}"

    def test_cli_renders(self, suite_outputs, tmp_path):
        from zkplots.cli import main

        out = tmp_path / "cli.png"
        code = main([
            "render", "--kind", "decay",
            "--in", str(suite_outputs / "uniform_decay.csv"),
            "--summary", str(suite_outputs / "summary.jsonl"),
            "--suite", "uniform_decay",
            "--out", str(out),
        ])
        assert code == 0 and out.is_file()

    def test_cli_error_on_malformed(self, tmp_path):
        from zkplots.cli import main

        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,contract\n")
        code = main(["render", "--kind", "decay", "--in", str(bad),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2
