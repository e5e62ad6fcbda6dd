"""Rendering regression: series counts, determinism, golden image."""

import json
import os

import numpy as np
import pytest

import matplotlib.image as mpimg

from blerplot import PlotSpec, build_figure, load_rows, render
from blerplot.render import PlotError

HERE = os.path.dirname(__file__)
FIXTURE = os.path.join(HERE, "data", "fig3_fixture.csv")
GOLDEN = os.path.join(HERE, "golden", "fig3.png")
REFS = os.path.join(HERE, "..", "src", "blerplot", "data", "published_points.json")


def fig3_spec(out_path):
    return PlotSpec(csv_paths=[FIXTURE], out_path=str(out_path),
                    group_by=("algo", "K"), title="mad vs parallel mad")


class TestLoading:
    def test_loads_fixture(self):
        rows = load_rows([FIXTURE])
        assert len(rows) == 30
        assert {r["algo"] for r in rows} == {"mad", "pmad"}

    def test_schema_mismatch_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(PlotError):
            load_rows([bad])

    def test_row_width_mismatch_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        header = ("scheme,dict_kind,N,L,K,M,algo,T,ebn0_db,trials,block_errors,"
                  "bler,ci_low,ci_high,seed,wall_time")
        bad.write_text(header + "\nssc,mub,64\n")
        with pytest.raises(PlotError):
            load_rows([bad])


class TestFigure:
    def test_six_series_with_error_bars(self, tmp_path):
        fig, curves = build_figure(fig3_spec(tmp_path / "f.png"))
        assert len(curves) == 6
        assert sorted(curves) == ["algo=mad K=1", "algo=mad K=3", "algo=mad K=5",
                                  "algo=pmad K=1", "algo=pmad K=3", "algo=pmad K=5"]
        ax = fig.axes[0]
        assert len(ax.containers) == 6  # one errorbar container per series
        assert ax.get_yscale() == "log"

    def test_single_point_csv(self, tmp_path):
        csv = tmp_path / "one.csv"
        header = ("scheme,dict_kind,N,L,K,M,algo,T,ebn0_db,trials,block_errors,"
                  "bler,ci_low,ci_high,seed,wall_time")
        csv.write_text(header + "\nssc,mub,64,4096,1,4,mad,1,5.0,1000,10,"
                                "0.01,0.005,0.018,7,1.0\n")
        fig, curves = build_figure(PlotSpec(csv_paths=[csv], out_path="x.png"))
        assert len(curves) == 1
        container = fig.axes[0].containers[0]
        assert container.has_yerr

    def test_reference_overlay(self, tmp_path):
        spec = fig3_spec(tmp_path / "f.png")
        spec.ref_path = REFS
        fig, curves = build_figure(spec)
        labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
        assert any("Golay" in label for label in labels)
        assert len(labels) == 6 + len(json.load(open(REFS))["references"])

    def test_filters(self, tmp_path):
        spec = fig3_spec(tmp_path / "f.png")
        spec.filters = {"algo": "pmad"}
        _, curves = build_figure(spec)
        assert len(curves) == 3

    def test_empty_selection_rejected(self, tmp_path):
        spec = fig3_spec(tmp_path / "f.png")
        spec.filters = {"algo": "turbo"}
        with pytest.raises(PlotError):
            build_figure(spec)

    def test_unknown_group_column_rejected(self, tmp_path):
        spec = fig3_spec(tmp_path / "f.png")
        spec.group_by = ("window",)
        with pytest.raises(PlotError):
            build_figure(spec)


class TestDeterminismAndGolden:
    def test_repeat_renders_identical_bytes(self, tmp_path):
        a = render(fig3_spec(tmp_path / "a.png"))
        b = render(fig3_spec(tmp_path / "b.png"))
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_golden_image(self, tmp_path):
        out = render(fig3_spec(tmp_path / "fig3.png"))
        got = mpimg.imread(out)
        want = mpimg.imread(GOLDEN)
        assert got.shape == want.shape
        assert np.array_equal(got, want)


class TestCli:
    def test_end_to_end(self, tmp_path, capsys):
        from blerplot.cli import main
        out = tmp_path / "cli.png"
        code = main(["--csv", FIXTURE, "--group", "algo,K", "--ref", REFS,
                     "--out", str(out)])
        assert code == 0
        assert out.exists() and out.stat().st_size > 10_000

    def test_usage_error(self, capsys):
        from blerplot.cli import main
        assert main(["--csv", "x.csv"]) == 2  # missing --out

    def test_domain_error(self, tmp_path, capsys):
        from blerplot.cli import main
        assert main(["--csv", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path / "o.png")]) == 1
