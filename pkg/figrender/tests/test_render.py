import json

import numpy as np
import pytest

from figrender import PlotSpec, RenderError, load_table, render
from figrender.cli import main


@pytest.fixture
def lines_csv(tmp_path):
    path = tmp_path / "lines.csv"
    rows = ["theta,a,b"]
    for k in range(12):
        t = k * 0.1
        rows.append(f"{t},{np.cos(t)},{np.sin(t)}")
    path.write_text("\n".join(rows) + "\n")
    return path


@pytest.fixture
def heatmap_csv(tmp_path):
    path = tmp_path / "grid.csv"
    rows = ["x,y,value"]
    for i in range(5):
        for j in range(5):
            v = "nan" if (i, j) == (2, 2) else repr((i - j) * 0.3)
            rows.append(f"{i},{j},{v}")
    path.write_text("\n".join(rows) + "\n")
    return path


class TestLoadTable:
    def test_parses_nan(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1.0,nan\n2.0,3.0\n")
        header, table = load_table(path)
        assert header == ["a", "b"]
        assert np.isnan(table["b"][0])

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(RenderError):
            load_table(path)

    def test_header_only_rejected(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("a,b\n")
        with pytest.raises(RenderError):
            load_table(path)


class TestRender:
    def test_lines_svg_and_png(self, lines_csv, tmp_path):
        for ext in ("svg", "png"):
            out = tmp_path / f"lines.{ext}"
            render(PlotSpec(csv_path=str(lines_csv), kind="lines", out_path=str(out)))
            assert out.stat().st_size > 0

    def test_heatmap_masks_nan(self, heatmap_csv, tmp_path):
        out = tmp_path / "grid.png"
        render(PlotSpec(csv_path=str(heatmap_csv), kind="heatmap", out_path=str(out)))
        assert out.stat().st_size > 0

    def test_pixel_identical_repeated_runs(self, lines_csv, heatmap_csv, tmp_path):
        for name, csv_path, kind in (
            ("l", lines_csv, "lines"),
            ("h", heatmap_csv, "heatmap"),
        ):
            for ext in ("svg", "png"):
                a = tmp_path / f"{name}_a.{ext}"
                b = tmp_path / f"{name}_b.{ext}"
                render(PlotSpec(csv_path=str(csv_path), kind=kind, out_path=str(a)))
                render(PlotSpec(csv_path=str(csv_path), kind=kind, out_path=str(b)))
                assert a.read_bytes() == b.read_bytes()

    def test_missing_column_rejected(self, lines_csv, tmp_path):
        with pytest.raises(RenderError):
            render(
                PlotSpec(
                    csv_path=str(lines_csv),
                    kind="lines",
                    out_path=str(tmp_path / "x.png"),
                    columns=("theta", "missing"),
                )
            )

    def test_bad_extension_rejected(self, lines_csv, tmp_path):
        with pytest.raises(RenderError):
            render(PlotSpec(csv_path=str(lines_csv), kind="lines", out_path=str(tmp_path / "x.pdf")))


class TestCli:
    def test_lines_exit_zero(self, lines_csv, tmp_path):
        out = tmp_path / "out.png"
        assert main(["--csv", str(lines_csv), "--kind", "lines", "--out", str(out)]) == 0
        assert out.exists()

    def test_style_file(self, heatmap_csv, tmp_path):
        style = tmp_path / "style.json"
        style.write_text(
            json.dumps(
                {
                    "columns": ["x", "y", "value"],
                    "title": "demo",
                    "cmap": "RdBu_r",
                    "dpi": 100,
                }
            )
        )
        out = tmp_path / "styled.png"
        code = main(
            ["--csv", str(heatmap_csv), "--kind", "heatmap", "--out", str(out), "--style", str(style)]
        )
        assert code == 0

    def test_empty_csv_nonzero_exit(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        out = tmp_path / "never.png"
        assert main(["--csv", str(empty), "--kind", "lines", "--out", str(out)]) == 1
        assert not out.exists()

    def test_unknown_style_key_rejected(self, lines_csv, tmp_path):
        style = tmp_path / "bad.json"
        style.write_text(json.dumps({"colours": []}))
        assert (
            main(
                [
                    "--csv", str(lines_csv),
                    "--kind", "lines",
                    "--out", str(tmp_path / "x.png"),
                    "--style", str(style),
                ]
            )
            == 1
        )
