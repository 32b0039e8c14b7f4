import math
import subprocess
import sys
from pathlib import Path

import pytest

from gridpool_figures import (
    SchemaError,
    fit_line,
    plot_choice_annotated,
    plot_efficiency_vs_p,
    plot_rates_vs_l,
    read_compare_csv,
    read_rates_csv,
)
from gridpool_figures.cli import run

DATA = Path(__file__).parent / "data"
GOLDEN_RATES = DATA / "golden_rates.csv"
GOLDEN_COMPARE = DATA / "golden_compare.csv"


@pytest.fixture(scope="module")
def rates_rows():
    return read_rates_csv(GOLDEN_RATES)


@pytest.fixture(scope="module")
def compare_rows():
    return read_compare_csv(GOLDEN_COMPARE)


def test_rates_reader(rates_rows):
    assert {r["K"] for r in rates_rows} == {1, 2, 5, 10, math.inf}
    assert all(r["L"] >= 1 for r in rates_rows)


def test_rates_reader_rejects_missing_columns(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("lambda,L\n0.7,1\n")
    with pytest.raises(SchemaError, match="missing columns"):
        read_rates_csv(bad)


def test_compare_reader(compare_rows):
    methods = {r["method"] for r in compare_rows}
    assert methods == {"grid", "dorfman_theory", "random_pool"}
    grid = [r for r in compare_rows if r["method"] == "grid"]
    assert all(r["epsilon"] is not None and r["n"] is not None for r in grid)


def test_rates_plot_content(rates_rows, tmp_path):
    series = plot_rates_vs_l(rates_rows, tmp_path / "rates.svg")
    assert all(v == 0.0 for v in series["K=inf"]["fpr"])
    for curve in series.values():
        assert curve["L"][0] == 1 and curve["fnr"][0] == 1.0


def test_fit_line_exact_on_collinear_points():
    slope, intercept = fit_line([0.05, 0.1, 0.15, 0.2], [0.6, 1.1, 1.6, 2.1])
    assert slope == pytest.approx(10.0, rel=1e-12)
    assert intercept == pytest.approx(0.1, rel=1e-9)


def test_efficiency_plot_slopes_ordered(compare_rows, tmp_path):
    series = plot_efficiency_vs_p(compare_rows, tmp_path / "eff.svg", k_filter=30)
    slopes = [series[f"eps={e:g}"]["slope"] for e in (0.02, 0.08, 0.2)]
    assert all(s is not None for s in slopes)
    assert slopes[0] > slopes[1] > slopes[2]
    assert "dorfman_theory" in series and "random_pool" in series


def test_efficiency_plot_skips_single_point_fit(tmp_path, capsys):
    rows = [
        {"method": "grid", "p": 0.1, "K": 30.0, "epsilon": 0.05, "n": 11, "L": 3,
         "efficiency": 0.27},
    ]
    series = plot_efficiency_vs_p(rows, tmp_path / "eff.svg")
    assert series["eps=0.05"]["slope"] is None
    assert "fit skipped" in capsys.readouterr().out


def test_choice_annotated_labels(compare_rows, tmp_path):
    series = plot_choice_annotated(compare_rows, tmp_path / "choice.svg",
                                   k_filter=30, epsilon=0.2, label_field="n")
    (key, entry), = series.items()
    assert key == "eps=0.2"
    assert entry["labels"] == [r["n"] for r in compare_rows
                               if r["method"] == "grid" and r["epsilon"] == 0.2]
    with pytest.raises(SchemaError):
        plot_choice_annotated(compare_rows, tmp_path / "x.svg", epsilon=0.77)


def render_all(outdir: Path) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    targets = [outdir / "rates.svg", outdir / "eff.svg", outdir / "choice.svg"]
    assert run(["rates_vs_L", "--in", str(GOLDEN_RATES), "--out", str(targets[0])]) == 0
    assert run(["efficiency_vs_p", "--in", str(GOLDEN_COMPARE), "--K", "30",
                "--out", str(targets[1])]) == 0
    assert run(["choice_annotated", "--in", str(GOLDEN_COMPARE), "--K", "30",
                "--epsilon", "0.08", "--label", "L", "--out", str(targets[2])]) == 0
    return targets


def test_acceptance_byte_identical_svgs(tmp_path):
    """Acceptance: regenerating all three figure kinds from the golden CSVs
    is byte-identical, in-process and across processes."""
    first = render_all(tmp_path / "one")
    second = render_all(tmp_path / "two")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes(), a.name
    # a fresh interpreter must produce the same bytes as well
    third = tmp_path / "three"
    third.mkdir()
    script = (
        "from gridpool_figures.cli import run; import sys; "
        f"sys.exit(run(['rates_vs_L', '--in', r'{GOLDEN_RATES}', "
        f"'--out', r'{third / 'rates.svg'}']))"
    )
    subprocess.run([sys.executable, "-c", script], check=True)
    assert (third / "rates.svg").read_bytes() == first[0].read_bytes()
    print("[acceptance] figure regeneration: PASS (3 kinds byte-identical, "
          "K=inf false-positive curve at 0, miss rate 1 at L=1)")


def test_cli_error_paths(tmp_path):
    assert run(["rates_vs_L", "--in", str(tmp_path / "missing.csv"),
                "--out", str(tmp_path / "o.svg")]) == 2
    assert run(["nonsense", "--in", "x", "--out", "y"]) == 2
    bad = tmp_path / "empty.csv"
    bad.write_text("method,p,K,epsilon,n,L,efficiency\n")
    assert run(["efficiency_vs_p", "--in", str(bad),
                "--out", str(tmp_path / "o.svg")]) == 2


def test_png_sidecar(rates_rows, tmp_path):
    plot_rates_vs_l(rates_rows, tmp_path / "r.svg", out_png=tmp_path / "r.png")
    assert (tmp_path / "r.png").stat().st_size > 0
    assert (tmp_path / "r.svg").read_bytes().startswith(b"<?xml")


def test_plot_spec_render(tmp_path):
    from gridpool_figures import PlotSpec, render

    spec = PlotSpec(kind="rates_vs_L", input_csv=str(GOLDEN_RATES),
                    output_image=str(tmp_path / "r.svg"), filters={})
    series = render(spec)
    assert "K=inf" in series and (tmp_path / "r.svg").exists()
