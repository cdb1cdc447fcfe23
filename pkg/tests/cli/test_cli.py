import orjson
import pytest
from typer.testing import CliRunner

from fracseg.gridio.f2d import read_field, read_stack
from fracseg.gridio.pgm import read_mask
from fracseg.main import app

runner = CliRunner()


@pytest.fixture
def field_path(tmp_path):
    """A 64 x 64 two-region field written by the synth command."""
    path = tmp_path / "field.f2d"
    result = runner.invoke(app, ["synth", "--size", "64", "--h", "0.5,0.7", "--seed", "3",
                                 "--out", str(path), "--mask-out", str(tmp_path / "truth.pgm"),
                                 "--preview", str(tmp_path / "preview.pgm")])
    assert result.exit_code == 0, result.output
    return path


def _experiment_file(tmp_path, realizations=1):
    payload = {
        "synthesis": {
            "size": 64,
            "h_values": [0.5, 0.7],
            "seed": 0,
            "mask": {"size": 64, "shapes": [{"kind": "ellipse", "params": [32, 32, 19.2, 16]}]},
        },
        "methods": [{"method": "smooth", "params": [1.0, 3.0]}],
        "realizations": realizations,
        "output_dir": str(tmp_path / "bench"),
    }
    path = tmp_path / "experiment.json"
    path.write_bytes(orjson.dumps(payload))
    return path


def test_synth_outputs(field_path, tmp_path):
    assert read_field(field_path).shape == (64, 64)
    assert read_mask(tmp_path / "truth.pgm").q == 2
    assert (tmp_path / "preview.pgm").read_bytes().startswith(b"P5")


def test_leaders_estimate_segment_pipeline(field_path, tmp_path):
    leaders = tmp_path / "leaders.f2ds"
    result = runner.invoke(app, ["leaders", "--in", str(field_path), "--out", str(leaders)])
    assert result.exit_code == 0, result.output
    grids, j1, gamma = read_stack(leaders)
    assert (len(grids), j1, gamma) == (3, 1, 1.0)

    hhat = tmp_path / "hhat.f2d"
    result = runner.invoke(app, ["estimate", "--in", str(leaders), "--out", str(hhat), "--smooth", "1.5"])
    assert result.exit_code == 0, result.output
    assert read_field(hhat).shape == (32, 32)

    mask, h_out, report = tmp_path / "mask.pgm", tmp_path / "h.f2d", tmp_path / "report.json"
    result = runner.invoke(app, ["segment", "--method", "smooth", "--sigma-smooth", "2", "--q", "2",
                                 "--in", str(field_path), "--out", str(mask), "--hout", str(h_out),
                                 "--report", str(report)])
    assert result.exit_code == 0, result.output
    assert read_mask(mask).shape == (32, 32)
    saved = orjson.loads(report.read_bytes())
    assert saved["method"] == "smooth"
    assert saved["param"] == 2.0
    assert len(saved["thresholds"]) == 1


def test_segment_rms_from_grayscale_preview(field_path, tmp_path):
    result = runner.invoke(app, ["segment", "--method", "rms", "--lambda", "0.05",
                                 "--in", str(tmp_path / "preview.pgm"), "--out", str(tmp_path / "rms.pgm")])
    assert result.exit_code == 0, result.output
    assert read_mask(tmp_path / "rms.pgm").q == 2


def test_leaders_scale_overrides(field_path, tmp_path):
    out = tmp_path / "l.f2ds"
    result = runner.invoke(app, ["leaders", "--in", str(field_path), "--out", str(out), "--j1", "2", "--j2", "4"])
    assert result.exit_code == 0, result.output
    grids, j1, _ = read_stack(out)
    assert (len(grids), j1) == (3, 2)


@pytest.mark.parametrize(
    "args, code",
    [
        (["synth", "--size", "64", "--h", "0.5,1.2", "--out", "x.f2d"], 64),
        (["synth", "--size", "64", "--h", "0.5,abc", "--out", "x.f2d"], 64),
        (["segment", "--method", "tv", "--in", "field.f2d", "--out", "m.pgm"], 64),
        (["segment", "--method", "smooth", "--sigma-smooth", "2", "--in", "missing.f2d", "--out", "m.pgm"], 74),
        (["leaders", "--in", "field.f2d", "--out", "l.f2ds", "--j1", "3", "--j2", "2"], 64),
    ],
)
def test_exit_codes(field_path, tmp_path, monkeypatch, args, code):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(app, args)
    assert result.exit_code == code, result.output
    assert "error:" in result.output


def test_malformed_input_exit_code(tmp_path):
    bad = tmp_path / "bad.f2d"
    bad.write_bytes(b"XXXX" + bytes(16))
    result = runner.invoke(app, ["estimate", "--in", str(bad), "--out", str(tmp_path / "h.f2d")])
    assert result.exit_code == 65


def test_unknown_method_is_a_usage_error(tmp_path):
    result = runner.invoke(app, ["segment", "--method", "kmeans", "--in", "a.f2d", "--out", "m.pgm"])
    assert result.exit_code == 2


def test_bench_command(tmp_path):
    result = runner.invoke(app, ["bench", "--config", str(_experiment_file(tmp_path))])
    assert result.exit_code == 0, result.output
    report = orjson.loads((tmp_path / "bench" / "report.json").read_bytes())
    assert [s["runs"] for s in report["summaries"]] == [1, 1]
    assert (tmp_path / "bench" / "results.csv").is_file()


def test_bench_rejects_invalid_config(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_bytes(orjson.dumps({"methods": []}))
    result = runner.invoke(app, ["bench", "--config", str(path)])
    assert result.exit_code == 64


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(app, ["sweep-dh", "--config", str(_experiment_file(tmp_path)), "--h1", "0.4",
                                 "--deltas", "0.1,0.4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "smooth:" in result.output
    assert (out / "sweep.json").is_file()
