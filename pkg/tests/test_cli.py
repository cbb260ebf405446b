"""End-to-end tests of the command-line frontend."""
import json

import numpy as np
import pytest
import yaml

from cli.main import build_parser, main, resolve_config
from src.core import load_config
from src.ingestion.dataset import EmbeddingSet, make_attributes, save_attributes, save_embeddings

ANALYSES = ["verify", "ablate", "anova", "correlate", "decode-gender", "decode-view",
            "pca", "windows", "directions", "alignment"]
SMALL_FLAGS = ["--sizes", "12,6,2", "--replicates", "2", "--held-out", "6",
               "--permutations", "5", "--window", "4"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run inside tmp_path with a small synthetic configuration."""
    monkeypatch.chdir(tmp_path)
    settings = load_config()
    settings["synth"].update({"dim": 12, "n_identities": 24, "images_per_identity": [4, 4],
                              "sigma_gender": 1.0, "sigma_view": 1.0, "sigma_noise": 0.5})
    settings["logging"]["log_dir"] = str(tmp_path / "logs")
    config = tmp_path / "settings.yaml"
    config.write_text(yaml.safe_dump(settings), encoding="utf-8")
    return tmp_path, config


@pytest.fixture
def synth_inputs(workdir):
    """Synthetic embeddings and attributes written by the synth command."""
    root, config = workdir
    assert main(["synth", "--config", str(config), "--out", str(root / "data"), "--seed", "3"]) == 0
    data = root / "data" / "synth"
    return root, config, data / "embeddings.bin", data / "attributes.csv"


def _read_error(path):
    return json.loads((path / "error.json").read_text(encoding="utf-8"))


def test_synth_writes_dataset(synth_inputs):
    """synth produces embeddings, attributes, ground truth, summary and manifest."""
    root, _, embeddings, attributes = synth_inputs
    out = embeddings.parent
    for name in ("embeddings.bin", "attributes.csv", "ground_truth.json", "summary.json", "manifest.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_images"] == 96
    assert summary["n_units"] == 12
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert "embeddings.bin" in manifest["artifacts"]


def test_synth_is_reproducible(synth_inputs):
    """A second synth run with the same seed writes identical bytes."""
    root, config, embeddings, _ = synth_inputs
    assert main(["synth", "--config", str(config), "--out", str(root / "again"), "--seed", "3"]) == 0
    assert (root / "again" / "synth" / "embeddings.bin").read_bytes() == embeddings.read_bytes()


@pytest.mark.parametrize("command", ANALYSES)
def test_outputs_independent_of_threads(synth_inputs, command):
    """Every artifact is byte-identical with 1 and 2 worker threads."""
    root, config, embeddings, attributes = synth_inputs
    common = [command, "--config", str(config), "--embeddings", str(embeddings),
              "--attributes", str(attributes), *SMALL_FLAGS]
    assert main([*common, "--threads", "1", "--out", str(root / "one")]) == 0
    assert main([*common, "--threads", "2", "--out", str(root / "two")]) == 0

    first = sorted(p.name for p in (root / "one" / command).iterdir())
    second = sorted(p.name for p in (root / "two" / command).iterdir())
    assert first == second
    assert "manifest.json" in first and "summary.json" in first
    for name in first:
        assert (root / "one" / command / name).read_bytes() == (root / "two" / command / name).read_bytes(), name


def test_verify_summary(synth_inputs):
    """verify reports a strong AUC on planted identities."""
    root, config, embeddings, attributes = synth_inputs
    assert main(["verify", "--config", str(config), "--embeddings", str(embeddings),
                 "--attributes", str(attributes), "--out", str(root / "out")]) == 0
    summary = json.loads((root / "out" / "verify" / "summary.json").read_text())
    assert summary["auc"] > 0.8
    assert summary["genuine_pairs"] + summary["impostor_pairs"] == summary["comparisons"]


def test_named_profile_clips_sizes(synth_inputs):
    """With D=12 the named profile keeps only sizes up to 12."""
    root, config, embeddings, attributes = synth_inputs
    assert main(["ablate", "--config", str(config), "--embeddings", str(embeddings),
                 "--attributes", str(attributes), "--profile", "paper", "--replicates", "2",
                 "--out", str(root / "out")]) == 0
    plan = json.loads((root / "out" / "ablate" / "plan.json").read_text())
    assert plan["sizes"] == [8, 4, 2]


def test_sizes_above_dimension_fail_without_profile(synth_inputs):
    """Explicit sizes above D are a configuration error."""
    root, config, embeddings, attributes = synth_inputs
    code = main(["ablate", "--config", str(config), "--embeddings", str(embeddings),
                 "--attributes", str(attributes), "--sizes", "64", "--out", str(root / "out")])
    assert code == 2
    assert _read_error(root / "out" / "ablate")["exit_code"] == 2


def test_missing_attributes_flag(workdir, capsys):
    """Data commands without --attributes exit 2 with error JSON on stdout."""
    root, config = workdir
    code = main(["anova", "--config", str(config), "--embeddings", "whatever.bin", "--out", str(root / "out")])
    assert code == 2
    payload = json.loads(capsys.readouterr().out)
    assert payload["exit_code"] == 2
    assert payload["error"]
    assert _read_error(root / "out" / "anova") == payload


def test_missing_input_file(synth_inputs):
    """A nonexistent embeddings file is a data error."""
    root, config, _, attributes = synth_inputs
    code = main(["anova", "--config", str(config), "--embeddings", str(root / "nope.bin"),
                 "--attributes", str(attributes), "--out", str(root / "out")])
    assert code == 3


def test_nan_row_reported(workdir):
    """Malformed embeddings exit 3 and name the row."""
    root, config = workdir
    embeddings = root / "bad.csv"
    embeddings.write_text("image_id,u0,u1\na,1,2\nb,nan,3\n", encoding="utf-8")
    attributes = root / "attrs.csv"
    attributes.write_text("image_id,identity,gender,yaw\na,p,M,0\nb,q,F,0\n", encoding="utf-8")
    code = main(["anova", "--config", str(config), "--embeddings", str(embeddings),
                 "--attributes", str(attributes), "--out", str(root / "out")])
    assert code == 3
    assert _read_error(root / "out" / "anova")["row"] == 1


def test_single_gender_is_degenerate(workdir):
    """Gender decoding with one gender exits 4."""
    root, config = workdir
    rng = np.random.default_rng(0)
    ids = [f"i{k}" for k in range(40)]
    save_embeddings(EmbeddingSet(rng.standard_normal((40, 4)), ids), root / "e.bin")
    save_attributes(make_attributes(ids, [f"p{k // 4}" for k in range(40)], ["M"] * 40,
                                    rng.uniform(-90, 90, 40)), root / "a.csv")
    code = main(["decode-gender", "--config", str(config), "--embeddings", str(root / "e.bin"),
                 "--attributes", str(root / "a.csv"), "--held-out", "2", "--sizes", "4",
                 "--replicates", "1", "--permutations", "2", "--out", str(root / "out")])
    assert code == 4


def test_report_bundles_summaries(synth_inputs):
    """report collects summaries and inline SVG figures."""
    root, config, embeddings, attributes = synth_inputs
    out = root / "out"
    assert main(["anova", "--config", str(config), "--embeddings", str(embeddings),
                 "--attributes", str(attributes), "--plots", "--out", str(out)]) == 0
    assert (out / "anova" / "unit_effect_sizes.svg").exists()
    assert main(["report", "--config", str(config), "--out", str(out)]) == 0
    report = json.loads((out / "report" / "report.json").read_text())
    assert "anova" in report
    html = (out / "report" / "report.html").read_text()
    assert "<svg" in html


def test_report_without_results(workdir):
    """An empty output root has nothing to report."""
    root, config = workdir
    (root / "empty").mkdir()
    assert main(["report", "--config", str(config), "--out", str(root / "empty")]) == 2


def test_held_out_defaults():
    """Shipped settings hold out 30 identities; the model default and the named profile use 300."""
    parser = build_parser()
    common = ["decode-gender", "--embeddings", "e.bin", "--attributes", "a.csv"]
    assert resolve_config(parser.parse_args(common), {}).held_out == 300
    assert resolve_config(parser.parse_args(common), load_config()).held_out == 30
    profiled = parser.parse_args([*common, "--profile", "paper"])
    assert resolve_config(profiled, load_config()).held_out == 300
    explicit = parser.parse_args([*common, "--profile", "paper", "--held-out", "12"])
    assert resolve_config(explicit, load_config()).held_out == 12
