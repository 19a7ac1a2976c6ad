"""End-to-end tests for the command-line driver."""

import json

import numpy as np
import pytest

from hsikit.cli import (
    StageError,
    UsageError,
    exit_code_for,
    main,
    method_label,
    resolve_config,
)
from hsikit.errors import (
    ConvergenceError,
    DataFormatError,
    DegenerateDataError,
)
from hsikit.hsi_data import load_cube, load_ground_truth, save_cube, save_ground_truth
from hsikit.synthetic import gaussian_scene

ARTIFACTS = (
    "config.json",
    "report.json",
    "predictions.json",
    "model.json",
    "map.ppm",
    "timings.json",
)


@pytest.fixture
def scene(tmp_path):
    cube, gt = gaussian_scene(12, 12, 8, 3, seed=5)
    cube_path = save_cube(cube, tmp_path / "scene.hsih")
    gt_path = save_ground_truth(gt, tmp_path / "scene_gt.hsih")
    return str(cube_path), str(gt_path)


def run_dir_bytes(out_dir, skip_timings=True):
    blobs = {}
    for name in ARTIFACTS:
        if skip_timings and name == "timings.json":
            continue
        blobs[name] = (out_dir / name).read_bytes()
    return blobs


# ------------------------------------------------------------ resolve_config


def test_resolve_config_defaults():
    config = resolve_config({"cube": "a.hsih", "ground_truth": "b.hsih"}, {})
    assert config == {
        "cube": "a.hsih",
        "ground_truth": "b.hsih",
        "output": "hsikit_run",
        "train_fraction": 0.7,
        "seed": 0,
        "reduction": {"method": "none"},
        "classifier": {
            "kind": "svm",
            "params": {"c": 600.0, "gamma": 0.5, "tolerance": 1e-3, "max_iter": 100_000},
            "grid": None,
        },
    }


def test_resolve_config_flags_beat_file():
    file_config = {"cube": "a", "ground_truth": "b", "seed": 3, "output": "x"}
    config = resolve_config(file_config, {"seed": 9, "output": None})
    assert config["seed"] == 9
    assert config["output"] == "x"  # None override leaves the file value


def test_resolve_config_reduction_entries():
    base = {"cube": "a", "ground_truth": "b"}
    config = resolve_config({**base, "reduction": {"method": "pca", "components": 5}}, {})
    assert config["reduction"] == {"method": "pca", "components": 5}
    config = resolve_config({**base, "reduction": {"method": "rpca", "components": 4}}, {})
    assert config["reduction"] == {
        "method": "rpca",
        "components": 4,
        "oversampling": 10,
        "power_iterations": 2,
    }


def test_resolve_config_gbdt_defaults():
    base = {"cube": "a", "ground_truth": "b"}
    config = resolve_config({**base, "classifier": {"kind": "gbdt"}}, {})
    assert config["classifier"]["kind"] == "gbdt"
    assert config["classifier"]["params"]["num_trees"] == 200
    assert config["classifier"]["params"]["goss_top_rate"] == 0.2


def test_resolve_config_grid_true_fills_defaults():
    base = {"cube": "a", "ground_truth": "b"}
    config = resolve_config({**base, "classifier": {"kind": "svm", "grid": True}}, {})
    grid = config["classifier"]["grid"]
    assert grid["c"] == [1.0, 10.0, 100.0, 600.0, 1000.0]
    assert grid["gamma"] == [0.01, 0.1, 0.5, 1.0, 2.0]
    assert grid["folds"] == 5


@pytest.mark.parametrize(
    "mutation",
    [
        {"cube": None},
        {"train_fraction": 1.5},
        {"train_fraction": "lots"},
        {"reduction": {"method": "lda"}},
        {"reduction": {"method": "pca"}},  # missing components
        {"reduction": {"method": "pca", "components": 0}},
        {"reduction": "pca"},
        {"classifier": {"kind": "forest"}},
        {"classifier": {"kind": "svm", "params": {"cc": 1.0}}},
        {"classifier": {"kind": "svm", "params": {"c": -5.0}}},
        {"classifier": {"kind": "gbdt", "params": {"num_trees": 0}}},
        {"classifier": {"kind": "svm", "grid": "yes"}},
    ],
)
def test_resolve_config_rejects(mutation):
    base = {"cube": "a.hsih", "ground_truth": "b.hsih"}
    with pytest.raises(UsageError):
        resolve_config({**base, **mutation}, {})


def test_method_label():
    base = resolve_config({"cube": "a", "ground_truth": "b"}, {})
    assert method_label(base) == "svm/original"
    rpca = resolve_config(
        {"cube": "a", "ground_truth": "b", "reduction": {"method": "rpca", "components": 20}},
        {},
    )
    assert method_label(rpca) == "svm/rpca-20"
    gbdt = resolve_config(
        {
            "cube": "a",
            "ground_truth": "b",
            "reduction": {"method": "pca", "components": 3},
            "classifier": {"kind": "gbdt"},
        },
        {},
    )
    assert method_label(gbdt) == "gbdt/pca-3"


# ----------------------------------------------------------------------- run


def test_run_writes_artifacts_and_summary(scene, tmp_path, capsys):
    cube_path, gt_path = scene
    out = tmp_path / "out"
    code = main(
        ["run", "--cube", cube_path, "--gt", gt_path, "--output", str(out), "--seed", "1"]
    )
    assert code == 0
    for name in ARTIFACTS:
        assert (out / name).exists()
    report = json.loads((out / "report.json").read_text())
    assert report["schema"] == "hsikit/report/1"
    assert report["method"] == "svm/original"
    assert report["evaluation"]["overall_accuracy"] >= 0.9
    printed = capsys.readouterr().out
    assert "overall accuracy" in printed
    assert str(out) in printed


def test_run_deterministic_artifacts(scene, tmp_path):
    # The identical invocation repeated must reproduce every artifact
    # byte for byte; timings.json is the documented exception.
    cube_path, gt_path = scene
    out = tmp_path / "a"
    args = ["run", "--cube", cube_path, "--gt", gt_path, "--seed", "2", "--output", str(out)]
    assert main(args) == 0
    first = run_dir_bytes(out)
    assert main(args) == 0
    second = run_dir_bytes(out)
    assert first == second


def test_run_config_snapshot_reproduces(scene, tmp_path):
    # Feeding the emitted config.json back reproduces the run exactly.
    cube_path, gt_path = scene
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert (
        main(["run", "--cube", cube_path, "--gt", gt_path, "--output", str(out_a)]) == 0
    )
    snapshot = out_a / "config.json"
    rewritten = json.loads(snapshot.read_text())
    rewritten["output"] = str(out_b)
    config_b = tmp_path / "replay.json"
    config_b.write_text(json.dumps(rewritten))
    assert main(["run", "--config", str(config_b)]) == 0
    blobs_a = run_dir_bytes(out_a)
    blobs_b = run_dir_bytes(out_b)
    del blobs_a["config.json"], blobs_b["config.json"]  # paths differ
    assert blobs_a == blobs_b


def test_run_flags_override_config_file(scene, tmp_path):
    cube_path, gt_path = scene
    config_file = tmp_path / "c.json"
    config_file.write_text(
        json.dumps({"cube": cube_path, "ground_truth": gt_path, "seed": 0})
    )
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--output", str(out), "--seed", "7"]) == 0
    snapshot = json.loads((out / "config.json").read_text())
    assert snapshot["seed"] == 7


def test_run_with_pca_and_gbdt(scene, tmp_path):
    cube_path, gt_path = scene
    out = tmp_path / "out"
    code = main(
        [
            "run",
            "--cube", cube_path,
            "--gt", gt_path,
            "--output", str(out),
            "--reduction", "pca",
            "--components", "3",
            "--classifier", "gbdt",
            "--gbdt-trees", "8",
            "--gbdt-min-samples-leaf", "2",
            "--gbdt-bins", "16",
        ]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["method"] == "gbdt/pca-3"
    model = json.loads((out / "model.json").read_text())
    assert model["reduction"]["schema"] == "hsikit/pca-model/1"
    assert model["classifier"]["model"]["schema"] == "hsikit/gbdt-model/1"
    assert model["reduction"]["method"] == "exact"


def test_run_with_rpca_records_sketch(scene, tmp_path):
    cube_path, gt_path = scene
    out = tmp_path / "out"
    code = main(
        [
            "run",
            "--cube", cube_path,
            "--gt", gt_path,
            "--output", str(out),
            "--reduction", "rpca",
            "--components", "2",
            "--oversampling", "4",
        ]
    )
    assert code == 0
    model = json.loads((out / "model.json").read_text())
    assert model["reduction"]["method"] == "randomized"
    assert model["reduction"]["method_params"]["oversampling"] == 4


def test_run_failed_stage_leaves_no_artifacts(scene, tmp_path, capsys):
    _, gt_path = scene
    out = tmp_path / "out"
    code = main(
        ["run", "--cube", str(tmp_path / "missing.hsih"), "--gt", gt_path, "--output", str(out)]
    )
    assert code == 2
    assert "stage 'load' failed" in capsys.readouterr().err
    assert not out.exists()


def test_run_flag_conflicts(scene, tmp_path):
    cube_path, gt_path = scene
    base = ["run", "--cube", cube_path, "--gt", gt_path, "--output", str(tmp_path / "o")]
    assert main(base + ["--classifier", "gbdt", "--svm-c", "10"]) == 1
    assert main(base + ["--classifier", "svm", "--gbdt-trees", "5"]) == 1
    assert main(base + ["--svm-c", "10", "--gbdt-trees", "5"]) == 1
    assert main(base + ["--reduction", "pca"]) == 1  # no --components


# ------------------------------------------------------------------- compare


def make_run(scene, out, extra=()):
    cube_path, gt_path = scene
    args = ["run", "--cube", cube_path, "--gt", gt_path, "--output", str(out)]
    assert main(args + list(extra)) == 0


def test_compare_run_against_itself(scene, tmp_path, capsys):
    out = tmp_path / "a"
    make_run(scene, out)
    capsys.readouterr()
    code = main(["compare", str(out), str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "b=0 c=0" in printed
    assert "not significant" in printed


def test_compare_two_methods_json(scene, tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    make_run(scene, out_a)
    make_run(
        scene,
        out_b,
        extra=["--classifier", "gbdt", "--gbdt-trees", "8", "--gbdt-min-samples-leaf", "2"],
    )
    capsys.readouterr()
    code = main(["compare", str(out_a), str(out_b), "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["a"]["method"] == "svm/original"
    assert doc["b"]["method"] == "gbdt/original"
    assert set(doc["mcnemar"]) == {"b", "c", "statistic", "p_value", "significant_at_05", "method"}
    assert 0.0 <= doc["mcnemar"]["p_value"] <= 1.0


def test_compare_mismatched_seeds_rejected(scene, tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    make_run(scene, out_a, extra=["--seed", "1"])
    make_run(scene, out_b, extra=["--seed", "2"])
    capsys.readouterr()
    code = main(["compare", str(out_a), str(out_b)])
    assert code == 2
    assert "not comparable" in capsys.readouterr().err


def test_compare_missing_run_dir(tmp_path, capsys):
    code = main(["compare", str(tmp_path / "x"), str(tmp_path / "y")])
    assert code == 2


# --------------------------------------------------------------------- bench


def test_bench_output_shape(capsys):
    code = main(["bench", "--rows", "40", "--cols", "30", "--k", "3,5", "--repeats", "1"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "hsikit/bench/1"
    assert doc["rows"] == 40 and doc["cols"] == 30
    assert [r["k"] for r in doc["results"]] == [3, 5]
    for row in doc["results"]:
        assert row["exact_ms"] >= 0.0
        assert row["randomized_ms"] >= 0.0


def test_bench_writes_report_file(tmp_path, capsys):
    out = tmp_path / "bench.json"
    code = main(
        ["bench", "--rows", "30", "--cols", "20", "--k", "2", "--repeats", "1",
         "--output", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text()) == json.loads(capsys.readouterr().out)


def test_bench_rejects_bad_k(capsys):
    assert main(["bench", "--rows", "10", "--cols", "10", "--k", "11"]) == 1
    assert main(["bench", "--rows", "10", "--cols", "10", "--k", ""]) == 1
    assert main(["bench", "--rows", "0", "--cols", "10", "--k", "2"]) == 1


# ----------------------------------------------------------- convert/inspect


def test_convert_round_trip_all_orders(scene, tmp_path, capsys):
    cube_path, _ = scene
    cube = load_cube(cube_path)
    b, h, w = cube.values.shape
    bsq = cube.values
    bil = cube.values.transpose(1, 0, 2)  # height, bands, width
    bip = cube.values.transpose(1, 2, 0)  # height, width, bands
    payloads = {"bsq": bsq, "bil": bil, "bip": bip}
    outputs = {}
    for order, array in payloads.items():
        raw = tmp_path / f"raw_{order}.bin"
        raw.write_bytes(np.ascontiguousarray(array, dtype="<f4").tobytes())
        out = tmp_path / f"cube_{order}"
        code = main(
            ["convert", "--input", str(raw), "--height", str(h), "--width", str(w),
             "--bands", str(b), "--dtype", "f32", "--order", order, "--output", str(out)]
        )
        assert code == 0
        outputs[order] = out.with_suffix(".hsih")
    reference = outputs["bsq"].with_suffix(".hsir").read_bytes()
    for order in ("bil", "bip"):
        assert outputs[order].with_suffix(".hsir").read_bytes() == reference
    assert np.array_equal(load_cube(outputs["bip"]).values, cube.values)


def test_convert_ground_truth_with_names(tmp_path, capsys):
    labels = np.array([[0, 1], [2, 1]], dtype="<u2")
    raw = tmp_path / "gt.bin"
    raw.write_bytes(labels.tobytes())
    out = tmp_path / "gt"
    code = main(
        ["convert", "--input", str(raw), "--height", "2", "--width", "2", "--bands", "1",
         "--dtype", "u16", "--class-names", "water, trees", "--output", str(out)]
    )
    assert code == 0
    gt = load_ground_truth(out.with_suffix(".hsih"))
    assert np.array_equal(gt.labels, labels.astype(np.uint16))
    assert gt.class_names == ["water", "trees"]


def test_convert_single_pixel_cube(tmp_path):
    raw = tmp_path / "one.bin"
    raw.write_bytes(np.array([2.5], dtype="<f4").tobytes())
    out = tmp_path / "one"
    code = main(
        ["convert", "--input", str(raw), "--height", "1", "--width", "1", "--bands", "1",
         "--dtype", "f32", "--output", str(out)]
    )
    assert code == 0
    cube = load_cube(out.with_suffix(".hsih"))
    assert cube.values.shape == (1, 1, 1)
    assert cube.values[0, 0, 0] == np.float32(2.5)


def test_convert_size_mismatch(tmp_path, capsys):
    raw = tmp_path / "short.bin"
    raw.write_bytes(b"\x00" * 8)
    code = main(
        ["convert", "--input", str(raw), "--height", "2", "--width", "2", "--bands", "2",
         "--dtype", "f32", "--output", str(tmp_path / "x")]
    )
    assert code == 2
    assert "expected" in capsys.readouterr().err


def test_convert_u16_multiband_rejected(tmp_path):
    raw = tmp_path / "gt.bin"
    raw.write_bytes(b"\x00" * 8)
    code = main(
        ["convert", "--input", str(raw), "--height", "2", "--width", "1", "--bands", "2",
         "--dtype", "u16", "--output", str(tmp_path / "x")]
    )
    assert code == 1


def test_convert_too_few_class_names(tmp_path):
    labels = np.array([[3]], dtype="<u2")
    raw = tmp_path / "gt.bin"
    raw.write_bytes(labels.tobytes())
    code = main(
        ["convert", "--input", str(raw), "--height", "1", "--width", "1", "--bands", "1",
         "--dtype", "u16", "--class-names", "only,two", "--output", str(tmp_path / "x")]
    )
    assert code == 1


def test_inspect_cube_and_ground_truth(scene, capsys):
    cube_path, gt_path = scene
    code = main(["inspect", cube_path, gt_path])
    assert code == 0
    printed = capsys.readouterr().out
    assert "hyperspectral cube 12 x 12 pixels, 8 bands" in printed
    assert "ground truth 12 x 12 pixels, 3 classes" in printed
    assert "class_1" in printed


def test_inspect_ground_truth_without_names(tmp_path, capsys):
    from hsikit.hsi_data import GroundTruth

    gt = GroundTruth(1, 2, np.array([[1, 2]], dtype=np.uint16))
    path = save_ground_truth(gt, tmp_path / "gt.hsih")
    code = main(["inspect", str(path)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "2 classes" in printed
    assert "class_2" in printed  # fallback names


def test_inspect_missing_file(tmp_path, capsys):
    assert main(["inspect", str(tmp_path / "none.hsih")]) == 2


# ---------------------------------------------------------------- exit codes


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_missing_required_flag_is_usage_error(capsys):
    assert main(["bench", "--rows", "10"]) == 1
    assert main(["run"]) == 1  # no cube/ground truth anywhere


def test_exit_code_mapping():
    assert exit_code_for(UsageError("x")) == 1
    assert exit_code_for(DataFormatError("x")) == 2
    assert exit_code_for(DegenerateDataError("x")) == 2
    assert exit_code_for(ValueError("x")) == 2
    assert exit_code_for(OSError("x")) == 2
    assert exit_code_for(MemoryError()) == 2
    assert exit_code_for(ConvergenceError("x")) == 3
    assert exit_code_for(FloatingPointError("x")) == 3
    # StageError defers to its cause.
    assert exit_code_for(StageError("train", ConvergenceError("x"))) == 3
    assert exit_code_for(StageError("load", DataFormatError("x"))) == 2
