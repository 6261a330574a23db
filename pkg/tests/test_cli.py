import json
import re
from pathlib import Path

import numpy as np
import pytest

from genmetric.cli import main
from genmetric.config import ConfigError, load_experiment_config

from conftest import write_config

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*argv):
    return main([str(a) for a in argv])


def strip_timestamp(text: str) -> str:
    return re.sub(r'^\s*"timestamp": .*$', "", text, flags=re.MULTILINE)


class TestConfigValidation:
    def test_missing_config_file(self, tmp_path, capsys):
        code = run_cli("evaluate", tmp_path / "nope.json")
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_dataset_no_partial_outputs(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        cfg = write_config(tmp_path / "c.json", tmp_path / "missing-ds",
                           out_dir=str(out_dir))
        code = run_cli("evaluate", cfg)
        assert code == 2
        assert not out_dir.exists()
        assert "dataset" in capsys.readouterr().err

    def test_unknown_generator_kind(self, tmp_path, triangle_dataset_dir):
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           generator={"kind": "diffusion"})
        assert run_cli("evaluate", cfg) == 2

    def test_top_k_exceeding_classes(self, tmp_path, triangle_dataset_dir):
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir, top_k=7,
                           out_dir=str(tmp_path / "out"))
        assert run_cli("evaluate", cfg) == 2
        assert not (tmp_path / "out").exists()

    def test_explicit_train_test_dirs(self, tmp_path, triangle_dataset_dir):
        cfg_data = {"train": str(triangle_dataset_dir), "test": str(triangle_dataset_dir)}
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           dataset=cfg_data, out_dir=str(tmp_path / "out"))
        parsed = load_experiment_config(cfg)
        assert parsed.dataset == cfg_data

    def test_classifier_key_typo_rejected(self, tmp_path, triangle_dataset_dir):
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           classifier={"epocs": 3})
        with pytest.raises(ConfigError, match="classifier"):
            load_experiment_config(cfg)


@pytest.fixture(scope="module")
def memorizer_run(tmp_path_factory, triangle_dataset_dir):
    tmp = tmp_path_factory.mktemp("memorizer")
    out = tmp / "out"
    cfg = write_config(tmp / "c.json", triangle_dataset_dir,
                       generator={"kind": "memorizer", "mode": "identity"},
                       out_dir=str(out))
    assert run_cli("evaluate", cfg) == 0
    return out


class TestEvaluateCommand:
    def test_outputs_exist(self, memorizer_run):
        for name in ("report.json", "summary.csv", "per_class.csv", "per_class.svg"):
            assert (memorizer_run / name).is_file()

    def test_memorizer_cas_equals_baseline(self, memorizer_run):
        report = json.loads((memorizer_run / "report.json").read_text())
        assert report["cas_top1"] == report["baseline_top1"]
        assert report["cas_topk"] == report["baseline_topk"]
        assert all(row["gap"] == 0.0 for row in report["per_class"])

    def test_report_carries_config_and_seeds(self, memorizer_run):
        report = json.loads((memorizer_run / "report.json").read_text())
        assert report["config"]["generator"]["kind"] == "memorizer"
        for key in ("master", "split", "classifier", "replacement"):
            assert key in report["seeds"]
        assert report["embedder"]["kind"] == "penultimate"

    def test_summary_schema(self, memorizer_run):
        lines = (memorizer_run / "summary.csv").read_text().splitlines()
        assert lines[0] == GOLDEN.joinpath("summary_header.csv").read_text().strip()
        keys = [line.split(",")[0] for line in lines[1:]]
        for expected in ("run_id", "k", "baseline_top1", "baseline_topk",
                         "cas_top1", "cas_topk", "is_mean", "is_std", "fid", "kid"):
            assert expected in keys

    def test_per_class_schema(self, memorizer_run):
        lines = (memorizer_run / "per_class.csv").read_text().splitlines()
        assert lines[0] == GOLDEN.joinpath("per_class_header.csv").read_text().strip()
        assert len(lines) == 1 + 3  # header + one row per class
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == 5
            assert cells[4] in ("true", "false")

    def test_rerun_byte_identical_modulo_timestamp(self, tmp_path, triangle_dataset_dir,
                                                   memorizer_run):
        out2 = tmp_path / "out2"
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           generator={"kind": "memorizer", "mode": "identity"},
                           out_dir=str(out2))
        assert run_cli("evaluate", cfg) == 0
        a = (memorizer_run / "report.json").read_text()
        b = (out2 / "report.json").read_text()
        assert strip_timestamp(a) == strip_timestamp(b)
        assert a != b or json.loads(a)["timestamp"] == json.loads(b)["timestamp"]
        assert (memorizer_run / "summary.csv").read_text() == (out2 / "summary.csv").read_text()
        assert (memorizer_run / "per_class.csv").read_text() == (out2 / "per_class.csv").read_text()
        assert (memorizer_run / "per_class.svg").read_bytes() == (out2 / "per_class.svg").read_bytes()

    def test_out_dir_flag_overrides(self, tmp_path, triangle_dataset_dir):
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           generator={"kind": "memorizer"},
                           out_dir=str(tmp_path / "from-config"))
        flag_dir = tmp_path / "from-flag"
        assert run_cli("evaluate", cfg, "--out-dir", flag_dir) == 0
        assert flag_dir.is_dir()
        assert not (tmp_path / "from-config").exists()

    def test_per_class_fid_opt_in(self, tmp_path, triangle_dataset_dir):
        out = tmp_path / "out"
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           metrics={"per_class_fid": True}, out_dir=str(out))
        with pytest.warns(UserWarning, match="small-sample bias"):
            assert run_cli("evaluate", cfg) == 0
        report = json.loads((out / "report.json").read_text())
        assert len(report["per_class_fid"]) == 3
        assert all(row["fid"] >= 0.0 for row in report["per_class_fid"])
        assert "bias" in report["per_class_fid_note"]

    def test_per_class_fid_off_by_default(self, memorizer_run):
        report = json.loads((memorizer_run / "report.json").read_text())
        assert report["per_class_fid"] is None

    def test_training_divergence_exits_3(self, tmp_path, triangle_dataset_dir, capsys):
        cfg = write_config(
            tmp_path / "c.json", triangle_dataset_dir,
            classifier={"hidden_widths": [32], "epochs": 30, "peak_lr": 1e9,
                        "warmup_epochs": 1, "decay_epochs": []},
            out_dir=str(tmp_path / "out"),
        )
        with np.errstate(all="ignore"):
            code = run_cli("evaluate", cfg)
        assert code == 3
        assert "runtime error" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_nas_and_gan_test_sections(self, tmp_path, triangle_dataset_dir):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "c.json", triangle_dataset_dir,
            metrics={"nas": True, "gan_test": True},
            nas_fractions=[0.25, 0.5],
            gan_test_size=300,
            out_dir=str(out),
        )
        assert run_cli("evaluate", cfg) == 0
        report = json.loads((out / "report.json").read_text())
        assert [row["fraction"] for row in report["nas"]] == [0.25, 0.5]
        assert 0.0 <= report["gan_test_top1"] <= 1.0
        assert (out / "nas.svg").is_file()


class TestBaselineCommand:
    def test_baseline_without_generator(self, tmp_path, triangle_dataset_dir):
        out = tmp_path / "out"
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir, out_dir=str(out))
        raw = json.loads(cfg.read_text())
        del raw["generator"]
        cfg.write_text(json.dumps(raw))
        assert run_cli("baseline", cfg) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["cas_top1"] is None
        assert report["baseline_top1"] > 0.5


def sweep_config(tmp_path, dataset_dir, grid, out):
    weights, biases = [], []
    for k in range(3):
        ang = 2 * np.pi * k / 3
        radial = [np.cos(ang), np.sin(ang)]
        tangent = [-np.sin(ang), np.cos(ang)]
        weights.append(np.column_stack([np.multiply(2.0, tangent),
                                        np.multiply(0.3, radial)]).tolist())
        biases.append(np.multiply(1.5, radial).tolist())
    return write_config(
        tmp_path / "sweep.json", dataset_dir,
        generator={"kind": "truncated_latent", "weights": weights, "biases": biases,
                   "truncation": 2.0},
        sweep={"variable": "truncation", "grid": grid},
        out_dir=str(out),
    )


class TestSweepCommand:
    def test_grid_echoed_in_order(self, tmp_path, triangle_dataset_dir):
        out = tmp_path / "out"
        cfg = sweep_config(tmp_path, triangle_dataset_dir, [1.0, 0.2, 2.0], out)
        assert run_cli("sweep", cfg) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == GOLDEN.joinpath("sweep_header.csv").read_text().strip()
        grid_col = [float(line.split(",")[0]) for line in lines[1:]]
        assert grid_col == [1.0, 0.2, 2.0]
        assert (out / "sweep.svg").is_file()

    def test_single_point_grid_flags_undefined_correlations(self, tmp_path,
                                                            triangle_dataset_dir):
        out = tmp_path / "out1"
        cfg = sweep_config(tmp_path, triangle_dataset_dir, [1.0], out)
        assert run_cli("sweep", cfg) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["pearson_cas_top1_vs_fid"] is None
        assert report["pearson_defined"] is False
        summary = (out / "summary.csv").read_text()
        assert "pearson_defined,false" in summary

    def test_sweep_requires_truncated_latent(self, tmp_path, triangle_dataset_dir):
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           sweep={"variable": "truncation", "grid": [0.5, 1.0]})
        assert run_cli("sweep", cfg) == 2

    def test_threads_match_sequential(self, tmp_path, triangle_dataset_dir):
        out_seq = tmp_path / "seq"
        out_par = tmp_path / "par"
        cfg_seq = sweep_config(tmp_path, triangle_dataset_dir, [0.5, 2.0], out_seq)
        assert run_cli("sweep", cfg_seq) == 0
        cfg_par = sweep_config(tmp_path, triangle_dataset_dir, [0.5, 2.0], out_par)
        assert run_cli("sweep", cfg_par, "--threads", 2) == 0
        assert (out_seq / "sweep.csv").read_text() == (out_par / "sweep.csv").read_text()


class TestPlotCommand:
    def test_per_class_svg_structure(self, tmp_path):
        csv_path = tmp_path / "per_class.csv"
        csv_path.write_text(
            "class,model_acc,real_acc,gap,flag_zero\n"
            "2,0.0,0.9,-0.9,true\n"
            "0,0.8,0.85,-0.05,false\n"
            "1,0.95,0.9,0.05,false\n"
        )
        assert run_cli("plot", csv_path) == 0
        svg = (tmp_path / "per_class.svg").read_text()
        assert svg.count("<rect") == 2 * 3
        assert "#1f77b4" in svg and "#d62728" in svg

    def test_plot_deterministic_bytes(self, tmp_path):
        csv_path = tmp_path / "per_class.csv"
        csv_path.write_text(
            "class,model_acc,real_acc,gap,flag_zero\n0,0.5,0.75,-0.25,false\n"
            "1,0.9,0.8,0.1,false\n"
        )
        assert run_cli("plot", csv_path, "--out-dir", tmp_path / "a") == 0
        assert run_cli("plot", csv_path, "--out-dir", tmp_path / "b") == 0
        assert (tmp_path / "a" / "per_class.svg").read_bytes() == \
               (tmp_path / "b" / "per_class.svg").read_bytes()

    def test_report_without_nas_emits_no_nas_chart(self, tmp_path, triangle_dataset_dir):
        out = tmp_path / "out"
        cfg = write_config(tmp_path / "c.json", triangle_dataset_dir,
                           generator={"kind": "memorizer"}, out_dir=str(out))
        assert run_cli("evaluate", cfg) == 0
        plot_out = tmp_path / "plots"
        assert run_cli("plot", out / "report.json", "--out-dir", plot_out) == 0
        assert (plot_out / "per_class.svg").is_file()
        assert not (plot_out / "nas.svg").exists()

    def test_sweep_csv_plot(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        csv_path.write_text(
            "grid_value,cas_top1,cas_topk,is_mean,is_std,fid,kid\n"
            "0.2,0.4,0.6,1.5,0.1,4.0,0.2\n"
            "2.0,0.9,0.95,2.5,0.1,0.5,0.01\n"
        )
        assert run_cli("plot", csv_path) == 0
        svg = (tmp_path / "sweep.svg").read_text()
        assert "<polyline" in svg

    def test_malformed_input(self, tmp_path, capsys):
        bad = tmp_path / "stuff.csv"
        bad.write_text("a,b\n1,2\n")
        assert run_cli("plot", bad) == 2
