import os

import numpy as np
import pytest
import yaml

from rkm.cli import main
from rkm.dataio import read_dataset_binary, read_dataset_csv
from rkm.errors import EXIT_OK, EXIT_VALIDATION


def write_cfg(tmp_path, body, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(body, sort_keys=False))
    return str(path)


def sample_cfg(tmp_path, out, n=4, s=0.5, seeds=(7,)):
    return write_cfg(
        tmp_path,
        {
            "experiment": "sample",
            "output_dir": out,
            "seeds": list(seeds),
            "model": {"kind": "figure1", "n": n, "s": s},
            "sample": {"mode": "per_component", "counts": [2, 2]},
        },
    )


class TestSampleCommand:
    def test_round_trip(self, tmp_path):
        out = str(tmp_path / "out")
        assert main(["sample", "--config", sample_cfg(tmp_path, out)]) == EXIT_OK
        csv_ds = read_dataset_csv(os.path.join(out, "dataset_seed7.csv"))
        bin_ds = read_dataset_binary(os.path.join(out, "dataset_seed7.rkm"))
        assert csv_ds.points.shape == (4, 4)
        assert np.array_equal(csv_ds.points, bin_ds.points)
        assert np.array_equal(csv_ds.labels, bin_ds.labels)

    def test_deterministic_bytes(self, tmp_path):
        out1, out2 = str(tmp_path / "o1"), str(tmp_path / "o2")
        main(["sample", "--config", sample_cfg(tmp_path, out1)])
        main(["sample", "--config", sample_cfg(tmp_path, out2, seeds=(7,))])
        b1 = open(os.path.join(out1, "dataset_seed7.rkm"), "rb").read()
        b2 = open(os.path.join(out2, "dataset_seed7.rkm"), "rb").read()
        assert b1 == b2

    def test_invalid_odd_n_exit_code(self, tmp_path, capsys):
        cfg = sample_cfg(tmp_path, str(tmp_path / "out"), n=5)
        code = main(["sample", "--config", cfg])
        assert code == EXIT_VALIDATION
        err = capsys.readouterr().err
        assert "even" in err

    def test_seed_override(self, tmp_path):
        out = str(tmp_path / "out")
        cfg = sample_cfg(tmp_path, out)
        assert main(["sample", "--config", cfg, "--seed", "11"]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "dataset_seed11.csv"))
        assert not os.path.exists(os.path.join(out, "dataset_seed7.csv"))

    def test_wrong_experiment_kind(self, tmp_path):
        cfg = sample_cfg(tmp_path, str(tmp_path / "out"))
        assert main(["figure1", "--config", cfg]) == EXIT_VALIDATION


class TestFigure1Command:
    def test_small_panel_outputs(self, tmp_path):
        out = str(tmp_path / "fig")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "figure1",
                "output_dir": out,
                "seeds": [0],
                "figure1": {"t": 0.1, "pairs": [[10, 0.9]]},
            },
        )
        assert main(["figure1", "--config", cfg]) == EXIT_OK
        csv_path = os.path.join(out, "figure1_n10_s0.9_seed0.csv")
        svg_path = os.path.join(out, "figure1_n10_s0.9_seed0.svg")
        assert os.path.exists(csv_path) and os.path.exists(svg_path)
        lines = open(csv_path).read().splitlines()
        assert lines[0] == "index,value,label"
        assert len(lines) == 21
        svg = open(svg_path).read()
        assert svg.lstrip().startswith("<?xml")
        # self-contained: no external assets pulled in
        assert "<image" not in svg
        assert "@import" not in svg
        assert "url(http" not in svg
        assert os.path.getsize(svg_path) < 2_000_000
        summary = open(os.path.join(out, "figure1_summary.csv")).read()
        assert "accuracy" in summary

    def test_degenerate_s_zero_warns(self, tmp_path):
        out = str(tmp_path / "fig0")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "figure1",
                "output_dir": out,
                "seeds": [0],
                "figure1": {"t": 0.1, "pairs": [[30, 0.0]]},
            },
        )
        assert main(["figure1", "--config", cfg]) == EXIT_OK
        rows = open(os.path.join(out, "figure1_summary.csv")).read().splitlines()
        assert "degenerate" in rows[1]
        acc = float(rows[1].split(",")[4])
        assert 0.4 <= acc <= 0.75

    def test_large_gate(self, tmp_path, capsys):
        out = str(tmp_path / "figL")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "figure1",
                "output_dir": out,
                "seeds": [0],
                "figure1": {"t": 0.1, "pairs": [[5000, 0.2]]},
            },
        )
        assert main(["figure1", "--config", cfg]) == EXIT_OK
        assert "skipped" in open(os.path.join(out, "figure1_summary.csv")).read()
        assert "--large" in capsys.readouterr().err

    def test_svg_deterministic(self, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = str(tmp_path / name)
            cfg = write_cfg(
                tmp_path,
                {
                    "experiment": "figure1",
                    "output_dir": out,
                    "seeds": [3],
                    "figure1": {"t": 0.1, "pairs": [[10, 0.9]]},
                },
                name=f"{name}.yaml",
            )
            assert main(["figure1", "--config", cfg]) == EXIT_OK
            outs.append(open(os.path.join(out, "figure1_n10_s0.9_seed3.svg"), "rb").read())
        assert outs[0] == outs[1]


class TestGapScanCommand:
    def test_small_scan(self, tmp_path):
        out = str(tmp_path / "gap")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "gap-scan",
                "output_dir": out,
                "seeds": [0, 1],
                "kernel": {"kind": "distance"},
                "gap_scan": {"n_values": [20, 80], "samples_per_dim": 10, "count": 5},
            },
        )
        assert main(["gap-scan", "--config", cfg]) == EXIT_OK
        lines = open(os.path.join(out, "gap_scan.csv")).read().splitlines()
        assert lines[0] == "n,seed,sigma1,sigma2,sigma3,sigma4,sigma5,ratio"
        assert len(lines) == 5
        by_n = {}
        for line in lines[1:]:
            parts = line.split(",")
            by_n.setdefault(int(parts[0]), []).append(float(parts[-1]))
        assert np.mean(by_n[80]) < np.mean(by_n[20])

    def test_single_point_degenerate(self, tmp_path):
        out = str(tmp_path / "gap1")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "gap-scan",
                "output_dir": out,
                "seeds": [0],
                "kernel": {"kind": "distance"},
                # samples_per_dim 1 with n_values [1] gives a single point
                "gap_scan": {"n_values": [1], "samples_per_dim": 1, "count": 5},
            },
        )
        assert main(["gap-scan", "--config", cfg]) == EXIT_OK
        lines = open(os.path.join(out, "gap_scan.csv")).read().splitlines()
        parts = lines[1].split(",")
        assert float(parts[2]) == 0.0  # h(0) = 0 for the distance kernel
        assert parts[3] == "" and parts[-1] == ""


class TestClusterCommands:
    def test_kpca_cluster(self, tmp_path):
        out = str(tmp_path / "kpca")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "kpca-cluster",
                "output_dir": out,
                "seeds": [0, 1],
                "model": {
                    "kind": "two_gaussians",
                    "n": 60,
                    "distance": 9.0,
                    "variances": [1.0, 1.0],
                },
                "sample": {"mode": "fixed", "size": 150},
                "kernel": {"kind": "gaussian", "tau_factor": 1.0},
                "cluster": {"k": 2, "restarts": 5},
            },
        )
        assert main(["kpca-cluster", "--config", cfg]) == EXIT_OK
        lines = open(os.path.join(out, "kpca_cluster.csv")).read().splitlines()
        assert len(lines) == 3
        accs = [float(l.split(",")[1]) for l in lines[1:]]
        assert min(accs) >= 0.9

    def test_cov_cluster_report(self, tmp_path):
        out = str(tmp_path / "cov")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "cov-cluster",
                "output_dir": out,
                "seeds": [0, 1],
                "threads": 2,
                "model": {"kind": "figure1", "n": 60, "s": 0.6},
                "sample": {"mode": "per_component", "counts": [60, 60]},
                "cluster": {"k": 2, "c1": 0.0833333333333333, "delta": "model"},
            },
        )
        assert main(["cov-cluster", "--config", cfg]) == EXIT_OK
        report = yaml.safe_load(open(os.path.join(out, "cov_cluster_report.txt")))
        assert report["version"]
        assert report["seeds"] == [0, 1]
        assert report["config"]["model"] == {"kind": "figure1", "n": 60, "s": 0.6}
        assert os.path.exists(os.path.join(out, "cov_cluster_accuracy.svg"))
        lines = open(os.path.join(out, "cov_cluster.csv")).read().splitlines()
        assert lines[0].startswith("seed,accuracy,delta,t,threshold,surviving")

    def test_cov_cluster_scaling_only_exit(self, tmp_path, capsys):
        out = str(tmp_path / "covz")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "cov-cluster",
                "output_dir": out,
                "seeds": [0],
                "model": {
                    "kind": "two_gaussians",
                    "n": 20,
                    "distance": 0.0,
                    "variances": [1.0, 4.0],
                },
                "sample": {"mode": "fixed", "size": 60},
                "cluster": {"k": 2, "delta": "model"},
            },
        )
        code = main(["cov-cluster", "--config", cfg])
        assert code == EXIT_VALIDATION
        assert "radial" in capsys.readouterr().err


class TestOtherCommands:
    def test_gram_check(self, tmp_path):
        out = str(tmp_path / "gram")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "gram-check",
                "output_dir": out,
                "seeds": [0],
                "model": {
                    "kind": "two_gaussians",
                    "n": 6,
                    "distance": 2.0,
                    "variances": [1.0, 1.0],
                },
                "sample": {"mode": "per_component", "counts": [800, 800]},
                "kernel": {"kind": "gaussian", "tau_factor": 1.0},
            },
        )
        assert main(["gram-check", "--config", cfg]) == EXIT_OK
        lines = open(os.path.join(out, "gram_check.csv")).read().splitlines()
        assert lines[0] == "i,j,closed_form,empirical,abs_gap"
        gaps = [float(l.split(",")[4]) for l in lines[1:]]
        refs = [float(l.split(",")[2]) for l in lines[1:]]
        assert max(g / r for g, r in zip(gaps, refs)) <= 0.1

    def test_diag_ch(self, tmp_path):
        out = str(tmp_path / "diag")
        cfg = write_cfg(
            tmp_path,
            {
                "experiment": "diag-ch",
                "output_dir": out,
                "seeds": [0],
                "kernel": {"kind": "gaussian", "tau_factor": 1.0},
                "diag_ch": {"n_values": [16, 64], "spherical": False},
            },
        )
        assert main(["diag-ch", "--config", cfg]) == EXIT_OK
        lines = open(os.path.join(out, "diag_ch.csv")).read().splitlines()
        vals = [float(l.split(",")[2]) for l in lines[1:]]
        assert vals[0] > vals[1] > 0

    def test_unknown_config_key_exit(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("experiment: diag-ch\nwhatever: 3\n")
        assert main(["diag-ch", "--config", str(path)]) == EXIT_VALIDATION
        assert "whatever" in capsys.readouterr().err
