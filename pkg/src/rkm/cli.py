"""Experiment command line.

Subcommands: sample, figure1, gap-scan, kpca-cluster, cov-cluster,
gram-check, diag-ch.  Every run is driven by a YAML config (--config) plus
the overrides --seed, --out and --threads; --large unlocks panels whose
dense matrices exceed desk scale.  Exit codes: 0 ok, 2 validation error,
3 convergence error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import yaml

from . import __version__
from .cluster import (
    align_and_score,
    covariance_cluster,
    kernel_pca_cluster,
    second_singular_vector,
)
from .config import (
    ExperimentConfig,
    build_kernel,
    build_model,
    build_size,
    load_config,
)
from .dataio import (
    write_dataset_binary,
    write_dataset_csv,
    write_rows_csv,
)
from .errors import (
    EXIT_CONVERGENCE,
    EXIT_IO,
    EXIT_OK,
    EXIT_VALIDATION,
    ConvergenceError,
    RkmError,
    ValidationError,
)
from .gram import closed_form_gram, empirical_gram, gram_ht_second_order
from .kernels import c_h_diagnostic, ht_kernel, kernel_matrix
from .linalg import top_singular_values
from .model import (
    GaussianComponent,
    MixtureModel,
    figure1_model,
    fixed_count,
    fixed_per_component,
    isotropic,
    project_to_sphere,
    sample,
)
from .structure import approximant_B, residual_norm

# figure1 panels above this many total points need --large (dense N x N work)
LARGE_POINT_LIMIT = 4000


def _parser():
    p = argparse.ArgumentParser(
        prog="rkm",
        description="Radial-kernel spectral analysis and clustering experiments",
    )
    p.add_argument("--version", action="version", version=f"rkm {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML experiment config")
    common.add_argument("--seed", type=int, help="override the config seed list")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--threads", type=int, help="worker pool size for seed grids")
    common.add_argument(
        "--large", action="store_true", help="allow panels beyond desk scale"
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sample", "draw a dataset and write it as CSV and binary"),
        ("figure1", "second-singular-vector panels for the split-spectrum mixture"),
        ("gap-scan", "top singular values of single-component kernel matrices"),
        ("kpca-cluster", "kernel PCA clustering over a seed grid"),
        ("cov-cluster", "covariance-based spectral clustering over a seed grid"),
        ("gram-check", "empirical component Gram matrix against its prediction"),
        ("diag-ch", "kernel smoothness diagnostic across dimensions"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if cfg.experiment != args.command:
        raise ValidationError(
            f"config is for experiment {cfg.experiment!r}, not {args.command!r}"
        )
    updates = {}
    if args.seed is not None:
        updates["seeds"] = (args.seed,)
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.threads is not None:
        updates["threads"] = args.threads
    if updates:
        cfg = ExperimentConfig(
            experiment=cfg.experiment,
            output_dir=updates.get("output_dir", cfg.output_dir),
            seeds=updates.get("seeds", cfg.seeds),
            threads=updates.get("threads", cfg.threads),
            sections=cfg.sections,
        )
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg


def _seed_map(cfg, work, items):
    """Run `work` over items, in a thread pool when threads > 1; output
    order always follows the input order."""
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(work, items))
    return [work(item) for item in items]


# --- commands -----------------------------------------------------------------


def cmd_sample(cfg: ExperimentConfig) -> int:
    model = build_model(cfg.section("model"))
    size = build_size(cfg.section("sample"))
    for seed in cfg.seeds:
        ds = sample(model, size, seed)
        base = os.path.join(cfg.output_dir, f"dataset_seed{seed}")
        write_dataset_csv(ds, base + ".csv")
        write_dataset_binary(ds, base + ".rkm")
        print(f"wrote {base}.csv and {base}.rkm ({ds.dim} x {ds.size})")
    return EXIT_OK


def _figure1_panel_model(n: int, s: float) -> MixtureModel:
    # s = 0 is allowed here (degenerate panel): two identical components
    if s == 0.0:
        zero = np.zeros(n)
        comp = GaussianComponent(0.5, zero, isotropic(1.0))
        return MixtureModel((comp, comp), dim=n)
    return figure1_model(n, s)


def cmd_figure1(cfg: ExperimentConfig, large: bool) -> int:
    from .report import save_labeled_scatter

    section = cfg.section("figure1")
    t = float(section.get("t", 0.1))
    pairs = section["pairs"]
    summary = []
    for pair in pairs:
        n, s = int(pair[0]), float(pair[1])
        if 2 * n > LARGE_POINT_LIMIT and not large:
            print(
                f"skipping n={n}, s={s}: {2 * n} points exceeds desk scale "
                "(rerun with --large)",
                file=sys.stderr,
            )
            summary.append((n, s, t, None, None, "skipped: needs --large"))
            continue
        model = _figure1_panel_model(n, s)
        for seed in cfg.seeds:
            ds = sample(model, fixed_per_component([n, n]), seed)
            vec = second_singular_vector(ds, t)
            pred = (vec > 0).astype(int)
            acc = align_and_score(pred, ds.labels)
            warning = "degenerate: no covariance separation" if s == 0.0 else None
            tag = f"n{n}_s{s:g}_seed{seed}"
            write_rows_csv(
                os.path.join(cfg.output_dir, f"figure1_{tag}.csv"),
                ["index", "value", "label"],
                [
                    (i, float(vec[i]), int(ds.labels[i]))
                    for i in range(vec.size)
                ],
                digits=17,
            )
            save_labeled_scatter(
                os.path.join(cfg.output_dir, f"figure1_{tag}.svg"),
                vec,
                ds.labels,
                title=f"n={n}, s={s:g}, t={t:g} (accuracy {acc:.3f})",
            )
            summary.append((n, s, t, seed, float(acc), warning))
            print(f"figure1 n={n} s={s:g} seed={seed}: accuracy={acc:.4f}")
    write_rows_csv(
        os.path.join(cfg.output_dir, "figure1_summary.csv"),
        ["n", "s", "t", "seed", "accuracy", "warning"],
        summary,
    )
    return EXIT_OK


def cmd_gap_scan(cfg: ExperimentConfig) -> int:
    section = cfg.section("gap_scan")
    n_values = [int(v) for v in section["n_values"]]
    per_dim = int(section.get("samples_per_dim", 10))
    count = int(section.get("count", 5))
    kernel_section = cfg.section("kernel") or {"kind": "distance"}

    def run(item):
        n, seed = item
        model = MixtureModel(
            (GaussianComponent(1.0, np.zeros(n), isotropic(1.0)),), dim=n
        )
        ds = sample(model, fixed_count(max(per_dim * n, 1)), seed)
        km = kernel_matrix(ds, build_kernel(kernel_section, n))
        avail = min(count, ds.size)
        sv = top_singular_values(km.matrix, avail)
        padded = [float(v) for v in sv] + [None] * (count - avail)
        ratio = float(sv[1] / sv[0]) if avail >= 2 and sv[0] > 0 else None
        return (n, seed, *padded, ratio)

    items = [(n, seed) for n in n_values for seed in cfg.seeds]
    rows = _seed_map(cfg, run, items)
    header = ["n", "seed"] + [f"sigma{i + 1}" for i in range(count)] + ["ratio"]
    path = os.path.join(cfg.output_dir, "gap_scan.csv")
    write_rows_csv(path, header, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_kpca_cluster(cfg: ExperimentConfig) -> int:
    model = build_model(cfg.section("model"))
    size = build_size(cfg.section("sample"))
    spec = build_kernel(cfg.section("kernel"), model.dim)
    cluster = cfg.section("cluster")
    k = int(cluster["k"])
    restarts = int(cluster.get("restarts", 10))

    def run(seed):
        ds = sample(model, size, seed)
        res = kernel_pca_cluster(ds, spec, k, seed=seed, restarts=restarts)
        return (
            seed,
            float(res.accuracy),
            float(res.diagnostics.get("eigen_gap", 0.0)),
            float(res.diagnostics.get("kmeans_cost", 0.0)),
        )

    rows = _seed_map(cfg, run, list(cfg.seeds))
    path = os.path.join(cfg.output_dir, "kpca_cluster.csv")
    write_rows_csv(path, ["seed", "accuracy", "eigen_gap", "kmeans_cost"], rows)
    accs = [r[1] for r in rows]
    print(f"wrote {path}; median accuracy {np.median(accs):.4f}")
    return EXIT_OK


def cmd_cov_cluster(cfg: ExperimentConfig) -> int:
    from .report import save_seed_series

    model = build_model(cfg.section("model"))
    size = build_size(cfg.section("sample"))
    cluster = cfg.section("cluster")
    k = int(cluster["k"])
    delta_source = cluster.get("delta", "model")
    kwargs = {
        "c1": float(cluster.get("c1", 1.0 / 12.0)),
        "c2": float(cluster.get("c2", 0.01)),
        "threshold_mode": cluster.get("threshold_mode", "adaptive"),
        "restarts": int(cluster.get("restarts", 10)),
    }
    if delta_source == "model":
        kwargs["model"] = model
    elif delta_source == "plugin":
        pass
    elif isinstance(delta_source, (int, float)):
        kwargs["delta_override"] = float(delta_source)
    else:
        raise ValidationError(f"cluster.delta must be 'model', 'plugin' or a number")

    def run(seed):
        ds = sample(model, size, seed)
        res = covariance_cluster(ds, k, seed=seed, **kwargs)
        t = res.diagnostics["t"]
        km = kernel_matrix(project_to_sphere(ds), ht_kernel(t, ds.dim))
        resid = residual_norm(km, approximant_B(km))
        return (
            seed,
            float(res.accuracy),
            float(res.diagnostics["delta"]),
            float(t),
            float(res.diagnostics["threshold"]),
            int(res.diagnostics["surviving_eigenvalues"]),
            float(resid),
            float(res.diagnostics["kmeans_cost"]),
        )

    rows = _seed_map(cfg, run, list(cfg.seeds))
    path = os.path.join(cfg.output_dir, "cov_cluster.csv")
    header = [
        "seed",
        "accuracy",
        "delta",
        "t",
        "threshold",
        "surviving_eigenvalues",
        "residual_norm",
        "kmeans_cost",
    ]
    write_rows_csv(path, header, rows)
    accs = [r[1] for r in rows]
    save_seed_series(
        os.path.join(cfg.output_dir, "cov_cluster_accuracy.svg"),
        [r[0] for r in rows],
        {"accuracy": accs},
        title="covariance clustering accuracy per seed",
        ylabel="accuracy",
    )
    report = {
        "version": __version__,
        "config": cfg.to_dict(),
        "seeds": list(cfg.seeds),
        "median_accuracy": float(np.median(accs)),
        "rows": [dict(zip(header, r)) for r in rows],
    }
    report_path = os.path.join(cfg.output_dir, "cov_cluster_report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(report, fh, sort_keys=False)
    print(f"wrote {path} and {report_path}; median accuracy {np.median(accs):.4f}")
    return EXIT_OK


def cmd_gram_check(cfg: ExperimentConfig) -> int:
    model = build_model(cfg.section("model"))
    size = build_size(cfg.section("sample"))
    spec = build_kernel(cfg.section("kernel"), model.dim)
    seed = cfg.seeds[0]
    ds = sample(model, size, seed)
    if spec.kind == "ht":
        ds = project_to_sphere(ds)
        reference = gram_ht_second_order(model, spec.params["t"]).matrix
        ref_name = "second_order"
    elif spec.kind == "gaussian":
        reference = closed_form_gram(model, spec.params["tau"]).matrix
        ref_name = "closed_form"
    else:
        raise ValidationError(
            "gram-check supports the gaussian and ht kernels, "
            f"not {spec.kind!r}"
        )
    emp = empirical_gram(kernel_matrix(ds, spec)).matrix
    rows = []
    for i in range(model.k):
        for j in range(model.k):
            rows.append(
                (i, j, float(reference[i, j]), float(emp[i, j]),
                 float(abs(reference[i, j] - emp[i, j])))
            )
    path = os.path.join(cfg.output_dir, "gram_check.csv")
    write_rows_csv(path, ["i", "j", ref_name, "empirical", "abs_gap"], rows)
    print(f"wrote {path}; max gap {max(r[4] for r in rows):.3e}")
    return EXIT_OK


def cmd_diag_ch(cfg: ExperimentConfig) -> int:
    section = cfg.section("diag_ch")
    spherical = bool(section.get("spherical", False))
    kernel_section = cfg.section("kernel")
    rows = []
    for n in section["n_values"]:
        n = int(n)
        spec = build_kernel(kernel_section, n)
        r = float(np.sqrt(n))
        val = c_h_diagnostic(spec, r, spherical=spherical)
        rows.append((n, r, float(val), spherical))
    path = os.path.join(cfg.output_dir, "diag_ch.csv")
    write_rows_csv(path, ["n", "R", "c_h", "spherical"], rows)
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "sample": lambda cfg, args: cmd_sample(cfg),
    "figure1": lambda cfg, args: cmd_figure1(cfg, args.large),
    "gap-scan": lambda cfg, args: cmd_gap_scan(cfg),
    "kpca-cluster": lambda cfg, args: cmd_kpca_cluster(cfg),
    "cov-cluster": lambda cfg, args: cmd_cov_cluster(cfg),
    "gram-check": lambda cfg, args: cmd_gram_check(cfg),
    "diag-ch": lambda cfg, args: cmd_diag_ch(cfg),
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        return _COMMANDS[args.command](cfg, args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RkmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
