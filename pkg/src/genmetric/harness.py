"""Run orchestration behind the CLI: the evaluate / baseline / sweep
pipelines and the plot dispatcher.

Every random stage draws its seed from the master seed via
`derive_seed`, and every derived seed lands in the emitted report, so a
run is fully replayable from its report.json. Nothing is written until
a run has finished computing (no partial outputs on failure).
"""

from __future__ import annotations

import csv
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_generator, resolve_datasets, ConfigError
from .data import LabeledDataset
from .embedding import IdentityEmbedder, PenultimateEmbedder, RandomProjectionEmbedder
from .metrics import fid, inception_score, kid, moment_stats, pearson
from .plotting import nas_line_svg, per_class_bar_svg, sweep_line_svg
from .report import (
    PER_CLASS_FILE,
    PER_CLASS_HEADER,
    SWEEP_FILE,
    SWEEP_HEADER,
    EvaluationReport,
    SweepResult,
    run_id_for,
)
from .scores import cas, gan_test, nas, per_class_gap, real_baseline
from .seeds import derive_seed


PER_CLASS_FID_NOTE = (
    "per-class FID is estimated from few samples per class and carries "
    "substantial small-sample bias; compare values only at equal sample sizes"
)


def _classifier_params(cfg: ExperimentConfig, master: int) -> dict:
    params = dict(cfg.classifier)
    params.setdefault("seed", derive_seed(master, "classifier"))
    return params


def _per_class_fid(real_emb, synth_emb, real: LabeledDataset, synth: LabeledDataset):
    rows = []
    for c in range(real.num_classes):
        real_c = real_emb[real.labels == c]
        synth_c = synth_emb[synth.labels == c]
        if real_c.shape[0] < 2 or synth_c.shape[0] < 2:
            rows.append({"class": c, "fid": None})
            continue
        rows.append({"class": c, "fid": fid(moment_stats(real_c), moment_stats(synth_c))})
    return rows


def _resolve_k(cfg: ExperimentConfig, num_classes: int) -> int:
    k = cfg.top_k if cfg.top_k is not None else min(5, num_classes)
    if k > num_classes:
        raise ConfigError(f"top_k={k} exceeds the {num_classes}-class dataset")
    return k


def _make_embedder(cfg: ExperimentConfig, baseline_model, train: LabeledDataset, master: int):
    spec = dict(cfg.embedder)
    kind = spec["kind"]
    X = train.features.astype(np.float64)
    if kind == "identity":
        return IdentityEmbedder().fit(X), {"kind": "identity"}
    if kind == "random_projection":
        dim = int(spec.get("output_dim", min(8, train.dim)))
        seed = int(spec.get("seed", derive_seed(master, "embedder")))
        emb = RandomProjectionEmbedder(output_dim=dim, seed=seed).fit(X)
        return emb, {"kind": "random_projection", "output_dim": dim, "seed": seed}
    emb = PenultimateEmbedder(baseline_model).fit()
    return emb, {"kind": "penultimate", "source": "baseline classifier"}


def run_baseline(cfg: ExperimentConfig) -> EvaluationReport:
    """Real-data baseline only: train on the real training split and
    score on the real test split."""
    train, test = resolve_datasets(cfg)
    k = _resolve_k(cfg, train.num_classes)
    master = cfg.seed
    params = _classifier_params(cfg, master)
    base_score, _ = real_baseline(train, test, params, k)

    report = EvaluationReport(
        k=k,
        baseline_top1=base_score.top1,
        baseline_topk=base_score.topk,
        config=cfg.snapshot(),
        seeds={
            "master": master,
            "split": derive_seed(master, "split"),
            "classifier": params["seed"],
        },
    )
    report.run_id = run_id_for(report.config)
    report.stamp()
    return report


def run_evaluate(cfg: ExperimentConfig) -> EvaluationReport:
    """Full evaluation: baseline, CAS, per-class gaps, sample-statistics
    metrics, and NAS / GAN-test when toggled on."""
    if cfg.generator is None:
        raise ConfigError("evaluate needs a 'generator' entry in the config")
    train, test = resolve_datasets(cfg)
    k = _resolve_k(cfg, train.num_classes)
    master = cfg.seed
    params = _classifier_params(cfg, master)
    seeds = {
        "master": master,
        "split": derive_seed(master, "split"),
        "classifier": params["seed"],
        "replacement": derive_seed(master, "replacement"),
    }

    generator = build_generator(cfg.generator, train)
    if generator.num_classes < train.num_classes or generator.feature_dim != train.dim:
        raise ConfigError("generator shape does not match the dataset (K or D)")

    base_score, base_model = real_baseline(train, test, params, k)
    cas_result = cas(generator, train, test, params, k, seeds["replacement"])
    gaps = per_class_gap(cas_result.score.per_class_top1, base_score.per_class_top1)

    report = EvaluationReport(
        k=k,
        baseline_top1=base_score.top1,
        baseline_topk=base_score.topk,
        cas_top1=cas_result.score.top1,
        cas_topk=cas_result.score.topk,
        per_class=gaps,
        config=cfg.snapshot(),
    )

    embedder, embedder_decl = _make_embedder(cfg, base_model, train, master)
    report.embedder = embedder_decl
    synth = cas_result.synthetic_train
    if cfg.metrics.get("fid") or cfg.metrics.get("kid") or cfg.metrics.get("per_class_fid"):
        real_emb = embedder.transform(train.features.astype(np.float64))
        synth_emb = embedder.transform(synth.features.astype(np.float64))
        if cfg.metrics.get("fid"):
            report.fid = fid(moment_stats(real_emb), moment_stats(synth_emb))
        if cfg.metrics.get("kid"):
            report.kid = kid(real_emb, synth_emb)
        if cfg.metrics.get("per_class_fid"):
            report.per_class_fid = _per_class_fid(real_emb, synth_emb, train, synth)
            report.per_class_fid_note = PER_CLASS_FID_NOTE
            warnings.warn(PER_CLASS_FID_NOTE, stacklevel=2)
    if cfg.metrics.get("inception_score"):
        seeds["is_shuffle"] = derive_seed(master, "is-shuffle")
        report.is_mean, report.is_std = _inception_score_for(
            base_model, synth, seeds["is_shuffle"]
        )

    if cfg.metrics.get("gan_test"):
        seeds["gan_test"] = derive_seed(master, "gan-test")
        gt = gan_test(train, generator, cfg.gan_test_size, params, k, seeds["gan_test"])
        report.gan_test_top1, report.gan_test_topk = gt.top1, gt.topk
    if cfg.metrics.get("nas"):
        seeds["nas"] = [derive_seed(master, "augment", i) for i in range(len(cfg.nas_fractions))]
        rows = []
        for i, fraction in enumerate(cfg.nas_fractions):
            result = nas(train, generator, [fraction], test, params, k, seeds["nas"][i])
            _, score = result[0]
            rows.append({"fraction": float(fraction), "top1": score.top1, "topk": score.topk})
        report.nas = rows

    report.seeds = seeds
    report.run_id = run_id_for(report.config)
    report.stamp()
    return report


def _inception_score_for(base_model, synth: LabeledDataset, shuffle_seed: int):
    """IS over the synthetic sample in a seeded random row order.

    Replacement sets keep the template's row order (often class-sorted);
    the score's split marginals assume i.i.d. draws, so rows are
    shuffled deterministically before splitting.
    """
    order = np.random.default_rng(shuffle_seed).permutation(synth.n)
    probs = base_model.predict_proba(synth.features.astype(np.float64)[order])
    return inception_score(probs, splits=min(10, synth.n))


def _sweep_point(cfg, base_gen, train, test, k, params, base_model, embedder, tau, seed, is_seed):
    generator = base_gen.with_truncation(float(tau))
    result = cas(generator, train, test, params, k, seed)
    synth = result.synthetic_train
    real_emb = embedder.transform(train.features.astype(np.float64))
    synth_emb = embedder.transform(synth.features.astype(np.float64))
    is_mean, is_std = _inception_score_for(base_model, synth, is_seed)
    return {
        "grid_value": float(tau),
        "cas_top1": result.score.top1,
        "cas_topk": result.score.topk,
        "is_mean": is_mean,
        "is_std": is_std,
        "fid": fid(moment_stats(real_emb), moment_stats(synth_emb)),
        "kid": kid(real_emb, synth_emb),
    }


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """One evaluate cycle per grid value with per-point derived sampling
    seeds; the classifier seed is shared across points so grid values
    stay comparable. Points may run concurrently; rows are collected in
    grid order."""
    if cfg.sweep is None:
        raise ConfigError("sweep needs a 'sweep' entry in the config")
    if cfg.generator is None or cfg.generator.get("kind") != "truncated_latent":
        raise ConfigError("truncation sweeps need a truncated_latent generator")
    train, test = resolve_datasets(cfg)
    k = _resolve_k(cfg, train.num_classes)
    master = cfg.seed
    params = _classifier_params(cfg, master)
    grid = [float(g) for g in cfg.sweep["grid"]]

    base_gen = build_generator(cfg.generator, train)
    if base_gen.num_classes < train.num_classes or base_gen.feature_dim != train.dim:
        raise ConfigError("generator shape does not match the dataset (K or D)")

    base_score, base_model = real_baseline(train, test, params, k)
    embedder, _ = _make_embedder(cfg, base_model, train, master)

    point_seeds = [derive_seed(master, "sweep-replacement", i) for i in range(len(grid))]
    is_seeds = [derive_seed(master, "sweep-is-shuffle", i) for i in range(len(grid))]

    def worker(i):
        return _sweep_point(
            cfg, base_gen, train, test, k, params, base_model, embedder,
            grid[i], point_seeds[i], is_seeds[i],
        )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(worker, range(len(grid))))
    else:
        rows = [worker(i) for i in range(len(grid))]

    result = SweepResult(
        variable=cfg.sweep["variable"],
        grid=grid,
        rows=rows,
        config=cfg.snapshot(),
        seeds={
            "master": master,
            "split": derive_seed(master, "split"),
            "classifier": params["seed"],
            "sweep_replacement": point_seeds,
            "sweep_is_shuffle": is_seeds,
        },
    )
    cas_series = [r["cas_top1"] for r in rows]
    fid_series = [r["fid"] for r in rows]
    is_series = [r["is_mean"] for r in rows]
    if len(grid) >= 2 and np.ptp(cas_series) > 0 and np.ptp(fid_series) > 0:
        result.pearson_cas_fid = pearson(cas_series, fid_series)
    if len(grid) >= 2 and np.ptp(cas_series) > 0 and np.ptp(is_series) > 0:
        result.pearson_cas_is = pearson(cas_series, is_series)
    result.run_id = run_id_for(result.config)
    result.stamp()
    return result


def write_evaluate_outputs(report: EvaluationReport, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    report.write(out_dir)
    written = [out_dir / "report.json", out_dir / "summary.csv"]
    if report.per_class:
        written.append(out_dir / PER_CLASS_FILE)
        (out_dir / "per_class.svg").write_text(per_class_bar_svg(report.per_class))
        written.append(out_dir / "per_class.svg")
    if report.nas:
        fractions = [row["fraction"] for row in report.nas]
        svg = nas_line_svg(
            fractions,
            [row["top1"] for row in report.nas],
            [row["topk"] for row in report.nas],
            report.k,
        )
        (out_dir / "nas.svg").write_text(svg)
        written.append(out_dir / "nas.svg")
    return written


def write_sweep_outputs(result: SweepResult, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    result.write(out_dir)
    svg = sweep_line_svg(result.grid, [r["cas_top1"] for r in result.rows], result.variable)
    (out_dir / "sweep.svg").write_text(svg)
    return [out_dir / "report.json", out_dir / SWEEP_FILE, out_dir / "summary.csv",
            out_dir / "sweep.svg"]


# -- plot command ---------------------------------------------------------


def plot_file(path, out_dir=None) -> list[Path]:
    """Render SVG charts for a per_class.csv, sweep.csv, or report.json.

    Reports produce a per-class chart and, when NAS rows are present, the
    NAS fraction curve; an empty NAS section simply emits no NAS chart.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    out_dir = Path(out_dir) if out_dir is not None else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        per_class = payload.get("per_class") or []
        if per_class:
            rows = [
                {"class": r["class_id"], "model_acc": r["model_acc"], "real_acc": r["real_acc"]}
                for r in per_class
            ]
            target = out_dir / "per_class.svg"
            target.write_text(per_class_bar_svg(rows))
            written.append(target)
        nas_rows = payload.get("nas") or []
        if nas_rows:
            target = out_dir / "nas.svg"
            target.write_text(
                nas_line_svg(
                    [r["fraction"] for r in nas_rows],
                    [r["top1"] for r in nas_rows],
                    [r["topk"] for r in nas_rows],
                    payload.get("k", 1),
                )
            )
            written.append(target)
        return written

    if path.name == PER_CLASS_FILE or _csv_header(path) == PER_CLASS_HEADER:
        rows = _read_csv_dicts(path)
        parsed = [
            {
                "class": row["class"],
                "model_acc": float(row["model_acc"]),
                "real_acc": float(row["real_acc"]),
            }
            for row in rows
        ]
        target = out_dir / "per_class.svg"
        target.write_text(per_class_bar_svg(parsed))
        return [target]

    if path.name == SWEEP_FILE or _csv_header(path) == SWEEP_HEADER:
        rows = _read_csv_dicts(path)
        target = out_dir / "sweep.svg"
        target.write_text(
            sweep_line_svg(
                [float(r["grid_value"]) for r in rows],
                [float(r["cas_top1"]) for r in rows],
            )
        )
        return [target]

    raise ConfigError(f"cannot infer chart type for {path}")


def _csv_header(path: Path) -> list[str]:
    with open(path, newline="") as fh:
        return next(csv.reader(fh), [])


def _read_csv_dicts(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path} has no data rows")
    return rows
