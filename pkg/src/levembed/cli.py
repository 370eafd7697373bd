"""Command-line interface tying the pipeline together.

Commands:
  gen-data   synthesize a cluster dataset and oracle-labelled pair files
  train      train an embedding model on a dataset directory
  esd-scan   sweep embedding dimensions and detect the rank plateau
  eval       metrics and diagnostics for a trained checkpoint
  grid       train+eval over arch x dim x loss x seed combinations

Every command is a pure function of its configuration and input files:
rerunning with the same seed reproduces each output byte for byte. Flags
may be preloaded from a JSON config file (--config); explicit flags win,
and the effective configuration is always written next to the outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import checkpoint as ckpt
from . import datagen, esd, metrics, siamese
from .errors import DataError, LevembedError, NumericError, UsageError
from .seeding import substream
from .seqcore import Alphabet

log = logging.getLogger("levembed")

DEFAULT_ALPHABET = "ATGCN-"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser(suppress: bool) -> _Parser:
    # ``suppress`` builds a twin parser whose namespace only contains the
    # flags explicitly present on the command line, which is how config-file
    # values and command-line overrides are told apart.
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser = _Parser(prog="levembed", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=d(None), help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=d(0))
        p.add_argument("--force", action="store_true", default=d(False), help="overwrite an existing output directory")
        p.add_argument("--alphabet", default=d(DEFAULT_ALPHABET), help="alphabet symbols, padding last")

    g = sub.add_parser("gen-data", help="generate a synthetic cluster dataset")
    common(g)
    g.add_argument("--clusters", type=int, default=d(2000))
    g.add_argument("--ref-len", type=int, default=d(150))
    g.add_argument("--reads", type=int, default=d(5))
    g.add_argument("--p-sub", type=float, default=d(0.01))
    g.add_argument("--p-del", type=float, default=d(0.01))
    g.add_argument("--p-ins", type=float, default=d(0.01))
    g.add_argument("--test-fraction", type=float, default=d(0.5))
    g.add_argument("--train-hom", type=int, default=d(6000))
    g.add_argument("--train-nonhom", type=int, default=d(6000))
    g.add_argument("--test-hom", type=int, default=d(1500))
    g.add_argument("--test-nonhom", type=int, default=d(1500))
    g.add_argument("--m-samples", type=int, default=d(2000), help="Monte-Carlo samples for the independent-pair mean distance")

    def train_flags(p, with_dim=True):
        p.add_argument("--data", required=True, help="dataset directory from gen-data")
        p.add_argument("--arch", default=d("cnn5"), choices=sorted(siamese.ARCH_KINDS))
        if with_dim:
            p.add_argument("--dim", type=int, default=d(80))
        p.add_argument("--loss", default=d("pnll"), choices=siamese.LOSS_KINDS)
        p.add_argument("--gnll-k", type=float, default=d(None))
        p.add_argument("--epochs", type=int, default=d(50))
        p.add_argument("--batch", type=int, default=d(128))
        p.add_argument("--lr", type=float, default=d(1e-3))
        p.add_argument("--input-len", type=int, default=d(160))
        p.add_argument("--val-fraction", type=float, default=d(0.05))
        p.add_argument("--verify-data", action="store_true", default=d(False), help="spot-check stored distances against the oracle at load")

    t = sub.add_parser("train", help="train one embedding model")
    common(t)
    train_flags(t)
    t.add_argument("--resume", default=d(None), help="checkpoint to continue from")

    e = sub.add_parser("esd-scan", help="dimension sweep with spectrum detection")
    common(e)
    train_flags(e, with_dim=False)
    e.add_argument("--dims", default=d("40,80,120,160"), help="comma-separated ascending dimensions")
    e.add_argument("--seeds", default=d("0"), help="comma-separated training seeds")
    e.add_argument("--tau", type=float, default=d(esd.DEFAULT_TAU))
    e.add_argument("--slack", type=float, default=d(esd.DEFAULT_SLACK))
    e.add_argument("--cov-pairs", type=int, default=d(5000))

    v = sub.add_parser("eval", help="evaluate a checkpoint on the test pairs")
    common(v)
    v.add_argument("--data", required=True)
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--alpha", type=float, default=d(0.01), help="level for the chi-squared fit test")
    v.add_argument("--outlier-seqs", type=int, default=d(40))
    v.add_argument("--outlier-top", type=int, default=d(20))
    v.add_argument("--normality-elements", type=int, default=d(8))

    r = sub.add_parser("grid", help="train+eval over a parameter grid")
    common(r)
    r.add_argument("--data", required=True)
    r.add_argument("--archs", default=d("cnn5"))
    r.add_argument("--dims", default=d("80"))
    r.add_argument("--losses", default=d("mse,mae,rechi2,pnll"))
    r.add_argument("--seeds", default=d("0,1,2,3,4"))
    r.add_argument("--gnll-k", type=float, default=d(None))
    r.add_argument("--epochs", type=int, default=d(50))
    r.add_argument("--batch", type=int, default=d(128))
    r.add_argument("--lr", type=float, default=d(1e-3))
    r.add_argument("--input-len", type=int, default=d(160))
    r.add_argument("--val-fraction", type=float, default=d(0.05))
    r.add_argument("--jobs", type=int, default=d(1))

    return parser


def _resolve_config(argv: list[str]) -> dict:
    args = _build_parser(False).parse_args(argv)
    explicit = set(vars(_build_parser(True).parse_args(argv)))
    cfg = vars(args)
    path = cfg.get("config")
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                file_cfg = json.load(f)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key, value in file_cfg.items():
            if key not in explicit:
                cfg[key] = value
    return cfg


def _prepare_out(path: str, force: bool) -> str:
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise UsageError(f"output directory {path!r} exists and is not empty; pass --force")
    os.makedirs(path, exist_ok=True)
    return path


def _write_config(cfg: dict, out: str) -> None:
    snapshot = {k: v for k, v in cfg.items() if k != "config"}
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(snapshot, f, sort_keys=True, indent=2)
        f.write("\n")


def _int_list(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x != ""]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None


def _file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_manifest(data_dir: str) -> dict:
    path = os.path.join(data_dir, "manifest.json")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read dataset manifest: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"dataset manifest is not valid JSON: {exc}") from None


# --- commands ---------------------------------------------------------------------


def cmd_gen_data(cfg: dict) -> int:
    out = _prepare_out(cfg["out"], cfg["force"])
    alphabet = Alphabet(cfg["alphabet"])
    channel = datagen.EditChannelConfig(cfg["p_sub"], cfg["p_del"], cfg["p_ins"], seed=cfg["seed"])
    log.info("generating %d clusters of length %d", cfg["clusters"], cfg["ref_len"])
    clusters = datagen.build_clusters(
        cfg["clusters"], cfg["ref_len"], cfg["reads"], channel,
        substream(cfg["seed"], "clusters"), alphabet,
    )
    split = datagen.split_by_cluster(
        clusters, cfg["test_fraction"], substream(cfg["seed"], "split"),
        train_pairs=(cfg["train_hom"], cfg["train_nonhom"]),
        test_pairs=(cfg["test_hom"], cfg["test_nonhom"]),
    )
    train_clusters = [c for c in clusters if c.id in split.train_cluster_ids]
    test_clusters = [c for c in clusters if c.id in split.test_cluster_ids]
    m_mean, m_se = datagen.estimate_mean_distance(
        train_clusters, cfg["m_samples"], substream(cfg["seed"], "m-estimate")
    )
    datagen.save_clusters(os.path.join(out, "train_clusters.tsv"), train_clusters, alphabet)
    datagen.save_clusters(os.path.join(out, "test_clusters.tsv"), test_clusters, alphabet)
    datagen.save_pairs(os.path.join(out, "train_pairs.tsv"), split.train, alphabet)
    datagen.save_pairs(os.path.join(out, "test_pairs.tsv"), split.test, alphabet)
    manifest = {
        "alphabet": cfg["alphabet"],
        "seed": cfg["seed"],
        "channel": {"p_sub": cfg["p_sub"], "p_del": cfg["p_del"], "p_ins": cfg["p_ins"]},
        "clusters": cfg["clusters"],
        "ref_len": cfg["ref_len"],
        "reads_per_cluster": cfg["reads"],
        "test_fraction": cfg["test_fraction"],
        "train_cluster_count": len(train_clusters),
        "test_cluster_count": len(test_clusters),
        "train_pairs": {"homologous": cfg["train_hom"], "nonhomologous": cfg["train_nonhom"]},
        "test_pairs": {"homologous": cfg["test_hom"], "nonhomologous": cfg["test_nonhom"]},
        "mean_independent_distance": {"mean": m_mean, "se": m_se, "n_samples": cfg["m_samples"]},
        "files": {
            "train_clusters": "train_clusters.tsv",
            "test_clusters": "test_clusters.tsv",
            "train_pairs": "train_pairs.tsv",
            "test_pairs": "test_pairs.tsv",
        },
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    _write_config(cfg, out)
    log.info("dataset written to %s (mean independent distance %.2f +- %.2f)", out, m_mean, m_se)
    return 0


def _dataset_for_training(cfg: dict):
    manifest = _load_manifest(cfg["data"])
    alphabet = Alphabet(manifest["alphabet"])
    pairs_path = os.path.join(cfg["data"], manifest["files"]["train_pairs"])
    pairs = datagen.load_pairs(
        pairs_path, alphabet, verify=cfg.get("verify_data", False),
        rng=substream(cfg["seed"], "verify"),
    )
    if not pairs:
        raise DataError(f"no training pairs in {pairs_path}")
    m_mean = manifest["mean_independent_distance"]["mean"]
    return manifest, alphabet, pairs, pairs_path, m_mean


def _train_config(cfg: dict, seed: int) -> siamese.TrainConfig:
    return siamese.TrainConfig(
        loss=cfg["loss"],
        gnll_k=cfg.get("gnll_k"),
        epochs=cfg["epochs"],
        batch_size=cfg["batch"],
        lr=cfg["lr"],
        seed=seed,
        val_fraction=cfg["val_fraction"],
    )


def _write_train_log(path, logs: list[siamese.EpochLog]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["epoch", "loss", "ae_g", "ae_h"])
        for row in logs:
            w.writerow([row.epoch, f"{row.loss:.6f}", f"{row.ae_g:.6f}", f"{row.ae_h:.6f}"])


def cmd_train(cfg: dict) -> int:
    out = _prepare_out(cfg["out"], cfg["force"])
    manifest, alphabet, pairs, pairs_path, m_mean = _dataset_for_training(cfg)
    train_cfg = _train_config(cfg, cfg["seed"])
    if cfg.get("resume"):
        model, meta = ckpt.load_checkpoint(cfg["resume"])
        start_epoch = int(meta["epochs_done"])
        if meta["loss"] != cfg["loss"] or int(meta["seed"]) != cfg["seed"]:
            raise DataError("resume checkpoint was trained with a different loss or seed")
        log.info("resuming from %s at epoch %d", cfg["resume"], start_epoch)
    else:
        spec = siamese.ArchitectureSpec(
            kind=cfg["arch"], embedding_dim=cfg["dim"],
            input_len=cfg["input_len"], alphabet_size=alphabet.size,
        )
        model = siamese.EmbeddingModel(
            spec, substream(cfg["seed"], "init"), mean_independent_distance=m_mean
        )
        start_epoch = 0
    logs = siamese.train(model, pairs, alphabet, train_cfg, start_epoch=start_epoch)
    metadata = {
        "loss": cfg["loss"],
        "gnll_k": cfg.get("gnll_k"),
        "epochs_done": cfg["epochs"],
        "seed": cfg["seed"],
        "dataset_hash": _file_sha256(pairs_path),
        "mean_independent_distance": m_mean,
        "alphabet": manifest["alphabet"],
    }
    ckpt.save_checkpoint(os.path.join(out, "checkpoint.bin"), model, metadata)
    _write_train_log(os.path.join(out, "train_log.csv"), logs)
    _write_config(cfg, out)
    if logs:
        log.info("final epoch: loss %.4f, val ae_g %.3f, val ae_h %.3f", logs[-1].loss, logs[-1].ae_g, logs[-1].ae_h)
    return 0


def cmd_esd_scan(cfg: dict) -> int:
    out = _prepare_out(cfg["out"], cfg["force"])
    manifest, alphabet, pairs, _, m_mean = _dataset_for_training(cfg)
    dims = _int_list(cfg["dims"], "--dims")
    seeds = _int_list(cfg["seeds"], "--seeds")
    if any(b <= a for a, b in zip(dims, dims[1:])) or not dims:
        raise UsageError(f"--dims must be strictly ascending, got {cfg['dims']!r}")
    test_clusters = datagen.load_clusters(
        os.path.join(cfg["data"], manifest["files"]["test_clusters"]), alphabet
    )
    probes = [c.reference for c in test_clusters]
    train_cfg = _train_config(cfg, cfg["seed"])
    report = esd.esd_scan(
        pairs, probes, alphabet,
        arch_kind=cfg["arch"], dims=dims, cfg=train_cfg,
        mean_independent_distance=m_mean,
        tau=cfg["tau"], slack=cfg["slack"], seeds=tuple(seeds),
        cov_pairs=cfg["cov_pairs"], input_len=cfg["input_len"], out_dir=out,
    )
    payload = {
        "arch": cfg["arch"],
        "dims": report.dims,
        "seeds": report.seeds,
        "tau": report.tau,
        "slack": report.slack,
        "n0": report.n0,
        "n0_spread": report.n0_spread,
        "by_seed": {
            str(seed): {
                "n0": det.n0,
                "is_lower_bound": det.is_lower_bound,
                "lower_bound": det.lower_bound,
                "ranks": {str(k): v for k, v in det.ranks.items()},
                "a4_suspect_dims": list(det.suspect_dims),
            }
            for seed, det in report.detections.items()
        },
    }
    with open(os.path.join(out, "esd_report.json"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")
    _write_config(cfg, out)
    for seed, det in report.detections.items():
        log.info("seed %d: %s (ranks %s)", seed, det.describe(), det.ranks)
    return 0


def cmd_eval(cfg: dict) -> int:
    out = _prepare_out(cfg["out"], cfg["force"])
    model, meta = ckpt.load_checkpoint(cfg["checkpoint"])
    manifest = _load_manifest(cfg["data"])
    alphabet = Alphabet(meta["alphabet"])
    if meta["alphabet"] != manifest["alphabet"]:
        raise DataError("checkpoint and dataset use different alphabets")
    pairs = datagen.load_pairs(os.path.join(cfg["data"], manifest["files"]["test_pairs"]), alphabet)
    if not pairs:
        raise DataError("no test pairs to evaluate")
    m_mean = float(meta["mean_independent_distance"])
    dim = model.spec.embedding_dim

    dhat = metrics.pair_predictions(model, pairs, alphabet)
    d = np.array([p.d for p in pairs], dtype=np.float64)
    hom = np.array([p.homologous for p in pairs], dtype=bool)
    ae_g = metrics.ae_values(dhat, d)
    ae_h = metrics.ae_values(dhat[hom], d[hom]) if hom.any() else float("nan")
    metrics.write_errors_csv(
        os.path.join(out, "errors.csv"),
        [{
            "arch": model.spec.kind, "dim": dim, "loss": meta["loss"],
            "seed": meta["seed"], "ae_g": ae_g, "ae_h": ae_h,
        }],
    )

    rows, skipped = metrics.variance_profile_values(dhat, d, m_mean, dim)
    metrics.write_variance_profile_csv(os.path.join(out, "variance_profile.csv"), rows)
    if skipped:
        log.info("variance profile: %d sparse distance buckets omitted", len(skipped))

    k = dim / m_mean
    fits = []
    for value in sorted(set(int(v) for v in d)):
        sel = dhat[d == value]
        if value > 0 and sel.size >= 200:
            fits.append(metrics.chi2_fit_values(sel, value, k, cfg["alpha"]))
    metrics.write_chi2_csv(os.path.join(out, "chi2_fit.csv"), fits)

    seqs = list(dict.fromkeys([p.s for p in pairs] + [p.t for p in pairs]))
    if len(seqs) >= 1000:
        eval_rows, batch_rows = metrics.embedding_normality(
            model, seqs, alphabet, first_m=cfg["normality_elements"]
        )
    else:
        log.warning("normality check skipped: %d unique sequences < 1000", len(seqs))
        eval_rows, batch_rows = [], []
    metrics.write_normality_csv(os.path.join(out, "normality.csv"), eval_rows)
    metrics.write_normality_csv(os.path.join(out, "normality_batchstat.csv"), batch_rows)

    scan_seqs = list(dict.fromkeys(p.s for p in pairs))[: cfg["outlier_seqs"]]
    report = metrics.outlier_scan(
        model, scan_seqs, alphabet, top_k=cfg["outlier_top"],
        rng=substream(cfg["seed"], "outliers"),
    )
    metrics.write_outliers_csv(os.path.join(out, "outliers.csv"), report)
    metrics.write_mean_d_hist_csv(os.path.join(out, "mean_d_hist.csv"), report)
    _write_config(cfg, out)
    log.info("ae_g=%.4f ae_h=%.4f over %d pairs", ae_g, ae_h, len(pairs))
    return 0


def _grid_cell(payload: dict) -> dict:
    """Train and evaluate one grid cell; runs in a worker process."""
    try:
        manifest = _load_manifest(payload["data"])
        alphabet = Alphabet(manifest["alphabet"])
        pairs = datagen.load_pairs(os.path.join(payload["data"], manifest["files"]["train_pairs"]), alphabet)
        test_pairs = datagen.load_pairs(os.path.join(payload["data"], manifest["files"]["test_pairs"]), alphabet)
        m_mean = manifest["mean_independent_distance"]["mean"]
        spec = siamese.ArchitectureSpec(
            kind=payload["arch"], embedding_dim=payload["dim"],
            input_len=payload["input_len"], alphabet_size=alphabet.size,
        )
        model = siamese.EmbeddingModel(
            spec, substream(payload["seed"], "init"), mean_independent_distance=m_mean
        )
        train_cfg = siamese.TrainConfig(
            loss=payload["loss"], gnll_k=payload.get("gnll_k"),
            epochs=payload["epochs"], batch_size=payload["batch"], lr=payload["lr"],
            seed=payload["seed"], val_fraction=payload["val_fraction"],
        )
        logs = siamese.train(model, pairs, alphabet, train_cfg)
        os.makedirs(payload["cell_dir"], exist_ok=True)
        _write_train_log(os.path.join(payload["cell_dir"], "train_log.csv"), logs)
        ae_g = metrics.ae_global(model, test_pairs, alphabet)
        hom = [p for p in test_pairs if p.homologous]
        ae_h = metrics.ae_homologous(model, hom, alphabet) if hom else float("nan")
        return {**payload, "status": "ok", "ae_g": ae_g, "ae_h": ae_h}
    except LevembedError as exc:
        return {**payload, "status": "failed", "error": str(exc)}


def cmd_grid(cfg: dict) -> int:
    out = _prepare_out(cfg["out"], cfg["force"])
    archs = [a for a in cfg["archs"].split(",") if a]
    dims = _int_list(cfg["dims"], "--dims")
    losses = [x for x in cfg["losses"].split(",") if x]
    seeds = _int_list(cfg["seeds"], "--seeds")
    for a in archs:
        if a not in siamese.ARCH_KINDS:
            raise UsageError(f"unknown architecture {a!r}")
    for loss_name in losses:
        if loss_name not in siamese.LOSS_KINDS:
            raise UsageError(f"unknown loss {loss_name!r}")
    cells = []
    for arch in archs:
        for dim in dims:
            for loss_name in losses:
                for seed in seeds:
                    cell_dir = os.path.join(out, "cells", f"{arch}-d{dim}-{loss_name}-s{seed}")
                    cells.append({
                        "data": cfg["data"], "arch": arch, "dim": dim, "loss": loss_name,
                        "seed": seed, "gnll_k": cfg.get("gnll_k"), "epochs": cfg["epochs"],
                        "batch": cfg["batch"], "lr": cfg["lr"], "input_len": cfg["input_len"],
                        "val_fraction": cfg["val_fraction"], "cell_dir": cell_dir,
                    })
    jobs = max(1, int(cfg["jobs"]))
    if jobs == 1:
        results = [_grid_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_grid_cell, cells))
    results.sort(key=lambda r: (r["arch"], r["dim"], r["loss"], r["seed"]))
    ok_rows = [r for r in results if r["status"] == "ok"]
    for r in results:
        if r["status"] != "ok":
            log.warning("cell %s-d%d-%s-s%d failed: %s", r["arch"], r["dim"], r["loss"], r["seed"], r.get("error"))
    metrics.write_errors_csv(os.path.join(out, "errors.csv"), ok_rows)
    with open(os.path.join(out, "grid.csv"), "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["arch", "dim", "loss", "seeds", "ok", "ae_g_mean", "ae_g_std", "ae_h_mean", "ae_h_std"])
        for arch in archs:
            for dim in dims:
                for loss_name in losses:
                    group = [
                        r for r in ok_rows
                        if r["arch"] == arch and r["dim"] == dim and r["loss"] == loss_name
                    ]
                    if group:
                        ae_gs = [r["ae_g"] for r in group]
                        ae_hs = [r["ae_h"] for r in group]
                        w.writerow([
                            arch, dim, loss_name, len(seeds), len(group),
                            f"{statistics.fmean(ae_gs):.4f}", f"{_pstd(ae_gs):.4f}",
                            f"{statistics.fmean(ae_hs):.4f}", f"{_pstd(ae_hs):.4f}",
                        ])
                    else:
                        w.writerow([arch, dim, loss_name, len(seeds), 0, "", "", "", ""])
    _write_config(cfg, out)
    log.info("grid complete: %d/%d cells ok", len(ok_rows), len(cells))
    return 0


def _pstd(values) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64)))  # population std: 0 for one seed


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "esd-scan": cmd_esd_scan,
    "eval": cmd_eval,
    "grid": cmd_grid,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        cfg = _resolve_config(argv)
        return COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
