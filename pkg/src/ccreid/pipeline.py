"""End-to-end experiment pipeline.

Stages: generate/load dataset -> train camera transfer -> translate the
train split into the common camera -> train the feature network ->
extract test descriptors -> evaluate (fused plus per-branch descriptors)
-> table and CMC plot.

Each stage owns a subdirectory of the run directory and drops a ``.done``
marker when it finishes, so an interrupted run resumes where it stopped
and rerunning a completed stage is a no-op.  A lock file makes the run
directory single-owner; the config echo plus recorded seeds make reruns
bit-reproducible.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from ccreid.config import ExperimentConfig, resolve_artifact_path
from ccreid.data.manifest import DatasetManifest, load_manifest
from ccreid.data.toygen import ToyGenSpec, generate_toy_dataset
from ccreid.errors import ValidationError
from ccreid.metrics import EvalReport, evaluate_protocol
from ccreid.reidnet.training import ReidModel, train_reid
from ccreid.reporting import format_table
from ccreid.retrieval.extract import extract
from ccreid.retrieval.store import DescriptorStore
from ccreid.transfer.training import train_transfer
from ccreid.transfer.translate import TranslateConfig, most_populated_camera, translate_dataset

log = logging.getLogger(__name__)

DESCRIPTOR_VARIANTS = ("all", "global", "part1", "part2")


class RunLock:
    """Exclusive ownership of a run directory while a pipeline executes."""

    def __init__(self, run_dir: Path):
        self.path = run_dir / ".lock"
        self.fd = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(
                f"run directory is locked by another pipeline run: {self.path} "
                "(remove the lock file if that run is dead)"
            ) from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)
        return False


def _stage_done(stage_dir: Path) -> bool:
    marker = stage_dir / ".done"
    if not marker.is_file():
        return False
    try:
        artifacts = json.loads(marker.read_text()).get("artifacts", [])
    except json.JSONDecodeError:
        return False
    return all((stage_dir / a).exists() for a in artifacts)


def _mark_done(stage_dir: Path, artifacts: list[str]) -> None:
    (stage_dir / ".done").write_text(json.dumps({"artifacts": artifacts}))


def run_pipeline(config: ExperimentConfig, run_dir: str | Path) -> dict:
    """Run every stage under run_dir; returns a summary dict with the
    report paths and headline numbers."""
    run_dir = resolve_artifact_path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    with RunLock(run_dir):
        config.save(run_dir / "config.ini")
        summary = _run_stages(config, run_dir)
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def _run_stages(config: ExperimentConfig, run_dir: Path) -> dict:
    # stage: dataset
    data_dir = run_dir / "data"
    if config.dataset.manifest:
        manifest = load_manifest(resolve_artifact_path(config.dataset.manifest))
    else:
        if not _stage_done(data_dir):
            spec = ToyGenSpec(
                n_identities=config.dataset.n_identities,
                n_cameras=config.dataset.n_cameras,
                images_per_id_per_camera=config.dataset.images_per_id_per_camera,
                image_size=config.dataset.image_size,
                seed=config.dataset.seed,
            )
            generate_toy_dataset(spec, data_dir)
            _mark_done(data_dir, ["manifest.jsonl"])
            log.info("dataset stage: generated toy set under %s", data_dir)
        manifest = load_manifest(data_dir / "manifest.jsonl")

    # stage: camera transfer + translation
    if config.transfer.enabled:
        transfer_dir = run_dir / "transfer"
        if not _stage_done(transfer_dir):
            train_transfer(manifest, _strip_section(config.transfer), transfer_dir)
            _mark_done(transfer_dir, ["transfer.ckpt", "transfer_log.csv"])
            log.info("transfer stage: checkpoint at %s", transfer_dir / "transfer.ckpt")
        target = config.transfer.target_camera
        if target < 0:
            target = most_populated_camera(manifest)
        translate_dir = run_dir / "translated"
        if not _stage_done(translate_dir):
            translate_dataset(transfer_dir / "transfer.ckpt", manifest, target,
                              translate_dir, TranslateConfig())
            _mark_done(translate_dir, ["manifest.jsonl"])
            log.info("translate stage: common camera %d", target)
        train_manifest = load_manifest(translate_dir / "manifest.jsonl")
    else:
        train_manifest = manifest

    # stage: feature network
    reid_dir = run_dir / "reid"
    net_config = config.reid.net_config(config.dataset.image_size)
    if not _stage_done(reid_dir):
        train_reid(train_manifest, net_config, config.reid.train_config(), reid_dir)
        _mark_done(reid_dir, ["reid.ckpt", "reid_log.csv"])
        log.info("reid stage: checkpoint at %s", reid_dir / "reid.ckpt")

    # stage: descriptor extraction over the original (untranslated) test images
    desc_dir = run_dir / "descriptors"
    desc_path = desc_dir / "test.desc"
    if not _stage_done(desc_dir):
        model = ReidModel.load(reid_dir / "reid.ckpt")
        store, errors = extract(model, manifest,
                                records=manifest.split("query", "gallery"),
                                config=config.retrieval)
        if errors:
            raise RuntimeError(f"extraction failed for {len(errors)} records: {errors[:3]}")
        store.save(desc_path)
        _mark_done(desc_dir, ["test.desc", "test.desc.meta.jsonl"])
        log.info("extract stage: %d descriptors of length %d", len(store), store.dim)

    # stage: evaluation of fused and per-branch descriptors
    report_dir = run_dir / "reports"
    if not _stage_done(report_dir):
        store = DescriptorStore.load(desc_path)
        if config.retrieval.alpha in (0.0, 1.0):
            raise ValidationError(
                "per-branch evaluation needs alpha strictly inside (0, 1); "
                f"got {config.retrieval.alpha}"
            )
        reports = {}
        for variant in DESCRIPTOR_VARIANTS:
            sub = store if variant == "all" else store.segment(
                {"global": 0, "part1": 1, "part2": 2}[variant])
            reports[variant] = evaluate_protocol(
                sub,
                protocol=config.evaluate.protocol,
                filter=config.evaluate.filter,
                seed=config.evaluate.seed,
                trials=config.evaluate.trials,
                max_rank=config.evaluate.max_rank,
                descriptor=variant,
            )
            reports[variant].save(report_dir / f"report_{variant}.json")
        table = format_table([reports[v] for v in DESCRIPTOR_VARIANTS])
        (report_dir / "table.txt").write_text(table)
        from ccreid.plots import plot_cmc

        plot_cmc([reports[v] for v in DESCRIPTOR_VARIANTS],
                 list(DESCRIPTOR_VARIANTS), report_dir / "cmc.png")
        _mark_done(report_dir, [f"report_{v}.json" for v in DESCRIPTOR_VARIANTS]
                   + ["table.txt", "cmc.png", "cmc.csv"])
        log.info("evaluate stage: reports under %s", report_dir)

    headline = EvalReport.load(report_dir / "report_all.json")
    return {
        "run_dir": str(run_dir),
        "manifest": str(Path(manifest.root) / "manifest.jsonl"),
        "use_transfer": config.transfer.enabled,
        "reports": {v: str(report_dir / f"report_{v}.json") for v in DESCRIPTOR_VARIANTS},
        "table": str(report_dir / "table.txt"),
        "map": headline.map,
        "rank1": headline.cmc[0],
        "per_branch_map": {
            v: EvalReport.load(report_dir / f"report_{v}.json").map
            for v in DESCRIPTOR_VARIANTS
        },
    }


def _strip_section(section):
    """TransferSection -> plain TransferConfig (drops orchestration keys so
    the checkpoint config echo stays loadable)."""
    from dataclasses import fields

    from ccreid.transfer.training import TransferConfig

    values = {f.name: getattr(section, f.name) for f in fields(TransferConfig)}
    return TransferConfig(**values)
