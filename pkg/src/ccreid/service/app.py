"""FastAPI service wrapping the experiment pipeline.

Run with ``ccreid serve`` (or ``uvicorn ccreid.service.app:app``).  The
CLI is a thin client of these endpoints; by default it talks to an
in-process instance of this app, so the same surface is exercised with
or without a running server.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

import ccreid
from ccreid.config import ExperimentConfig, resolve_artifact_path
from ccreid.data.manifest import load_manifest
from ccreid.data.toygen import ToyGenSpec, generate_toy_dataset
from ccreid.errors import ValidationError
from ccreid.metrics import EvalReport, evaluate_protocol
from ccreid.pipeline import run_pipeline
from ccreid.reidnet.training import ReidModel, train_reid
from ccreid.reporting import write_comparison
from ccreid.retrieval.extract import extract
from ccreid.retrieval.store import DescriptorStore
from ccreid.service import schemas
from ccreid.transfer.training import train_transfer
from ccreid.transfer.translate import TranslateConfig, most_populated_camera, translate_dataset

log = logging.getLogger(__name__)


def _experiment_config(req: schemas.ConfiguredRequest) -> ExperimentConfig:
    if req.config:
        return ExperimentConfig.from_ini(resolve_artifact_path(req.config), req.set)
    config = ExperimentConfig()
    config.apply_overrides(req.set)
    return config


def create_app() -> FastAPI:
    app = FastAPI(
        title="ccreid",
        description="Cross-camera adaptation pipeline for vehicle re-identification",
        version=ccreid.__version__,
    )

    @app.exception_handler(ValidationError)
    async def _validation_error(request: Request, exc: ValidationError):
        return JSONResponse(status_code=422,
                            content={"detail": str(exc), "error": "validation"})

    @app.exception_handler(Exception)
    async def _runtime_error(request: Request, exc: Exception):
        log.exception("request failed: %s", exc)
        return JSONResponse(status_code=500,
                            content={"detail": str(exc), "error": "runtime"})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=ccreid.__version__)

    @app.post("/toygen", response_model=schemas.ToygenResponse)
    def toygen(req: schemas.ToygenRequest):
        spec = ToyGenSpec(
            n_identities=req.n_identities,
            n_cameras=req.n_cameras,
            images_per_id_per_camera=req.images_per_id_per_camera,
            image_size=req.image_size,
            seed=req.seed,
        )
        out_dir = resolve_artifact_path(req.out_dir)
        manifest = generate_toy_dataset(spec, out_dir)
        return schemas.ToygenResponse(
            manifest=str(out_dir / "manifest.jsonl"),
            n_images=len(manifest.records),
            n_identities=manifest.n_identities,
            n_cameras=manifest.n_cameras,
        )

    @app.post("/train-transfer", response_model=schemas.TrainTransferResponse)
    def train_transfer_endpoint(req: schemas.TrainTransferRequest):
        config = _experiment_config(req)
        manifest = load_manifest(resolve_artifact_path(req.manifest))
        out_dir = resolve_artifact_path(req.out_dir)
        from ccreid.pipeline import _strip_section

        ckpt = train_transfer(manifest, _strip_section(config.transfer), out_dir)
        return schemas.TrainTransferResponse(
            checkpoint=str(ckpt), log=str(out_dir / "transfer_log.csv")
        )

    @app.post("/translate", response_model=schemas.TranslateResponse)
    def translate(req: schemas.TranslateRequest):
        manifest = load_manifest(resolve_artifact_path(req.manifest))
        target = req.target_camera
        if target < 0:
            target = most_populated_camera(manifest)
        ckpt = resolve_artifact_path(req.checkpoint) if req.checkpoint else None
        out = translate_dataset(
            ckpt, manifest, target, resolve_artifact_path(req.out_dir),
            TranslateConfig(passthrough=req.passthrough),
        )
        return schemas.TranslateResponse(
            manifest=str(resolve_artifact_path(req.out_dir) / "manifest.jsonl"),
            n_records=len(out.records),
            target_camera=target,
        )

    @app.post("/train-reid", response_model=schemas.TrainReidResponse)
    def train_reid_endpoint(req: schemas.TrainReidRequest):
        config = _experiment_config(req)
        manifest = load_manifest(resolve_artifact_path(req.manifest))
        image_size = req.image_size or config.dataset.image_size
        out_dir = resolve_artifact_path(req.out_dir)
        ckpt = train_reid(manifest, config.reid.net_config(image_size),
                          config.reid.train_config(), out_dir)
        n_ids = len({r.vehicle_id for r in manifest.split("train")})
        return schemas.TrainReidResponse(
            checkpoint=str(ckpt), log=str(out_dir / "reid_log.csv"), n_identities=n_ids
        )

    @app.post("/extract", response_model=schemas.ExtractResponse)
    def extract_endpoint(req: schemas.ExtractRequest):
        config = _experiment_config(req)
        manifest = load_manifest(resolve_artifact_path(req.manifest))
        model = ReidModel.load(resolve_artifact_path(req.checkpoint))
        if req.split == "all":
            records = list(manifest.records)
        elif req.split == "test":
            records = manifest.split("query", "gallery")
        elif req.split in ("train", "query", "gallery"):
            records = manifest.split(req.split)
        else:
            raise ValidationError(f"unknown split selector {req.split!r}")
        if not records:
            raise ValidationError(f"no records in split {req.split!r}")
        store, errors = extract(model, manifest, records=records, config=config.retrieval)
        out = resolve_artifact_path(req.out)
        store.save(out)
        return schemas.ExtractResponse(store=str(out), count=len(store),
                                       dim=store.dim, errors=errors)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_endpoint(req: schemas.EvaluateRequest):
        config = _experiment_config(req)
        store = DescriptorStore.load(resolve_artifact_path(req.descriptors))
        report = evaluate_protocol(
            store,
            protocol=config.evaluate.protocol,
            filter=config.evaluate.filter,
            seed=config.evaluate.seed,
            trials=config.evaluate.trials,
            max_rank=config.evaluate.max_rank,
        )
        saved = None
        if req.out:
            saved = str(report.save(resolve_artifact_path(req.out)))
        cmc = report.cmc
        return schemas.EvaluateResponse(
            report=saved,
            map=report.map,
            rank1=cmc[0],
            rank5=cmc[4] if len(cmc) >= 5 else cmc[-1],
            n_queries=report.n_queries,
            n_gallery=report.n_gallery,
            protocol=report.protocol,
        )

    @app.post("/pipeline", response_model=schemas.PipelineResponse)
    def pipeline_endpoint(req: schemas.PipelineRequest):
        config = _experiment_config(req)
        summary = run_pipeline(config, req.run_dir)
        return schemas.PipelineResponse(
            run_dir=summary["run_dir"],
            use_transfer=summary["use_transfer"],
            map=summary["map"],
            rank1=summary["rank1"],
            per_branch_map=summary["per_branch_map"],
            reports=summary["reports"],
            table=(resolve_artifact_path(summary["table"])).read_text(),
        )

    @app.post("/report", response_model=schemas.ReportResponse)
    def report_endpoint(req: schemas.ReportRequest):
        paths = [resolve_artifact_path(p) for p in req.reports]
        table_path, plot_path = write_comparison(
            paths, resolve_artifact_path(req.out_dir), req.labels
        )
        return schemas.ReportResponse(
            table_path=str(table_path), plot_path=str(plot_path),
            table=table_path.read_text(),
        )

    return app


app = create_app()
