"""Request/response models of the experiment service.

The service is an orchestration API: requests and responses carry paths
and headline numbers, while images, checkpoints and descriptor stores
stay on the filesystem.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ConfiguredRequest(BaseModel):
    """Base for stage requests: optional config file plus flat overrides."""

    config: str | None = Field(default=None, description="experiment INI file")
    set: list[str] = Field(default_factory=list,
                           description="section.key=value overrides")


class ToygenRequest(BaseModel):
    out_dir: str
    n_identities: int = 32
    n_cameras: int = 4
    images_per_id_per_camera: int = 2
    image_size: int = 64
    seed: int = 7


class ToygenResponse(BaseModel):
    manifest: str
    n_images: int
    n_identities: int
    n_cameras: int


class TrainTransferRequest(ConfiguredRequest):
    manifest: str
    out_dir: str


class TrainTransferResponse(BaseModel):
    checkpoint: str
    log: str


class TranslateRequest(ConfiguredRequest):
    checkpoint: str | None = None
    manifest: str
    out_dir: str
    target_camera: int = -1   # -1: camera with the most training images
    passthrough: bool = False


class TranslateResponse(BaseModel):
    manifest: str
    n_records: int
    target_camera: int


class TrainReidRequest(ConfiguredRequest):
    manifest: str
    out_dir: str
    image_size: int | None = None  # defaults to the dataset section's size


class TrainReidResponse(BaseModel):
    checkpoint: str
    log: str
    n_identities: int


class ExtractRequest(ConfiguredRequest):
    checkpoint: str
    manifest: str
    out: str
    split: str = "test"   # train | query | gallery | test | all


class ExtractResponse(BaseModel):
    store: str
    count: int
    dim: int
    errors: list[str]


class EvaluateRequest(ConfiguredRequest):
    descriptors: str
    out: str | None = None


class EvaluateResponse(BaseModel):
    report: str | None
    map: float
    rank1: float
    rank5: float
    n_queries: int
    n_gallery: int
    protocol: dict


class PipelineRequest(ConfiguredRequest):
    run_dir: str


class PipelineResponse(BaseModel):
    run_dir: str
    use_transfer: bool
    map: float
    rank1: float
    per_branch_map: dict[str, float]
    reports: dict[str, str]
    table: str


class ReportRequest(BaseModel):
    reports: list[str]
    out_dir: str
    labels: list[str] | None = None


class ReportResponse(BaseModel):
    table_path: str
    plot_path: str
    table: str
