"""Experiment configuration: one flat INI file, one section per stage.

Sections and keys map 1:1 onto the stage dataclasses; command-line
overrides of the form ``section.key=value`` take precedence over file
values.  The artifact root for relative paths can be overridden with the
``CCREID_ARTIFACT_ROOT`` environment variable.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ccreid.errors import ValidationError
from ccreid.reidnet.losses import LossWeights
from ccreid.reidnet.network import ReidConfig
from ccreid.reidnet.training import ReidTrainConfig
from ccreid.retrieval.extract import ExtractConfig
from ccreid.transfer.training import TransferConfig

ARTIFACT_ROOT_ENV = "CCREID_ARTIFACT_ROOT"


def resolve_artifact_path(path: str | Path) -> Path:
    """Relative paths resolve under $CCREID_ARTIFACT_ROOT when it is set."""
    path = Path(path)
    if path.is_absolute():
        return path
    root = os.environ.get(ARTIFACT_ROOT_ENV)
    return (Path(root) / path) if root else path


@dataclass
class DatasetSection:
    manifest: str = ""          # existing manifest; empty -> generate a toy set
    n_identities: int = 32
    n_cameras: int = 4
    images_per_id_per_camera: int = 2
    image_size: int = 64
    seed: int = 7


@dataclass
class TransferSection(TransferConfig):
    enabled: bool = True
    target_camera: int = -1     # -1: camera with the most training images


@dataclass
class ReidSection:
    # network
    stem_channels: int = 16
    base_width: int = 16
    blocks: tuple[int, ...] = (1, 1, 1, 1)
    bottleneck: bool = False
    embedding_dim: int = 128
    use_alignment: bool = True
    use_attention: bool = True
    rigid_split: bool = False   # shorthand: disables alignment and attention
    # optimization
    epochs_high: int = 10
    epochs_low: int = 5
    lr_high: float = 0.1
    lr_low: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 16
    lambda_upper: float = 1.0
    lambda_lower: float = 1.0
    seed: int = 0

    def net_config(self, image_size: int) -> ReidConfig:
        rigid = self.rigid_split
        return ReidConfig(
            image_size=image_size,
            stem_channels=self.stem_channels,
            base_width=self.base_width,
            blocks=tuple(self.blocks),
            bottleneck=self.bottleneck,
            embedding_dim=self.embedding_dim,
            use_alignment=self.use_alignment and not rigid,
            use_attention=self.use_attention and not rigid,
        )

    def train_config(self) -> ReidTrainConfig:
        return ReidTrainConfig(
            epochs_high=self.epochs_high,
            epochs_low=self.epochs_low,
            lr_high=self.lr_high,
            lr_low=self.lr_low,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            weights=LossWeights(self.lambda_upper, self.lambda_lower),
            seed=self.seed,
        )


@dataclass
class EvaluateSection:
    protocol: str = "veri"
    filter: str = "cross_camera"
    trials: int = 10
    seed: int = 3
    max_rank: int = 10


@dataclass
class ExperimentConfig:
    dataset: DatasetSection = field(default_factory=DatasetSection)
    transfer: TransferSection = field(default_factory=TransferSection)
    reid: ReidSection = field(default_factory=ReidSection)
    retrieval: ExtractConfig = field(default_factory=ExtractConfig)
    evaluate: EvaluateSection = field(default_factory=EvaluateSection)

    _SECTIONS = ("dataset", "transfer", "reid", "retrieval", "evaluate")

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for name in self._SECTIONS:
            section = getattr(self, name)
            parser[name] = {}
            for f in fields(section):
                parser[name][f.name] = _format_value(getattr(section, f.name))
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini())
        return path

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in self._SECTIONS}

    def apply_overrides(self, overrides: list[str]) -> None:
        for item in overrides:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ValidationError(
                    f"override {item!r} must look like section.key=value"
                )
            key, value = item.split("=", 1)
            section_name, field_name = key.split(".", 1)
            self._set(section_name.strip(), field_name.strip(), value.strip())

    def _set(self, section_name: str, field_name: str, raw: str) -> None:
        if section_name not in self._SECTIONS:
            raise ValidationError(f"unknown config section {section_name!r}")
        section = getattr(self, section_name)
        for f in fields(section):
            if f.name == field_name:
                setattr(section, f.name, _parse_value(raw, getattr(section, f.name),
                                                      f"{section_name}.{field_name}"))
                return
        raise ValidationError(f"unknown config key {section_name}.{field_name}")

    @classmethod
    def from_ini(cls, path: str | Path, overrides: list[str] | None = None
                 ) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ValidationError(f"{path}: {exc}") from exc
        config = cls()
        for section_name in parser.sections():
            for key, raw in parser[section_name].items():
                config._set(section_name, key, raw)
        config.apply_overrides(overrides or [])
        return config


def _format_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if isinstance(value, LossWeights):  # not expected in INI, defensive
        return f"{value.lambda_upper},{value.lambda_lower}"
    return str(value)


def _parse_value(raw: str, current, label: str):
    try:
        if isinstance(current, bool):
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, (tuple, list)):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError as exc:
        raise ValidationError(f"bad value for {label}: {exc}") from exc
