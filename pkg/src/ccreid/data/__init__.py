from ccreid.data.manifest import DatasetManifest, ImageRecord, load_manifest, save_manifest
from ccreid.data.protocol import build_protocol
from ccreid.data.toygen import CameraStyle, ToyGenSpec, default_camera_styles, generate_toy_dataset

__all__ = [
    "ImageRecord",
    "DatasetManifest",
    "load_manifest",
    "save_manifest",
    "build_protocol",
    "CameraStyle",
    "ToyGenSpec",
    "default_camera_styles",
    "generate_toy_dataset",
]
