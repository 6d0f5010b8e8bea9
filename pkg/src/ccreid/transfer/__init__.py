from ccreid.transfer.losses import (
    TransferLossReport,
    adversarial_loss,
    domain_loss,
    reconstruction_loss,
)
from ccreid.transfer.networks import CameraDiscriminator, CameraGenerator, camera_code
from ccreid.transfer.training import TransferConfig, train_transfer
from ccreid.transfer.translate import TranslateConfig, translate_dataset

__all__ = [
    "adversarial_loss",
    "domain_loss",
    "reconstruction_loss",
    "TransferLossReport",
    "CameraGenerator",
    "CameraDiscriminator",
    "camera_code",
    "TransferConfig",
    "train_transfer",
    "TranslateConfig",
    "translate_dataset",
]
