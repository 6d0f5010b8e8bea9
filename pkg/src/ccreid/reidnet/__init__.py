from ccreid.reidnet.losses import LossWeights, ce_loss, total_loss
from ccreid.reidnet.modules import AffineAlignment, ChannelAttention, apply_attention
from ccreid.reidnet.network import AttentionAlignNet, ReidConfig
from ccreid.reidnet.training import ReidModel, train_reid

__all__ = [
    "ce_loss",
    "total_loss",
    "LossWeights",
    "ChannelAttention",
    "apply_attention",
    "AffineAlignment",
    "AttentionAlignNet",
    "ReidConfig",
    "ReidModel",
    "train_reid",
]
