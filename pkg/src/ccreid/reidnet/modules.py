"""Alignment and attention building blocks of the feature network."""

from __future__ import annotations

import logging

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from ccreid.errors import ValidationError

log = logging.getLogger(__name__)

IDENTITY_AFFINE = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)


class ChannelAttention(nn.Module):
    """Channel re-weighting: softmax(conv1x1(global_avg_pool(f))).

    ``mask`` returns the per-channel probability vector M (rows sum to 1);
    the forward pass multiplies the input by M channel-wise.
    """

    def __init__(self, channels: int):
        super().__init__()
        if channels <= 0:
            raise ValidationError("channel count must be positive")
        self.conv = nn.Conv2d(channels, channels, kernel_size=1)

    def mask(self, f_r: Tensor) -> Tensor:
        if f_r.ndim != 4 or f_r.shape[1] != self.conv.in_channels:
            raise ValidationError(
                f"expected (B, {self.conv.in_channels}, H, W) feature map, "
                f"got {tuple(f_r.shape)}"
            )
        pooled = F.adaptive_avg_pool2d(f_r, 1)
        return F.softmax(self.conv(pooled).flatten(1), dim=1)

    def forward(self, f: Tensor) -> Tensor:
        return apply_attention(f, self.mask(f))


def apply_attention(f_a: Tensor, mask: Tensor) -> Tensor:
    """Scale each channel k of f_a by mask[k] (broadcast over H and W)."""
    if mask.ndim == 1:
        mask = mask.unsqueeze(0).expand(f_a.shape[0], -1)
    if mask.shape[-1] != f_a.shape[1]:
        raise ValidationError(
            f"mask length {mask.shape[-1]} does not match {f_a.shape[1]} channels"
        )
    return f_a * mask[:, :, None, None]


class AffineAlignment(nn.Module):
    """Spatial transformer: localization net -> affine grid -> bilinear sample.

    The affine regressor's last layer is zero-initialized with an
    identity-transform bias, so alignment starts as a no-op.
    """

    def __init__(self, in_channels: int, mid_channels: int = 8,
                 out_size: tuple[int, int] | None = None):
        super().__init__()
        self.out_size = out_size
        self.localization = nn.Sequential(
            nn.Conv2d(in_channels, mid_channels, 3, 1, 1),
            nn.ReLU(inplace=True),
            nn.Conv2d(mid_channels, mid_channels, 3, 1, 1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(2),
        )
        self.regressor = nn.Sequential(
            nn.Linear(mid_channels * 4, 16),
            nn.ReLU(inplace=True),
            nn.Linear(16, 6),
        )
        final: nn.Linear = self.regressor[-1]
        nn.init.zeros_(final.weight)
        with torch.no_grad():
            final.bias.copy_(torch.tensor(IDENTITY_AFFINE))

    def predict_theta(self, x: Tensor) -> Tensor:
        return self.regressor(self.localization(x).flatten(1)).view(-1, 2, 3)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[-2] < 2 or x.shape[-1] < 2:
            raise ValidationError("alignment needs a (B, C, H>=2, W>=2) feature map")
        theta = self.predict_theta(x)
        det = theta[:, 0, 0] * theta[:, 1, 1] - theta[:, 0, 1] * theta[:, 1, 0]
        if torch.any(det.abs() < 1e-6):
            log.warning("alignment predicted a near-singular affine transform")
        return affine_resample(x, theta, self.out_size)


def affine_resample(x: Tensor, theta: Tensor, out_size: tuple[int, int] | None = None) -> Tensor:
    """Bilinear resample of x under per-sample 2x3 affine maps.

    Grid coordinates are normalized to [-1, 1]; samples outside the input
    read as zero.
    """
    h, w = out_size if out_size is not None else x.shape[-2:]
    grid = F.affine_grid(theta, (x.shape[0], x.shape[1], h, w), align_corners=False)
    return F.grid_sample(x, grid, mode="bilinear", padding_mode="zeros",
                         align_corners=False)
