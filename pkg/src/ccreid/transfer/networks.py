"""Conditional translation networks for multi-camera style transfer.

One generator and one discriminator cover all camera domains.  The target
camera is injected into the generator as N constant spatial planes
(one-hot over cameras).  The discriminator carries two heads: a real/fake
patch head and a camera classifier producing a probability vector.

Capacity scales with a single ``base_width`` so that 8x8 gradient-check
models and full-resolution models share one code path.  Images are
expected in [0, 1]; the generator maps to [-1, 1] internally via tanh.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from ccreid.errors import ValidationError


def camera_code(camera: int | Tensor, n_cameras: int, batch: int = 1) -> Tensor:
    """One-hot camera code(s) of length n_cameras, shape (batch, N)."""
    if isinstance(camera, Tensor):
        idx = camera.long().view(-1)
    else:
        idx = torch.full((batch,), int(camera), dtype=torch.long)
    if torch.any(idx < 0) or torch.any(idx >= n_cameras):
        raise ValidationError(f"camera index out of range [0, {n_cameras})")
    return F.one_hot(idx, n_cameras).float()


class _ResBlock(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(ch, ch, 3, 1, 1, bias=False),
            nn.InstanceNorm2d(ch, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(ch, ch, 3, 1, 1, bias=False),
            nn.InstanceNorm2d(ch, affine=True),
        )

    def forward(self, x: Tensor) -> Tensor:
        return x + self.block(x)


class CameraGenerator(nn.Module):
    """Image x target-camera-code -> image of identical spatial size."""

    def __init__(self, n_cameras: int, base_width: int = 64, n_res_blocks: int = 6):
        super().__init__()
        self.n_cameras = n_cameras
        w = base_width
        self.down = nn.Sequential(
            nn.Conv2d(3 + n_cameras, w, 7, 1, 3, bias=False),
            nn.InstanceNorm2d(w, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(w, 2 * w, 4, 2, 1, bias=False),
            nn.InstanceNorm2d(2 * w, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(2 * w, 4 * w, 4, 2, 1, bias=False),
            nn.InstanceNorm2d(4 * w, affine=True),
            nn.ReLU(inplace=True),
        )
        self.bottleneck = nn.Sequential(*[_ResBlock(4 * w) for _ in range(n_res_blocks)])
        self.up = nn.Sequential(
            nn.ConvTranspose2d(4 * w, 2 * w, 4, 2, 1, bias=False),
            nn.InstanceNorm2d(2 * w, affine=True),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * w, w, 4, 2, 1, bias=False),
            nn.InstanceNorm2d(w, affine=True),
            nn.ReLU(inplace=True),
            nn.Conv2d(w, 3, 7, 1, 3),
            nn.Tanh(),
        )

    def forward(self, x: Tensor, code: Tensor) -> Tensor:
        if x.shape[-1] % 4 or x.shape[-2] % 4:
            raise ValidationError("generator input sides must be divisible by 4")
        if code.shape != (x.shape[0], self.n_cameras):
            raise ValidationError(
                f"camera code shape {tuple(code.shape)} does not match "
                f"(batch={x.shape[0]}, n_cameras={self.n_cameras})"
            )
        planes = code[:, :, None, None].expand(-1, -1, x.shape[2], x.shape[3])
        h = torch.cat([2.0 * x - 1.0, planes], dim=1)
        h = self.up(self.bottleneck(self.down(h)))
        return 0.5 * (h + 1.0)


class CameraDiscriminator(nn.Module):
    """Two-headed discriminator: patch real/fake logits and a camera
    probability vector."""

    def __init__(self, n_cameras: int, image_size: int, base_width: int = 64,
                 n_layers: int = 4):
        super().__init__()
        self.n_cameras = n_cameras
        layers: list[nn.Module] = []
        ch_in, ch = 3, base_width
        size = image_size
        for _ in range(n_layers):
            if size < 2:
                break
            layers += [nn.Conv2d(ch_in, ch, 4, 2, 1), nn.LeakyReLU(0.01, inplace=True)]
            ch_in, ch = ch, 2 * ch
            size //= 2
        self.trunk = nn.Sequential(*layers)
        self.src_head = nn.Conv2d(ch_in, 1, 3, 1, 1)
        self.dom_head = nn.Conv2d(ch_in, n_cameras, 1, 1, 0)

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Returns (real/fake probability per image, camera probabilities).

        The patch logits are averaged per image before the sigmoid; the
        camera head sees globally pooled trunk features and its output is
        softmax-normalized (rows sum to 1).
        """
        h = self.trunk(2.0 * x - 1.0)
        src = torch.sigmoid(self.src_head(h).mean(dim=(1, 2, 3)))
        dom = F.softmax(self.dom_head(F.adaptive_avg_pool2d(h, 1)).flatten(1), dim=1)
        return src, dom

    def src_logits(self, x: Tensor) -> Tensor:
        """Per-image mean patch logit (pre-sigmoid), for the gradient-penalty
        training variant."""
        return self.src_head(self.trunk(2.0 * x - 1.0)).mean(dim=(1, 2, 3))
