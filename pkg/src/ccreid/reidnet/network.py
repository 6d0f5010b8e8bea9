"""The attention-alignment multi-branch feature network.

Layout: a shared stem halves the input resolution (224x224x3 ->
112x112x64 at default width).  The stem map feeds a global branch and,
split into non-overlapping upper/lower halves along the height axis, two
local branches.  Each local branch passes through an affine alignment
module and a residual backbone with channel attention; the global branch
runs two parallel backbone streams whose pooled features are concatenated.
Every branch ends in a fully connected embedding of size ``embedding_dim``
and its own identity classifier.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from ccreid.errors import ValidationError
from ccreid.reidnet.modules import AffineAlignment, ChannelAttention


@dataclass
class ReidConfig:
    image_size: int = 224
    stem_channels: int = 64
    base_width: int = 64            # residual stage widths are x1,x2,x4,x8
    blocks: tuple[int, ...] = (3, 4, 6, 3)
    bottleneck: bool = True         # bottleneck blocks give a 50-layer-class net
    embedding_dim: int = 4096
    use_alignment: bool = True
    use_attention: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["blocks"] = list(self.blocks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReidConfig":
        d = dict(d)
        d["blocks"] = tuple(d["blocks"])
        return cls(**d)

    @classmethod
    def toy(cls, image_size: int = 64, embedding_dim: int = 128) -> "ReidConfig":
        return cls(image_size=image_size, stem_channels=16, base_width=16,
                   blocks=(1, 1, 1, 1), bottleneck=False, embedding_dim=embedding_dim)


class _BasicBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.short = None
        if stride != 1 or c_in != c_out:
            self.short = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride, bias=False), nn.BatchNorm2d(c_out)
            )

    def forward(self, x: Tensor) -> Tensor:
        h = F.relu(self.bn1(self.conv1(x)), inplace=True)
        h = self.bn2(self.conv2(h))
        s = x if self.short is None else self.short(x)
        return F.relu(h + s, inplace=True)


class _Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, c_in: int, c_mid: int, stride: int):
        super().__init__()
        c_out = c_mid * self.expansion
        self.conv1 = nn.Conv2d(c_in, c_mid, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_mid)
        self.conv2 = nn.Conv2d(c_mid, c_mid, 3, stride, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_mid)
        self.conv3 = nn.Conv2d(c_mid, c_out, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(c_out)
        self.short = None
        if stride != 1 or c_in != c_out:
            self.short = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride, bias=False), nn.BatchNorm2d(c_out)
            )

    def forward(self, x: Tensor) -> Tensor:
        h = F.relu(self.bn1(self.conv1(x)), inplace=True)
        h = F.relu(self.bn2(self.conv2(h)), inplace=True)
        h = self.bn3(self.conv3(h))
        s = x if self.short is None else self.short(x)
        return F.relu(h + s, inplace=True)


class ResidualBackbone(nn.Module):
    """Four residual stages (strides 1,2,2,2) after a stride-2 max pool."""

    def __init__(self, in_channels: int, base_width: int, blocks: tuple[int, ...],
                 bottleneck: bool):
        super().__init__()
        stages = []
        c_in = in_channels
        for i, n_blocks in enumerate(blocks):
            width = base_width * (2 ** i)
            stride = 1 if i == 0 else 2
            for b in range(n_blocks):
                if bottleneck:
                    stages.append(_Bottleneck(c_in, width, stride if b == 0 else 1))
                    c_in = width * _Bottleneck.expansion
                else:
                    stages.append(_BasicBlock(c_in, width, stride if b == 0 else 1))
                    c_in = width
        self.stages = nn.Sequential(*stages)
        self.out_channels = c_in

    def forward(self, x: Tensor) -> Tensor:
        x = F.max_pool2d(x, kernel_size=2, stride=2, ceil_mode=True)
        return self.stages(x)


class _Branch(nn.Module):
    """Backbone stream(s) -> optional attention -> pooled embedding of size d."""

    def __init__(self, in_channels: int, cfg: ReidConfig, n_streams: int,
                 align_size: tuple[int, int] | None):
        super().__init__()
        self.align = None
        if cfg.use_alignment and align_size is not None:
            self.align = AffineAlignment(in_channels, out_size=align_size)
        self.streams = nn.ModuleList(
            ResidualBackbone(in_channels, cfg.base_width, cfg.blocks, cfg.bottleneck)
            for _ in range(n_streams)
        )
        feat_ch = self.streams[0].out_channels
        self.attentions = None
        if cfg.use_attention:
            self.attentions = nn.ModuleList(ChannelAttention(feat_ch) for _ in range(n_streams))
        self.embed = nn.Linear(feat_ch * n_streams, cfg.embedding_dim)

    def forward(self, x: Tensor) -> Tensor:
        if self.align is not None:
            x = self.align(x)
        pooled = []
        for i, stream in enumerate(self.streams):
            h = stream(x)
            if self.attentions is not None:
                h = self.attentions[i](h)
            pooled.append(F.adaptive_avg_pool2d(h, 1).flatten(1))
        return self.embed(torch.cat(pooled, dim=1))


class AttentionAlignNet(nn.Module):
    """Stem + global/upper/lower branches + per-branch identity classifiers."""

    def __init__(self, n_identities: int, config: ReidConfig | None = None):
        super().__init__()
        cfg = config or ReidConfig()
        if cfg.image_size % 4:
            raise ValidationError("input image side must be divisible by 4")
        if n_identities < 1:
            raise ValidationError("need at least one identity")
        self.config = cfg
        self.n_identities = n_identities

        self.stem = nn.Sequential(
            nn.Conv2d(3, cfg.stem_channels, 7, 2, 3, bias=False),
            nn.BatchNorm2d(cfg.stem_channels),
            nn.ReLU(inplace=True),
        )
        half = cfg.image_size // 2
        local_size = (half // 2, half)
        self.global_branch = _Branch(cfg.stem_channels, cfg, n_streams=2, align_size=None)
        self.upper_branch = _Branch(cfg.stem_channels, cfg, n_streams=1, align_size=local_size)
        self.lower_branch = _Branch(cfg.stem_channels, cfg, n_streams=1, align_size=local_size)

        self.classifier_g = nn.Linear(cfg.embedding_dim, n_identities)
        self.classifier_u = nn.Linear(cfg.embedding_dim, n_identities)
        self.classifier_l = nn.Linear(cfg.embedding_dim, n_identities)
        for fc in (self.classifier_g, self.classifier_u, self.classifier_l):
            nn.init.normal_(fc.weight, std=0.001)
            nn.init.zeros_(fc.bias)

    def stem_map(self, batch: Tensor) -> Tensor:
        s = self.config.image_size
        if batch.ndim != 4 or batch.shape[1] != 3 or batch.shape[-2:] != (s, s):
            raise ValidationError(
                f"expected a (B, 3, {s}, {s}) image batch, got {tuple(batch.shape)}"
            )
        if batch.shape[0] < 1:
            raise ValidationError("batch must be non-empty")
        return self.stem(batch - 0.5)

    @staticmethod
    def split_parts(stem_map: Tensor) -> tuple[Tensor, Tensor]:
        """Non-overlapping upper/lower halves along the height axis."""
        h = stem_map.shape[-2]
        return stem_map[:, :, : h // 2, :], stem_map[:, :, h // 2 :, :]

    def features(self, batch: Tensor) -> tuple[Tensor, Tensor, Tensor]:
        fmap = self.stem_map(batch)
        upper, lower = self.split_parts(fmap)
        return (
            self.global_branch(fmap),
            self.upper_branch(upper),
            self.lower_branch(lower),
        )

    def forward(self, batch: Tensor):
        f_g, f_u, f_l = self.features(batch)
        return (
            f_g, f_u, f_l,
            self.classifier_g(f_g), self.classifier_u(f_u), self.classifier_l(f_l),
        )
