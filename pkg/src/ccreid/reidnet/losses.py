"""Identification losses of the multi-branch feature network."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor

from ccreid.errors import ValidationError


@dataclass(frozen=True)
class LossWeights:
    """Weights of the upper- and lower-branch identification losses."""

    lambda_upper: float = 1.0
    lambda_lower: float = 1.0

    def __post_init__(self):
        if self.lambda_upper < 0 or self.lambda_lower < 0:
            raise ValidationError("branch loss weights must be non-negative")


def ce_loss(logits: Tensor, labels: Tensor) -> Tensor:
    """Softmax cross-entropy, averaged over the batch.

    The per-sample term is -log softmax(logits)[label]; the batch mean
    keeps the value independent of batch size.
    """
    if logits.ndim != 2 or labels.ndim != 1 or logits.shape[0] != labels.shape[0]:
        raise ValidationError(
            f"expected (m, n) logits and (m,) labels, got "
            f"{tuple(logits.shape)} / {tuple(labels.shape)}"
        )
    if logits.shape[0] < 1:
        raise ValidationError("batch must be non-empty")
    if torch.any(labels < 0) or torch.any(labels >= logits.shape[1]):
        raise ValidationError(
            f"labels must lie in [0, {logits.shape[1]}); got "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    return F.cross_entropy(logits, labels)


def total_loss(l_g: Tensor | float, l_u: Tensor | float, l_l: Tensor | float,
               weights: LossWeights) -> Tensor | float:
    """Weighted sum of the three branch losses:
    global + lambda_upper * upper + lambda_lower * lower."""
    for name, value in (("global", l_g), ("upper", l_u), ("lower", l_l)):
        scalar = float(value.detach()) if isinstance(value, Tensor) else float(value)
        if not math.isfinite(scalar):
            raise ValidationError(f"{name} branch loss is not finite")
    return l_g + weights.lambda_upper * l_u + weights.lambda_lower * l_l
