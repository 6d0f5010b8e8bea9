"""Objectives of the multi-camera translation network.

The generator and the two discriminator heads are trained with three
ingredients: a real/fake log loss, a camera-classification loss applied
to real images (training the discriminator head) and to generated images
(training the generator), and an L1 cycle-consistency term that brings an
image back to its source camera.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
from torch import Tensor

from ccreid.errors import ValidationError

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


def adversarial_loss(d_real: Tensor, d_fake: Tensor, clamp_eps: float | None = None) -> Tensor:
    """E[log D(x)] + E[log(1 - D(G(x,c)))] over the batch.

    Both arguments are post-sigmoid probabilities in (0, 1).  The
    discriminator ascends this value; the generator descends its second
    term.  Scores at or outside {0, 1} raise unless ``clamp_eps`` is set,
    in which case they are clamped to [clamp_eps, 1 - clamp_eps].
    """
    if clamp_eps is not None:
        d_real = d_real.clamp(clamp_eps, 1.0 - clamp_eps)
        d_fake = d_fake.clamp(clamp_eps, 1.0 - clamp_eps)
    for name, scores in (("d_real", d_real), ("d_fake", d_fake)):
        if torch.any(scores <= 0) or torch.any(scores >= 1):
            raise ValidationError(f"{name} scores must be probabilities strictly inside (0, 1)")
    return torch.log(d_real).mean() + torch.log1p(-d_fake).mean()


def domain_loss(d_dom: Tensor, target_camera: Tensor | int) -> Tensor:
    """-E[log D_dom(target | image)] for a batch of camera distributions.

    ``d_dom`` is (batch, n_cameras) and must sum to 1 per row;
    ``target_camera`` is an index or a one-hot row per sample.  A zero
    probability at the target is floored at 1e-12 and logged.
    """
    if d_dom.ndim == 1:
        d_dom = d_dom.unsqueeze(0)
    sums = d_dom.sum(dim=-1)
    if torch.any((sums - 1.0).abs() > 1e-4):
        raise ValidationError("d_dom rows must sum to 1 (softmax output expected)")
    if isinstance(target_camera, int):
        idx = torch.full((d_dom.shape[0],), target_camera, dtype=torch.long, device=d_dom.device)
    else:
        target_camera = torch.as_tensor(target_camera, device=d_dom.device)
        idx = target_camera.argmax(dim=-1) if target_camera.ndim > 1 else target_camera.long()
    if torch.any(idx < 0) or torch.any(idx >= d_dom.shape[-1]):
        raise ValidationError("target camera index out of range")
    p = d_dom.gather(1, idx.view(-1, 1)).squeeze(1)
    if torch.any(p < PROB_FLOOR):
        log.warning("domain_loss: %d probabilities floored at %.0e",
                    int((p < PROB_FLOOR).sum()), PROB_FLOOR)
        p = p.clamp_min(PROB_FLOOR)
    return -torch.log(p).mean()


def reconstruction_loss(x: Tensor, x_cycled: Tensor) -> Tensor:
    """Mean per-pixel L1 distance between an image and its cycle G(G(x,c), c*)."""
    if x.shape != x_cycled.shape:
        raise ValidationError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_cycled.shape)}")
    return (x - x_cycled).abs().mean()


@dataclass
class TransferLossReport:
    """One training step's loss values and the declared combination weights.

    The totals are the scalars the optimizers actually minimized:

        total_d = lambda_domain * l_dom_real - l_adv
        total_g = l_adv + lambda_domain * l_dom_fake + lambda_rec * l_rec

    (the E[log D(x)] part of l_adv is constant in the generator's
    parameters, so total_g has the same generator gradient as using only
    the fake term).
    """

    l_adv: float
    l_dom_real: float
    l_dom_fake: float
    l_rec: float
    total_g: float
    total_d: float
    lambda_domain: float
    lambda_rec: float

    @classmethod
    def from_components(cls, l_adv: float, l_dom_real: float, l_dom_fake: float,
                        l_rec: float, lambda_domain: float, lambda_rec: float
                        ) -> "TransferLossReport":
        return cls(
            l_adv=l_adv,
            l_dom_real=l_dom_real,
            l_dom_fake=l_dom_fake,
            l_rec=l_rec,
            total_g=l_adv + lambda_domain * l_dom_fake + lambda_rec * l_rec,
            total_d=lambda_domain * l_dom_real - l_adv,
            lambda_domain=lambda_domain,
            lambda_rec=lambda_rec,
        )

    def validate(self) -> None:
        if self.l_rec < 0:
            raise ValidationError("reconstruction loss cannot be negative")
        want_d = self.lambda_domain * self.l_dom_real - self.l_adv
        want_g = self.l_adv + self.lambda_domain * self.l_dom_fake + self.lambda_rec * self.l_rec
        if abs(want_d - self.total_d) > 1e-6 or abs(want_g - self.total_g) > 1e-6:
            raise ValidationError("loss totals do not match their declared weighted sums")
