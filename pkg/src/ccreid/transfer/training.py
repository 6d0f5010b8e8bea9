"""Training loop for the camera-transfer network.

Alternates discriminator and generator steps over the train split.
Schedule: constant learning rate for the first block of epochs, then
linear decay to zero over the second block.  Every logged step records
all loss components to a CSV with columns
(step, l_adv, l_dom_real, l_dom_fake, l_rec, total_g, total_d).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ccreid.checkpoint import load_checkpoint, save_checkpoint
from ccreid.data.manifest import DatasetManifest
from ccreid.errors import ValidationError
from ccreid.imageio import load_batch
from ccreid.transfer.losses import (
    TransferLossReport,
    adversarial_loss,
    domain_loss,
    reconstruction_loss,
)
from ccreid.transfer.networks import CameraDiscriminator, CameraGenerator, camera_code

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "camera_transfer"
LOG_COLUMNS = ("step", "l_adv", "l_dom_real", "l_dom_fake", "l_rec", "total_g", "total_d")


@dataclass
class TransferConfig:
    epochs_const: int = 10        # full-scale reference: 100 + 100
    epochs_decay: int = 10
    batch_size: int = 16
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    lambda_domain: float = 1.0
    lambda_rec: float = 10.0
    base_width: int = 32
    n_res_blocks: int = 2
    d_layers: int = 4
    adv_mode: str = "logistic"    # "logistic" (contract form) or "wgan-gp"
    gp_weight: float = 10.0
    prob_eps: float = 1e-6        # keeps log() finite inside the training loop
    d_steps_per_g: int = 1
    log_every: int = 10
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TransferModel:
    """Generator + two-headed discriminator plus their build parameters."""

    generator: CameraGenerator
    discriminator: CameraDiscriminator
    n_cameras: int
    image_size: int
    config: TransferConfig = field(default_factory=TransferConfig)

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(
            path,
            CHECKPOINT_KIND,
            {
                "generator": self.generator.state_dict(),
                "discriminator": self.discriminator.state_dict(),
                "n_cameras": self.n_cameras,
                "image_size": self.image_size,
                "config": self.config.to_dict(),
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "TransferModel":
        blob = load_checkpoint(path, CHECKPOINT_KIND)
        config = TransferConfig(**blob["config"])
        model = cls.build(blob["n_cameras"], blob["image_size"], config)
        model.generator.load_state_dict(blob["generator"])
        model.discriminator.load_state_dict(blob["discriminator"])
        return model

    @classmethod
    def build(cls, n_cameras: int, image_size: int, config: TransferConfig) -> "TransferModel":
        torch.manual_seed(config.seed)
        gen = CameraGenerator(n_cameras, config.base_width, config.n_res_blocks)
        dis = CameraDiscriminator(n_cameras, image_size, config.base_width, config.d_layers)
        return cls(gen, dis, n_cameras, image_size, config)


def _lr_factor(epoch: int, cfg: TransferConfig) -> float:
    if epoch < cfg.epochs_const or cfg.epochs_decay == 0:
        return 1.0
    return max(0.0, 1.0 - (epoch - cfg.epochs_const + 1) / cfg.epochs_decay)


def train_transfer(
    manifest: DatasetManifest,
    config: TransferConfig,
    out_dir: str | Path,
    image_size: int | None = None,
) -> Path:
    """Train the camera-transfer model on the manifest's train split.

    Writes transfer.ckpt and transfer_log.csv under out_dir and returns
    the checkpoint path.
    """
    train = manifest.split("train")
    if not train:
        raise ValidationError("manifest has no train records")
    cameras = sorted({r.camera_id for r in train})
    if len(cameras) < 2:
        raise ValidationError(
            "camera transfer needs at least 2 cameras in the train split; "
            f"got {len(cameras)} (nothing to translate)"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if image_size is None:
        from PIL import Image

        with Image.open(manifest.resolve(train[0])) as im:
            image_size = im.size[0]

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0x7A)))
    model = TransferModel.build(manifest.n_cameras, image_size, config)
    gen, dis = model.generator, model.discriminator

    opt_g = torch.optim.Adam(gen.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))
    opt_d = torch.optim.Adam(dis.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))

    n_epochs = config.epochs_const + config.epochs_decay
    paths = [manifest.resolve(r) for r in train]
    src_cams = np.array([r.camera_id for r in train])
    steps_per_epoch = max(1, len(train) // config.batch_size)

    log_path = out_dir / "transfer_log.csv"
    with open(log_path, "w", newline="") as log_file:
        writer = csv.writer(log_file)
        writer.writerow(LOG_COLUMNS)
        step = 0
        for epoch in range(n_epochs):
            factor = _lr_factor(epoch, config)
            for group in (*opt_g.param_groups, *opt_d.param_groups):
                group["lr"] = config.lr * factor
            order = rng.permutation(len(train))
            for b in range(steps_per_epoch):
                idx = order[b * config.batch_size:(b + 1) * config.batch_size]
                if len(idx) == 0:
                    continue
                x = load_batch([paths[i] for i in idx])
                c_src = camera_code(torch.from_numpy(src_cams[idx]), manifest.n_cameras)
                targets = rng.integers(0, manifest.n_cameras, size=len(idx))
                c_tgt = camera_code(torch.from_numpy(targets), manifest.n_cameras)

                report = _train_step(gen, dis, x, c_src, c_tgt, opt_g, opt_d, config)
                if step % config.log_every == 0:
                    writer.writerow(
                        [step, f"{report.l_adv:.10g}", f"{report.l_dom_real:.10g}",
                         f"{report.l_dom_fake:.10g}", f"{report.l_rec:.10g}",
                         f"{report.total_g:.10g}", f"{report.total_d:.10g}"]
                    )
                step += 1
            log.info("transfer epoch %d/%d done (lr factor %.3f)", epoch + 1, n_epochs, factor)

    ckpt = model.save(out_dir / "transfer.ckpt")
    return ckpt


def _train_step(gen, dis, x, c_src, c_tgt, opt_g, opt_d, cfg) -> TransferLossReport:
    eps = cfg.prob_eps

    # discriminator step(s)
    for _ in range(cfg.d_steps_per_g):
        opt_d.zero_grad()
        with torch.no_grad():
            fake = gen(x, c_tgt)
        if cfg.adv_mode == "wgan-gp":
            d_real_lg = dis.src_logits(x)
            d_fake_lg = dis.src_logits(fake)
            gp = _gradient_penalty(dis, x, fake)
            l_adv_d = d_fake_lg.mean() - d_real_lg.mean() + cfg.gp_weight * gp
            _, dom_real = dis(x)
            l_dom_real = domain_loss(dom_real, c_src)
            loss_d = l_adv_d + cfg.lambda_domain * l_dom_real
            l_adv_value = -(d_fake_lg.mean() - d_real_lg.mean())
        else:
            d_real, dom_real = dis(x)
            d_fake, _ = dis(fake)
            l_adv = adversarial_loss(d_real, d_fake, clamp_eps=eps)
            l_dom_real = domain_loss(dom_real, c_src)
            loss_d = cfg.lambda_domain * l_dom_real - l_adv
            l_adv_value = l_adv
        loss_d.backward()
        opt_d.step()

    # generator step
    opt_g.zero_grad()
    fake = gen(x, c_tgt)
    cycled = gen(fake, c_src)
    l_rec = reconstruction_loss(x, cycled)
    if cfg.adv_mode == "wgan-gp":
        adv_g = -dis.src_logits(fake).mean()
    else:
        d_fake, _ = dis(fake)
        adv_g = torch.log1p(-d_fake.clamp(eps, 1 - eps)).mean()
    _, dom_fake = dis(fake)
    l_dom_fake = domain_loss(dom_fake, c_tgt)
    loss_g = adv_g + cfg.lambda_domain * l_dom_fake + cfg.lambda_rec * l_rec
    loss_g.backward()
    opt_g.step()

    report = TransferLossReport.from_components(
        l_adv=float(l_adv_value.detach()),
        l_dom_real=float(l_dom_real.detach()),
        l_dom_fake=float(l_dom_fake.detach()),
        l_rec=float(l_rec.detach()),
        lambda_domain=cfg.lambda_domain,
        lambda_rec=cfg.lambda_rec,
    )
    report.validate()
    return report


def transfer_objectives(
    gen: CameraGenerator,
    dis: CameraDiscriminator,
    x: torch.Tensor,
    c_src: torch.Tensor,
    c_tgt: torch.Tensor,
    lambda_domain: float = 1.0,
    lambda_rec: float = 10.0,
    clamp_eps: float | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable (total_g, total_d) exactly as declared in
    TransferLossReport; used by the finite-difference gradient checks."""
    fake = gen(x, c_tgt)
    d_real, dom_real = dis(x)
    d_fake, dom_fake = dis(fake)
    l_adv = adversarial_loss(d_real, d_fake, clamp_eps=clamp_eps)
    total_d = lambda_domain * domain_loss(dom_real, c_src) - l_adv
    cycled = gen(fake, c_src)
    total_g = (
        l_adv
        + lambda_domain * domain_loss(dom_fake, c_tgt)
        + lambda_rec * reconstruction_loss(x, cycled)
    )
    return total_g, total_d


def _gradient_penalty(dis, real, fake) -> torch.Tensor:
    alpha = torch.rand(real.shape[0], 1, 1, 1)
    mix = (alpha * real + (1 - alpha) * fake).requires_grad_(True)
    scores = dis.src_logits(mix)
    grads = torch.autograd.grad(scores.sum(), mix, create_graph=True)[0]
    return ((grads.flatten(1).norm(2, dim=1) - 1.0) ** 2).mean()
