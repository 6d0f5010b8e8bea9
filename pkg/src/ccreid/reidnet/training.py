"""Training loop for the feature network.

SGD with momentum; the learning rate starts high and drops by x10 for a
final block of epochs (full-scale reference: 0.1 for 40 epochs then 0.01
for 25).  Each epoch appends (epoch, l_g, l_u, l_l, total, learning_rate)
to a CSV log.
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
from ccreid.reidnet.losses import LossWeights, ce_loss, total_loss
from ccreid.reidnet.network import AttentionAlignNet, ReidConfig

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "reid_feature_net"
LOG_COLUMNS = ("epoch", "l_g", "l_u", "l_l", "total", "learning_rate")


@dataclass
class ReidTrainConfig:
    epochs_high: int = 10         # full-scale reference: 40 + 25
    epochs_low: int = 5
    lr_high: float = 0.1
    lr_low: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 16
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReidTrainConfig":
        d = dict(d)
        d["weights"] = LossWeights(**d["weights"])
        return cls(**d)


@dataclass
class ReidModel:
    """Feature network plus the vehicle-id -> class-index mapping."""

    net: AttentionAlignNet
    class_ids: list[int]
    config: ReidConfig

    @property
    def n_identities(self) -> int:
        return len(self.class_ids)

    def save(self, path: str | Path, extra: dict | None = None) -> Path:
        payload = {
            "net": self.net.state_dict(),
            "class_ids": list(self.class_ids),
            "net_config": self.config.to_dict(),
        }
        payload.update(extra or {})
        return save_checkpoint(path, CHECKPOINT_KIND, payload)

    @classmethod
    def load(cls, path: str | Path) -> "ReidModel":
        blob = load_checkpoint(path, CHECKPOINT_KIND)
        config = ReidConfig.from_dict(blob["net_config"])
        net = AttentionAlignNet(len(blob["class_ids"]), config)
        net.load_state_dict(blob["net"])
        net.eval()
        return cls(net=net, class_ids=blob["class_ids"], config=config)

    @classmethod
    def build(cls, class_ids: list[int], config: ReidConfig, seed: int = 0) -> "ReidModel":
        torch.manual_seed(seed)
        return cls(net=AttentionAlignNet(len(class_ids), config),
                   class_ids=sorted(class_ids), config=config)


def train_reid(
    manifest: DatasetManifest,
    net_config: ReidConfig,
    train_config: ReidTrainConfig,
    out_dir: str | Path,
) -> Path:
    """Train the feature network on the manifest's train split.

    Writes reid.ckpt and reid_log.csv under out_dir; returns the
    checkpoint path.
    """
    train = manifest.split("train")
    if not train:
        raise ValidationError("manifest has no train records")
    class_ids = sorted({r.vehicle_id for r in train})
    if len(class_ids) < 2:
        raise ValidationError(f"need at least 2 train identities, got {len(class_ids)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model = ReidModel.build(class_ids, net_config, seed=train_config.seed)
    net = model.net
    net.train()
    opt = torch.optim.SGD(
        net.parameters(),
        lr=train_config.lr_high,
        momentum=train_config.momentum,
        weight_decay=train_config.weight_decay,
    )

    label_of = {vid: i for i, vid in enumerate(class_ids)}
    paths = [manifest.resolve(r) for r in train]
    labels = np.array([label_of[r.vehicle_id] for r in train])
    rng = np.random.default_rng(np.random.SeedSequence((train_config.seed, 0x1D)))
    steps_per_epoch = max(1, len(train) // train_config.batch_size)
    n_epochs = train_config.epochs_high + train_config.epochs_low
    weights = train_config.weights

    with open(out_dir / "reid_log.csv", "w", newline="") as log_file:
        writer = csv.writer(log_file)
        writer.writerow(LOG_COLUMNS)
        for epoch in range(n_epochs):
            lr = train_config.lr_high if epoch < train_config.epochs_high else train_config.lr_low
            for group in opt.param_groups:
                group["lr"] = lr
            order = rng.permutation(len(train))
            sums = np.zeros(4)
            for b in range(steps_per_epoch):
                idx = order[b * train_config.batch_size:(b + 1) * train_config.batch_size]
                if len(idx) == 0:
                    continue
                x = load_batch([paths[i] for i in idx])
                y = torch.from_numpy(labels[idx]).long()
                opt.zero_grad()
                _, _, _, lg_g, lg_u, lg_l = net(x)
                l_g, l_u, l_l = ce_loss(lg_g, y), ce_loss(lg_u, y), ce_loss(lg_l, y)
                loss = total_loss(l_g, l_u, l_l, weights)
                loss.backward()
                opt.step()
                sums += [l_g.item(), l_u.item(), l_l.item(), loss.item()]
            means = sums / steps_per_epoch
            writer.writerow([epoch, f"{means[0]:.10g}", f"{means[1]:.10g}",
                             f"{means[2]:.10g}", f"{means[3]:.10g}", lr])
            log.info("reid epoch %d/%d total %.4f (lr %g)", epoch + 1, n_epochs,
                     means[3], lr)

    net.eval()
    return model.save(out_dir / "reid.ckpt", extra={"train_config": train_config.to_dict()})
