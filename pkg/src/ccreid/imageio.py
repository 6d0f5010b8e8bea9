"""Image loading/saving shared by training, translation and extraction."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch import Tensor


def load_image(path: str | Path) -> Tensor:
    """PNG/JPEG file -> float32 CHW tensor in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def save_image(tensor: Tensor, path: str | Path) -> None:
    """Float CHW tensor in [0, 1] -> 8-bit RGB PNG."""
    arr = tensor.detach().clamp(0.0, 1.0).mul(255.0).round().byte()
    arr = arr.permute(1, 2, 0).cpu().numpy()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def load_batch(paths: list[Path]) -> Tensor:
    return torch.stack([load_image(p) for p in paths])
