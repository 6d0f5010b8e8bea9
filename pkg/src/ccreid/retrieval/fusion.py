"""Test-time descriptor fusion.

The final descriptor concatenates the three branch features with the
global part weighted by alpha and both local parts by (1 - alpha):
[f_g * alpha, f_u * (1 - alpha), f_l * (1 - alpha)].
"""

from __future__ import annotations

import numpy as np

from ccreid.errors import ValidationError


def fuse(f_g: np.ndarray, f_u: np.ndarray, f_l: np.ndarray, alpha: float) -> np.ndarray:
    """Scaled concatenation of the branch features, global part first.

    Accepts single vectors (d,) or batches (n, d); all three inputs must
    share a shape and alpha must lie in [0, 1].  Output length is 3d.
    """
    f_g, f_u, f_l = (np.asarray(f) for f in (f_g, f_u, f_l))
    if not (f_g.shape == f_u.shape == f_l.shape):
        raise ValidationError(
            f"branch feature shapes differ: {f_g.shape}, {f_u.shape}, {f_l.shape}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    return np.concatenate(
        [f_g * alpha, f_u * (1.0 - alpha), f_l * (1.0 - alpha)], axis=-1
    )
