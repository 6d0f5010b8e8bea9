"""Central finite-difference gradient checking used by the network tests.

Works on float64 models only.  Samples a fixed number of scalar parameter
coordinates (seeded), perturbs each by +-h, and compares the resulting
central difference against the autograd gradient at the unperturbed point.
"""

import numpy as np
import torch


def to_double(module):
    module.double()
    return module


def finite_difference_check(objective, params, n_samples, seed, h=1e-5, rel_tol=1e-3,
                            zero_floor=1e-7):
    """Assert autograd gradients of ``objective()`` match central differences.

    objective: nullary callable returning a scalar tensor built from
        ``params`` (list of float64 leaf tensors).
    n_samples: number of parameter coordinates to probe, spread over all
        tensors proportionally to their size.
    Returns the worst relative error seen.
    """
    loss = objective()
    grads = torch.autograd.grad(loss, params)
    flat_grads = torch.cat([g.reshape(-1) for g in grads])
    sizes = [p.numel() for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    coords = rng.choice(total, size=min(n_samples, total), replace=False)

    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for flat_idx in coords:
        t = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        local = int(flat_idx - offsets[t])
        p = params[t]
        with torch.no_grad():
            orig = p.reshape(-1)[local].item()
            p.reshape(-1)[local] = orig + h
            f_plus = float(objective())
            p.reshape(-1)[local] = orig - h
            f_minus = float(objective())
            p.reshape(-1)[local] = orig
        fd = (f_plus - f_minus) / (2 * h)
        an = float(flat_grads[flat_idx])
        denom = max(abs(an), abs(fd))
        if denom < zero_floor:
            continue
        rel = abs(an - fd) / denom
        worst = max(worst, rel)
        assert rel <= rel_tol, (
            f"coordinate {flat_idx} (tensor {t}): analytic {an:.6e} vs "
            f"central difference {fd:.6e}, relative error {rel:.2e}"
        )
    return worst
