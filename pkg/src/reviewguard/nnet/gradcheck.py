"""Central-finite-difference gradient checking for layers and whole models."""
from __future__ import annotations

import numpy as np

from .core import Param


def grad_check(
    loss_fn,
    params: list[Param],
    h: float = 1e-5,
    max_coords_per_param: int | None = None,
    seed: int = 0,
) -> float:
    """Return the max relative error between analytic and numeric gradients.

    ``loss_fn(compute_grads)`` must run a full forward pass and return the
    scalar loss; when ``compute_grads`` is true it must also zero and then
    fill every param's grad buffer. For large tensors a random subset of
    coordinates can be checked via ``max_coords_per_param``.
    """
    loss_fn(True)
    analytic = {id(p): p.grad.copy() for p in params}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        n = flat.size
        if max_coords_per_param is not None and n > max_coords_per_param:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        else:
            coords = range(n)
        a_flat = analytic[id(p)].reshape(-1)
        for j in coords:
            orig = flat[j]
            flat[j] = orig + h
            plus = loss_fn(False)
            flat[j] = orig - h
            minus = loss_fn(False)
            flat[j] = orig
            numeric = (plus - minus) / (2.0 * h)
            err = abs(a_flat[j] - numeric) / max(1.0, abs(numeric))
            if err > worst:
                worst = err
    return worst
