"""Softmax cross-entropy with max-subtraction stabilization."""
from __future__ import annotations

import numpy as np

from .core import assert_finite


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood over the batch and its logits gradient.

    Accepts (B, C) logits with (B,) integer targets, or a single (C,) row.
    """
    squeeze = logits.ndim == 1
    if squeeze:
        logits = logits[None, :]
        targets = np.asarray([targets])
    assert_finite("logits", logits)
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(B), targets] - log_norm
    loss = float(-log_p.mean())
    p = softmax(logits)
    dlogits = p.copy()
    dlogits[np.arange(B), targets] -= 1.0
    dlogits /= B
    return loss, (dlogits[0] if squeeze else dlogits)
