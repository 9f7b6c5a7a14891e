"""Layer forward/backward passes with exact analytic gradients.

Every layer caches what its backward pass needs; backward returns the
gradient with respect to the layer input and accumulates parameter
gradients into the Param buffers.
"""
from __future__ import annotations

import numpy as np

from .core import Param, assert_finite, glorot_uniform, sigmoid


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "dense"):
        self.W = Param(f"{name}.W", glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim)))
        self.b = Param(f"{name}.b", np.zeros(out_dim))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return assert_finite(self.W.name, x @ self.W.data + self.b.data)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.W.grad += self._x.T @ dy
        self.b.grad += dy.sum(axis=0)
        return dy @ self.W.data.T

    def params(self) -> list[Param]:
        return [self.W, self.b]


class ReLU:
    def __init__(self):
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, 0.0)

    def params(self) -> list[Param]:
        return []


class Dropout:
    """Inverted dropout: survivors are scaled by 1/(1-p); identity in eval mode."""

    def __init__(self, p: float, rng: np.random.Generator):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng
        self.train = True
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if not self.train or self.p == 0.0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy if self._mask is None else dy * self._mask

    def params(self) -> list[Param]:
        return []


class Conv1d:
    """Valid 1-D convolution over a (batch, length, dim) sequence."""

    def __init__(self, width: int, in_dim: int, n_filters: int,
                 rng: np.random.Generator, name: str = "conv"):
        self.width = width
        self.in_dim = in_dim
        self.n_filters = n_filters
        fan_in = width * in_dim
        self.W = Param(f"{name}{width}.W", glorot_uniform(rng, fan_in, n_filters,
                                                          (fan_in, n_filters)))
        self.b = Param(f"{name}{width}.b", np.zeros(n_filters))
        self._x: np.ndarray | None = None
        self._in_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        B, L, D = x.shape
        w = self.width
        if L < w:
            raise ValueError(f"sequence length {L} shorter than filter width {w}")
        T = L - w + 1
        # sum of per-offset matmuls avoids materializing (B, T, w*D) windows
        out = np.broadcast_to(self.b.data, (B, T, self.n_filters)).copy()
        for k in range(w):
            out += x[:, k : k + T, :] @ self.W.data[k * D : (k + 1) * D, :]
        self._x = x
        self._in_shape = x.shape
        return assert_finite(self.W.name, out)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        B, T, F = dy.shape
        w, D = self.width, self.in_dim
        x = self._x
        dy_flat = dy.reshape(-1, F)
        for k in range(w):
            self.W.grad[k * D : (k + 1) * D, :] += (
                x[:, k : k + T, :].reshape(-1, D).T @ dy_flat)
        self.b.grad += dy.sum(axis=(0, 1))
        dx = np.zeros(self._in_shape)
        for k in range(w):
            dx[:, k : k + T, :] += dy @ self.W.data[k * D : (k + 1) * D, :].T
        return dx

    def params(self) -> list[Param]:
        return [self.W, self.b]


class MaxOverTime:
    """Keep the single maximum per filter across positions; gradient is routed
    to the first maximal position only."""

    def __init__(self):
        self._argmax: np.ndarray | None = None
        self._in_shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._argmax = x.argmax(axis=1)  # first occurrence on ties
        self._in_shape = x.shape
        return x.max(axis=1)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dx = np.zeros(self._in_shape)
        np.put_along_axis(dx, self._argmax[:, None, :], dy[:, None, :], axis=1)
        return dx

    def params(self) -> list[Param]:
        return []


class LSTM:
    """Single-layer LSTM over right-padded sequences.

    Padded steps are skipped (state carries through unchanged), so the
    returned hidden state is the one at position length-1 of each sequence.
    Gate slice order is (input, forget, output, candidate).
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, name: str = "lstm"):
        self.in_dim = in_dim
        self.hidden = hidden
        self.Wx = Param(f"{name}.Wx", glorot_uniform(rng, in_dim, hidden, (in_dim, 4 * hidden)))
        self.Wh = Param(f"{name}.Wh", glorot_uniform(rng, hidden, hidden, (hidden, 4 * hidden)))
        self.b = Param(f"{name}.b", np.zeros(4 * hidden))
        self._cache: list[tuple] = []
        self._x_shape: tuple | None = None

    def _gates(self, x_t: np.ndarray, h_prev: np.ndarray):
        H = self.hidden
        a = x_t @ self.Wx.data + h_prev @ self.Wh.data + self.b.data
        i = sigmoid(a[:, :H])
        f = sigmoid(a[:, H : 2 * H])
        o = sigmoid(a[:, 2 * H : 3 * H])
        g = np.tanh(a[:, 3 * H :])
        return i, f, o, g

    def cell(self, x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
        """One unmasked step: returns (h_t, c_t)."""
        i, f, o, g = self._gates(x_t, h_prev)
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        return h_t, c_t

    def forward(self, x: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        B, L, D = x.shape
        H = self.hidden
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        self._cache = []
        self._x = x
        self._x_shape = x.shape
        # input projection for every step in one matmul; the loop keeps only
        # the recurrent matmul and the gate nonlinearities
        x_proj = (x.reshape(B * L, D) @ self.Wx.data).reshape(B, L, 4 * H) + self.b.data
        masks = (lengths[:, None] > np.arange(L)[None, :]).astype(np.float64)
        for t in range(L):
            a = x_proj[:, t, :] + h @ self.Wh.data
            gates = sigmoid(a[:, : 3 * H])
            i, f, o = gates[:, :H], gates[:, H : 2 * H], gates[:, 2 * H :]
            g = np.tanh(a[:, 3 * H :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            mask = masks[:, t : t + 1]
            self._cache.append((h, c, i, f, o, g, tanh_c, mask))
            c = mask * c_new + (1.0 - mask) * c
            h = mask * h_new + (1.0 - mask) * h
        return assert_finite(self.Wx.name, h)

    def backward(self, dh_final: np.ndarray) -> np.ndarray:
        B, L, D = self._x_shape
        H = self.hidden
        da_all = np.zeros((B, L, 4 * H))
        dh = dh_final.copy()
        dc = np.zeros_like(dh_final)
        for t in reversed(range(L)):
            h_prev, c_prev, i, f, o, g, tanh_c, mask = self._cache[t]
            dh_new = dh * mask
            dh_carry = dh * (1.0 - mask)
            dc_new = dc * mask
            dc_carry = dc * (1.0 - mask)
            do = dh_new * tanh_c
            dc_new = dc_new + dh_new * o * (1.0 - tanh_c ** 2)
            da = da_all[:, t, :]
            da[:, :H] = (dc_new * g) * i * (1.0 - i)
            da[:, H : 2 * H] = (dc_new * c_prev) * f * (1.0 - f)
            da[:, 2 * H : 3 * H] = do * o * (1.0 - o)
            da[:, 3 * H :] = (dc_new * i) * (1.0 - g ** 2)
            self.Wh.grad += h_prev.T @ da
            dh = dh_carry + da @ self.Wh.data.T
            dc = dc_new * f + dc_carry
        da_flat = da_all.reshape(B * L, 4 * H)
        self.Wx.grad += self._x.reshape(B * L, D).T @ da_flat
        self.b.grad += da_flat.sum(axis=0)
        return (da_flat @ self.Wx.data.T).reshape(B, L, D)

    def params(self) -> list[Param]:
        return [self.Wx, self.Wh, self.b]
