"""Differentiable layer primitives (float64, CPU, numpy).

Each layer caches what its backward pass needs during forward; backward
assigns fresh gradient arrays aligned with ``params``. Batch layouts are
channels-last: (B, T, D) for sequence layers and (B, H, W, C) for 2-D
convolutions, with time on the H axis.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def xavier_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Layer:
    """Base: parameterless layers keep empty params/grads lists."""

    def __init__(self):
        self.params: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []
        self.param_names: list[str] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _require_cache(self, attr: str):
        if getattr(self, attr, None) is None:
            raise RuntimeError(
                f"{type(self).__name__}.backward called without a cached forward"
            )


class Linear(Layer):
    """Affine map over the last axis; accepts any leading batch dims."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        super().__init__()
        self.d_in, self.d_out = d_in, d_out
        self.W = xavier_uniform(rng, (d_in, d_out), d_in, d_out)
        self.b = np.zeros(d_out)
        self.params = [self.W, self.b]
        self.param_names = ["W", "b"]
        self._x = None

    def forward(self, x):
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy):
        self._require_cache("_x")
        x2 = self._x.reshape(-1, self.d_in)
        dy2 = dy.reshape(-1, self.d_out)
        self.grads = [x2.T @ dy2, dy2.sum(axis=0)]
        return (dy2 @ self.W.T).reshape(self._x.shape)


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        self._require_cache("_mask")
        return np.where(self._mask, dy, 0.0)


class Splice(Layer):
    """Frame-context splicing: concat frames t-(c//2)..t+(c//2), zero-padded."""

    def __init__(self, context: int):
        super().__init__()
        if context < 1 or context % 2 == 0:
            raise DataError(f"context must be odd and positive, got {context}")
        self.context = context
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        if self.context == 1:
            return x
        b, t, d = x.shape
        half = self.context // 2
        padded = np.zeros((b, t + 2 * half, d))
        padded[:, half : half + t] = x
        pieces = [padded[:, off : off + t] for off in range(self.context)]
        return np.concatenate(pieces, axis=2)

    def backward(self, dy):
        self._require_cache("_shape")
        if self.context == 1:
            return dy
        b, t, d = self._shape
        half = self.context // 2
        dpad = np.zeros((b, t + 2 * half, d))
        for off in range(self.context):
            dpad[:, off : off + t] += dy[:, :, off * d : (off + 1) * d]
        return dpad[:, half : half + t]


class TemporalMeanPool(Layer):
    """(B, T, D) -> (B, D)."""

    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=1)

    def backward(self, dy):
        self._require_cache("_shape")
        b, t, d = self._shape
        return np.broadcast_to(dy[:, None, :] / t, (b, t, d)).copy()


class Conv1d(Layer):
    """Dilated 1-D convolution over time, valid padding: shrinks T."""

    def __init__(self, c_in, c_out, kernel, dilation, rng):
        super().__init__()
        self.c_in, self.c_out = c_in, c_out
        self.kernel, self.dilation = kernel, dilation
        self.W = xavier_uniform(
            rng, (kernel, c_in, c_out), kernel * c_in, kernel * c_out
        )
        self.b = np.zeros(c_out)
        self.params = [self.W, self.b]
        self.param_names = ["W", "b"]
        self._x = None

    @property
    def shrink(self) -> int:
        return (self.kernel - 1) * self.dilation

    def forward(self, x):
        b, t, _ = x.shape
        t_out = t - self.shrink
        if t_out < 1:
            raise DataError(
                f"too few frames ({t}) for kernel {self.kernel} dilation {self.dilation}"
            )
        self._x = x
        self._t_out = t_out
        y = np.tile(self.b, (b, t_out, 1))
        for j in range(self.kernel):
            off = j * self.dilation
            y += self._x[:, off : off + t_out, :] @ self.W[j]
        return y

    def backward(self, dy):
        self._require_cache("_x")
        t_out = self._t_out
        gW = np.empty_like(self.W)
        dx = np.zeros_like(self._x)
        for j in range(self.kernel):
            off = j * self.dilation
            x_slice = self._x[:, off : off + t_out, :]
            gW[j] = np.tensordot(x_slice, dy, axes=([0, 1], [0, 1]))
            dx[:, off : off + t_out, :] += dy @ self.W[j].T
        self.grads = [gW, dy.sum(axis=(0, 1))]
        return dx


class ExpandImage(Layer):
    """(B, T, D) -> (B, T, D, 1): features as a single-channel image."""

    def forward(self, x):
        self._ok = True
        return x[..., None]

    def backward(self, dy):
        self._require_cache("_ok")
        return dy[..., 0]


class Conv2d(Layer):
    """3x3 convolution with 'same' zero padding, channels-last."""

    KERNEL = 3

    def __init__(self, c_in, c_out, rng):
        super().__init__()
        k = self.KERNEL
        self.c_in, self.c_out = c_in, c_out
        self.W = xavier_uniform(rng, (k, k, c_in, c_out), k * k * c_in, k * k * c_out)
        self.b = np.zeros(c_out)
        self.params = [self.W, self.b]
        self.param_names = ["W", "b"]
        self._xpad = None

    def forward(self, x):
        b, h, w, _ = x.shape
        xpad = np.zeros((b, h + 2, w + 2, self.c_in))
        xpad[:, 1 : 1 + h, 1 : 1 + w] = x
        self._xpad = xpad
        self._hw = (h, w)
        y = np.tile(self.b, (b, h, w, 1))
        for di in range(3):
            for dj in range(3):
                y += xpad[:, di : di + h, dj : dj + w, :] @ self.W[di, dj]
        return y

    def backward(self, dy):
        self._require_cache("_xpad")
        h, w = self._hw
        gW = np.empty_like(self.W)
        dxpad = np.zeros_like(self._xpad)
        for di in range(3):
            for dj in range(3):
                x_slice = self._xpad[:, di : di + h, dj : dj + w, :]
                gW[di, dj] = np.tensordot(x_slice, dy, axes=([0, 1, 2], [0, 1, 2]))
                dxpad[:, di : di + h, dj : dj + w, :] += dy @ self.W[di, dj].T
        self.grads = [gW, dy.sum(axis=(0, 1, 2))]
        return dxpad[:, 1 : 1 + h, 1 : 1 + w, :]


class MaxPool2(Layer):
    """2x2 max pooling, flooring odd edges; axes of size 1 pass through.

    Gradient routes to the first argmax cell of each window.
    """

    def forward(self, x):
        b, h, w, c = x.shape
        ph = 2 if h >= 2 else 1
        pw = 2 if w >= 2 else 1
        h2, w2 = h // ph, w // pw
        cropped = x[:, : h2 * ph, : w2 * pw, :]
        windows = (
            cropped.reshape(b, h2, ph, w2, pw, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(b, h2, w2, c, ph * pw)
        )
        self._argmax = np.argmax(windows, axis=-1)
        self._geom = (x.shape, ph, pw)
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        self._require_cache("_argmax")
        (b, h, w, c), ph, pw = self._geom
        h2, w2 = h // ph, w // pw
        dwin = np.zeros((b, h2, w2, c, ph * pw))
        np.put_along_axis(dwin, self._argmax[..., None], dy[..., None], axis=-1)
        dx = np.zeros((b, h, w, c))
        dx[:, : h2 * ph, : w2 * pw, :] = (
            dwin.reshape(b, h2, w2, c, ph, pw)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(b, h2 * ph, w2 * pw, c)
        )
        return dx


class TimePoolFlatten(Layer):
    """(B, H, W, C) -> (B, W*C): mean over the time (H) axis, then flatten."""

    def forward(self, x):
        self._shape = x.shape
        b = x.shape[0]
        return x.mean(axis=1).reshape(b, -1)

    def backward(self, dy):
        self._require_cache("_shape")
        b, h, w, c = self._shape
        dmean = dy.reshape(b, w, c)
        return np.broadcast_to(dmean[:, None] / h, (b, h, w, c)).copy()


class BiGRU(Layer):
    """Bidirectional GRU; output concatenates both directions per step.

    Gate layout is [reset, update, candidate]; the candidate uses
    n = tanh(Wn x + r * (Un h) + bn). The per-step outputs are the hidden
    states, so output[:, -1, :dh] and output[:, 0, dh:] are the two final
    states.
    """

    def __init__(self, d_in, d_hidden, rng):
        super().__init__()
        self.d_in, self.d_hidden = d_in, d_hidden
        def gates(shape_rows):
            return np.concatenate(
                [
                    xavier_uniform(rng, (shape_rows, d_hidden), shape_rows, d_hidden)
                    for _ in range(3)
                ],
                axis=1,
            )

        self.Wx_f, self.Wh_f = gates(d_in), gates(d_hidden)
        self.b_f = np.zeros(3 * d_hidden)
        self.Wx_b, self.Wh_b = gates(d_in), gates(d_hidden)
        self.b_b = np.zeros(3 * d_hidden)
        self.params = [self.Wx_f, self.Wh_f, self.b_f, self.Wx_b, self.Wh_b, self.b_b]
        self.param_names = ["Wx_f", "Wh_f", "b_f", "Wx_b", "Wh_b", "b_b"]
        self._cache = None

    def _run(self, x, Wx, Wh, b):
        batch, t_len, _ = x.shape
        dh = self.d_hidden
        pre = x @ Wx + b  # (B, T, 3dh)
        h = np.zeros((batch, dh))
        hs = np.empty((batch, t_len, dh))
        steps = []
        for t in range(t_len):
            ah = h @ Wh
            r = sigmoid(pre[:, t, :dh] + ah[:, :dh])
            z = sigmoid(pre[:, t, dh : 2 * dh] + ah[:, dh : 2 * dh])
            hn = ah[:, 2 * dh :]
            n = np.tanh(pre[:, t, 2 * dh :] + r * hn)
            steps.append((h, r, z, n, hn))
            h = (1.0 - z) * n + z * h
            hs[:, t] = h
        return hs, steps

    def _back(self, x, d_hs, steps, Wx, Wh):
        batch, t_len, _ = x.shape
        dh = self.d_hidden
        gWx = np.zeros_like(Wx)
        gWh = np.zeros_like(Wh)
        gb = np.zeros(3 * dh)
        dx = np.empty_like(x)
        dh_next = np.zeros((batch, dh))
        for t in reversed(range(t_len)):
            h_prev, r, z, n, hn = steps[t]
            total = d_hs[:, t] + dh_next
            dz = total * (h_prev - n)
            dn = total * (1.0 - z)
            dh_next = total * z
            dan = dn * (1.0 - n * n)
            dar = (dan * hn) * r * (1.0 - r)
            daz = dz * z * (1.0 - z)
            da = np.concatenate([dar, daz, dan], axis=1)
            dah = np.concatenate([dar, daz, dan * r], axis=1)
            dx[:, t] = da @ Wx.T
            gWx += x[:, t].T @ da
            gb += da.sum(axis=0)
            gWh += h_prev.T @ dah
            dh_next = dh_next + dah @ Wh.T
        return dx, gWx, gWh, gb

    def forward(self, x):
        hs_f, steps_f = self._run(x, self.Wx_f, self.Wh_f, self.b_f)
        x_rev = x[:, ::-1, :]
        hs_b_rev, steps_b = self._run(x_rev, self.Wx_b, self.Wh_b, self.b_b)
        self._cache = (x, x_rev, steps_f, steps_b)
        return np.concatenate([hs_f, hs_b_rev[:, ::-1, :]], axis=2)

    def backward(self, dy):
        self._require_cache("_cache")
        x, x_rev, steps_f, steps_b = self._cache
        dh = self.d_hidden
        dx_f, gWx_f, gWh_f, gb_f = self._back(
            x, np.ascontiguousarray(dy[:, :, :dh]), steps_f, self.Wx_f, self.Wh_f
        )
        dx_b_rev, gWx_b, gWh_b, gb_b = self._back(
            x_rev,
            np.ascontiguousarray(dy[:, ::-1, dh:]),
            steps_b,
            self.Wx_b,
            self.Wh_b,
        )
        self.grads = [gWx_f, gWh_f, gb_f, gWx_b, gWh_b, gb_b]
        return dx_f + dx_b_rev[:, ::-1, :]


class BiGruFinals(Layer):
    """Concat the two final hidden states of a BiGRU output sequence."""

    def __init__(self, d_hidden):
        super().__init__()
        self.d_hidden = d_hidden
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return np.concatenate([x[:, -1, : self.d_hidden], x[:, 0, self.d_hidden :]], axis=1)

    def backward(self, dy):
        self._require_cache("_shape")
        dx = np.zeros(self._shape)
        dx[:, -1, : self.d_hidden] = dy[:, : self.d_hidden]
        dx[:, 0, self.d_hidden :] = dy[:, self.d_hidden :]
        return dx


class Sequential:
    """A straight pipeline of layers with flattened parameter access."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            if layer.params and len(layer.grads) != len(layer.params):
                raise RuntimeError(
                    f"{type(layer).__name__} has no gradients; run backward first"
                )
            out.extend(layer.grads)
        return out

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in zip(layer.param_names, layer.params):
                out.append((f"layer{i:02d}.{type(layer).__name__}.{name}", p))
        return out
