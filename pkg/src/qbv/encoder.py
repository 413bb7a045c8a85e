"""Small convolutional embedding networks for the two towers.

Architecture: three conv blocks (3x3 kernels, same padding, channel widths
16/32/64, each followed by ReLU and non-overlapping 2x2 max pooling),
global average pooling, and a linear projection to the embedding
dimension.  Forward and reverse passes are written directly in numpy so
gradients are exact reverse-mode derivatives of the forward computation,
checkable against finite differences.

All arithmetic is float64.  The forward pass is pure and thread-safe;
parameter updates are owned by the training loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dsp import Spectrogram

PARAM_KEYS = ("conv1_w", "conv1_b", "conv2_w", "conv2_b",
              "conv3_w", "conv3_b", "proj_w", "proj_b")


@dataclass(frozen=True)
class EncoderConfig:
    embedding_dim: int = 128
    channels: tuple = (16, 32, 64)
    input_bins: int | None = None     # when set, encode() enforces the shape
    input_frames: int | None = None

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be >= 1")
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise ValueError("channels must be three positive widths")


@dataclass
class EncoderParams:
    config: EncoderConfig
    arrays: dict

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.config, {k: v.copy() for k, v in self.arrays.items()})


@dataclass
class Embedding:
    values: np.ndarray
    normalized: bool


def init_encoder(seed: int, config: EncoderConfig = EncoderConfig()) -> EncoderParams:
    """Deterministic fan-in-scaled uniform initialization; biases start at 0."""
    rng = np.random.default_rng(seed)
    c1, c2, c3 = config.channels
    d = config.embedding_dim

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    arrays = {
        "conv1_w": uniform((c1, 1, 3, 3), 9),
        "conv1_b": np.zeros(c1),
        "conv2_w": uniform((c2, c1, 3, 3), c1 * 9),
        "conv2_b": np.zeros(c2),
        "conv3_w": uniform((c3, c2, 3, 3), c2 * 9),
        "conv3_b": np.zeros(c3),
        "proj_w": uniform((d, c3), c3),
        "proj_b": np.zeros(d),
    }
    return EncoderParams(config=config, arrays=arrays)


def _im2col(x: np.ndarray) -> np.ndarray:
    """[B, C, H, W] -> [B, H*W, C*9] patches of the 1-padded input."""
    b, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(padded, (3, 3), axis=(2, 3))   # [B, C, H, W, 3, 3]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b, h * w, c * 9)


def _col2im(dcols: np.ndarray, x_shape) -> np.ndarray:
    """Scatter-add patch gradients back to input layout."""
    b, c, h, w = x_shape
    d = dcols.reshape(b, h, w, c, 3, 3).transpose(0, 3, 1, 2, 4, 5)
    dpad = np.zeros((b, c, h + 2, w + 2))
    for di in range(3):
        for dj in range(3):
            dpad[:, :, di : di + h, dj : dj + w] += d[:, :, :, :, di, dj]
    return dpad[:, :, 1:-1, 1:-1]


def _conv_forward(x, weight, bias):
    b, _, h, w = x.shape
    c_out = weight.shape[0]
    cols = _im2col(x)
    z = cols @ weight.reshape(c_out, -1).T + bias
    return z.transpose(0, 2, 1).reshape(b, c_out, h, w), cols


def _conv_backward(dout, cols, weight, x_shape):
    b, c_out, h, w = dout.shape
    dz = dout.reshape(b, c_out, h * w).transpose(0, 2, 1)    # [B, H*W, Cout]
    dz_flat = np.ascontiguousarray(dz).reshape(b * h * w, c_out)
    dw = (dz_flat.T @ cols.reshape(b * h * w, -1)).reshape(weight.shape)
    db = dz_flat.sum(axis=0)
    dcols = dz @ weight.reshape(c_out, -1)
    return _col2im(dcols, x_shape), dw, db


def _pool_forward(x):
    """Non-overlapping 2x2 max pool; odd trailing rows/cols are dropped."""
    b, c, h, w = x.shape
    hp, wp = h // 2, w // 2
    win = x[:, :, : hp * 2, : wp * 2].reshape(b, c, hp, 2, wp, 2)
    win = win.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hp, wp, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _pool_backward(dout, idx, x_shape):
    b, c, h, w = x_shape
    hp, wp = h // 2, w // 2
    dwin = np.zeros((b, c, hp, wp, 4))
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dcrop = dwin.reshape(b, c, hp, wp, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hp * 2, wp * 2)
    dx = np.zeros(x_shape)
    dx[:, :, : hp * 2, : wp * 2] = dcrop
    return dx


def _check_input(params: EncoderParams, values: np.ndarray):
    cfg = params.config
    h, w = values.shape
    if cfg.input_bins is not None and h != cfg.input_bins:
        raise ValueError(f"expected {cfg.input_bins} frequency bins, got {h}")
    if cfg.input_frames is not None and w != cfg.input_frames:
        raise ValueError(f"expected {cfg.input_frames} frames, got {w}")
    if h < 8 or w < 8:
        raise ValueError(f"input {h}x{w} too small for three 2x2 pooling stages")


def forward_batch(params: EncoderParams, x: np.ndarray, normalize: bool):
    """Forward pass for a batch [B, H, W]; returns (embeddings [B, D], cache)."""
    a = params.arrays
    x = x[:, None, :, :].astype(np.float64)
    cache = {"x_shapes": [], "cols": [], "z": [], "pool_idx": [], "pool_in_shapes": []}
    h = x
    for i in (1, 2, 3):
        cache["x_shapes"].append(h.shape)
        z, cols = _conv_forward(h, a[f"conv{i}_w"], a[f"conv{i}_b"])
        relu = np.maximum(z, 0.0)
        cache["cols"].append(cols)
        cache["z"].append(z)
        cache["pool_in_shapes"].append(relu.shape)
        h, idx = _pool_forward(relu)
        cache["pool_idx"].append(idx)
    cache["gap_in_shape"] = h.shape
    gap = h.mean(axis=(2, 3))
    cache["gap"] = gap
    emb = gap @ a["proj_w"].T + a["proj_b"]
    if not np.isfinite(emb).all():
        raise ValueError("non-finite values in forward pass (training divergence?)")
    cache["emb_raw"] = emb
    if normalize:
        norms = np.linalg.norm(emb, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("zero-norm embedding cannot be normalized")
        cache["norms"] = norms
        emb = emb / norms
    return emb, cache


def backward_batch(params: EncoderParams, cache: dict, dout: np.ndarray, normalize: bool):
    """Reverse pass from upstream gradients [B, D] to parameter gradients."""
    a = params.arrays
    demb = dout.astype(np.float64)
    if normalize:
        norms = cache["norms"]
        emb_hat = cache["emb_raw"] / norms
        demb = (demb - (demb * emb_hat).sum(axis=1, keepdims=True) * emb_hat) / norms
    grads = {
        "proj_w": demb.T @ cache["gap"],
        "proj_b": demb.sum(axis=0),
    }
    dgap = demb @ a["proj_w"]
    b, c, hg, wg = cache["gap_in_shape"]
    dh = np.broadcast_to(dgap[:, :, None, None], (b, c, hg, wg)) / (hg * wg)
    for i in (3, 2, 1):
        j = i - 1
        drelu = _pool_backward(dh, cache["pool_idx"][j], cache["pool_in_shapes"][j])
        dz = drelu * (cache["z"][j] > 0.0)
        dh, dw, db = _conv_backward(dz, cache["cols"][j], a[f"conv{i}_w"], cache["x_shapes"][j])
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = db
    return grads


def encode(params: EncoderParams, spec: Spectrogram, normalize: bool = True) -> Embedding:
    """Embed one spectrogram; l2-normalized output when normalize is set."""
    _check_input(params, spec.values)
    emb, _ = forward_batch(params, spec.values[None], normalize)
    return Embedding(values=emb[0], normalized=normalize)


def encode_batch(params: EncoderParams, specs: list[Spectrogram], normalize: bool = True) -> np.ndarray:
    for s in specs:
        _check_input(params, s.values)
    emb, _ = forward_batch(params, np.stack([s.values for s in specs]), normalize)
    return emb


def encode_backward(params: EncoderParams, spec: Spectrogram, upstream_grad: np.ndarray,
                    normalize: bool = False) -> dict:
    """Gradients of upstream_grad . encode(params, spec) w.r.t. every
    parameter array.  Recomputes the forward internally."""
    _check_input(params, spec.values)
    upstream = np.asarray(upstream_grad, dtype=np.float64)
    if upstream.shape != (params.config.embedding_dim,):
        raise ValueError(
            f"upstream gradient must have shape ({params.config.embedding_dim},), got {upstream.shape}"
        )
    _, cache = forward_batch(params, spec.values[None], normalize)
    return backward_batch(params, cache, upstream[None], normalize)


def params_from_arrays(arrays: dict) -> EncoderParams:
    """Rebuild EncoderParams from checkpoint arrays, inferring the config
    from the array shapes."""
    missing = set(PARAM_KEYS) - set(arrays)
    if missing:
        raise ValueError(f"checkpoint missing arrays: {sorted(missing)}")
    config = EncoderConfig(
        embedding_dim=arrays["proj_w"].shape[0],
        channels=(arrays["conv1_w"].shape[0], arrays["conv2_w"].shape[0],
                  arrays["conv3_w"].shape[0]),
    )
    return EncoderParams(config=config,
                         arrays={k: np.asarray(arrays[k], dtype=np.float64) for k in PARAM_KEYS})


def flatten_arrays(arrays: dict) -> np.ndarray:
    return np.concatenate([arrays[k].ravel() for k in PARAM_KEYS])


def unflatten_arrays(flat: np.ndarray, like: dict) -> dict:
    out, pos = {}, 0
    for k in PARAM_KEYS:
        n = like[k].size
        out[k] = flat[pos : pos + n].reshape(like[k].shape).copy()
        pos += n
    return out
