"""Forward primitives on ``(height, width, depth)`` feature tensors.

Kernels are laid out ``(kh, kw, cin, cout)`` and applied as cross-correlation.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ShapeError

ACTIVATIONS = ('relu', 'none')


@dataclass(frozen=True)
class ConvParams:
    kernel: np.ndarray
    bias: np.ndarray


def _check_tensor(x: np.ndarray, name: str = 'x') -> None:
    if x.ndim != 3:
        raise ShapeError(f"{name} must be a (height, width, depth) tensor", actual=x.shape)


def _activate(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == 'relu':
        return np.maximum(x, 0.0)
    if activation == 'none':
        return x
    raise ShapeError(f"unknown activation '{activation}'")


def _same_pads(size: int, k: int, stride: int) -> Tuple[int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int = 1,
           padding: str = 'same', activation: str = 'relu') -> np.ndarray:
    """2-D convolution with zero border padding.

    Same padding places the odd pixel of an even kernel on the bottom/right.
    """
    _check_tensor(x)
    if kernel.ndim != 4:
        raise ShapeError("kernel must be (kh, kw, cin, cout)", actual=kernel.shape)
    kh, kw, cin, cout = kernel.shape
    if cin != x.shape[2]:
        raise ShapeError(f"kernel expects depth {cin}, input has depth {x.shape[2]}",
                         expected=(cin,), actual=(x.shape[2],))
    if bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},)", expected=(cout,), actual=bias.shape)

    h, w, _ = x.shape
    if padding == 'same':
        top, bottom = _same_pads(h, kh, stride)
        left, right = _same_pads(w, kw, stride)
        x = np.pad(x, ((top, bottom), (left, right), (0, 0)))
    elif padding != 'valid':
        raise ShapeError(f"unknown padding '{padding}'")

    ph, pw, _ = x.shape
    out_h = (ph - kh) // stride + 1
    out_w = (pw - kw) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeError("input smaller than kernel", expected=(kh, kw), actual=(h, w))

    out = np.zeros((out_h, out_w, cout), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            patch = x[i:i + (out_h - 1) * stride + 1:stride, j:j + (out_w - 1) * stride + 1:stride, :]
            out += patch @ kernel[i, j]
    out += bias
    return _activate(out, activation)


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 max pooling, stride 2; odd borders pool over the partial window."""
    _check_tensor(x)
    h, w, c = x.shape
    ph, pw = h + h % 2, w + w % 2
    padded = np.full((ph, pw, c), -np.inf)
    padded[:h, :w] = x
    return padded.reshape(ph // 2, 2, pw // 2, 2, c).max(axis=(1, 3))


def mean_downscale2(x: np.ndarray) -> np.ndarray:
    """2x2 mean pooling with ceil sizing; odd borders replicate the edge."""
    _check_tensor(x)
    h, w, _ = x.shape
    padded = np.pad(x, ((0, h % 2), (0, w % 2), (0, 0)), mode='edge')
    ph, pw, c = padded.shape
    return padded.reshape(ph // 2, 2, pw // 2, 2, c).mean(axis=(1, 3))


def fit_to(x: np.ndarray, height: int, width: int) -> np.ndarray:
    """Center-crop or zero-pad the spatial dims to exactly ``height x width``."""
    h, w, c = x.shape
    out = np.zeros((height, width, c), dtype=x.dtype)
    src_top = max((h - height) // 2, 0)
    src_left = max((w - width) // 2, 0)
    dst_top = max((height - h) // 2, 0)
    dst_left = max((width - w) // 2, 0)
    rows = min(h, height)
    cols = min(w, width)
    out[dst_top:dst_top + rows, dst_left:dst_left + cols] = \
        x[src_top:src_top + rows, src_left:src_left + cols]
    return out


def upconv(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, factor: int,
           target: Optional[Tuple[int, int]] = None, activation: str = 'none') -> np.ndarray:
    """Transposed convolution with stride ``factor``.

    Every input pixel stamps the kernel (weighted by its feature vector) onto the
    output grid; the result is fitted to ``target`` (default ``factor`` times the
    input size).
    """
    _check_tensor(x)
    if factor < 1 or factor & (factor - 1):
        raise ShapeError(f"upconv factor must be a power of two, got {factor}")
    if kernel.ndim != 4 or kernel.shape[2] != x.shape[2]:
        raise ShapeError("upconv kernel must be (kh, kw, cin, cout) matching the input depth",
                         actual=kernel.shape)
    kh, kw, _, cout = kernel.shape
    if bias.shape != (cout,):
        raise ShapeError(f"bias must have shape ({cout},)", expected=(cout,), actual=bias.shape)

    h, w, _ = x.shape
    full = np.zeros(((h - 1) * factor + kh, (w - 1) * factor + kw, cout), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            full[i:i + (h - 1) * factor + 1:factor, j:j + (w - 1) * factor + 1:factor] += x @ kernel[i, j]

    th, tw = target if target is not None else (h * factor, w * factor)
    out = fit_to(full, th, tw) + bias
    return _activate(out, activation)


def residual_block(x: np.ndarray, entry: ConvParams, inner: Sequence[ConvParams]) -> np.ndarray:
    """Entry convolution plus a residual branch of activated convolutions.

    The branch ends in a convolution without activation; its logits are added to
    the entry logits before the final ReLU.
    """
    if not inner:
        raise ShapeError("residual block needs at least one inner convolution")
    e = conv2d(x, entry.kernel, entry.bias, activation='none')
    h = np.maximum(e, 0.0)
    for params in inner[:-1]:
        h = conv2d(h, params.kernel, params.bias, activation='relu')
    r = conv2d(h, inner[-1].kernel, inner[-1].bias, activation='none')
    if r.shape != e.shape:
        raise ShapeError("residual branch and shortcut disagree", expected=e.shape, actual=r.shape)
    return np.maximum(r + e, 0.0)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / np.sum(ex, axis=axis, keepdims=True)
