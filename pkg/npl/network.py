"""Forward passes of the U-Net, RU-Net and ARU-Net pixel labelers."""
import logging
from typing import List, Tuple

import numpy as np

from core.constants import Variant
from core.exceptions import ProcessingError, ShapeError, ValidationError
from core.types import ConfidenceMaps
from npl.architecture import BACKBONE, DECODER_FACTOR, NplArchitecture, architecture_slots
from npl.layers import conv2d, maxpool2, mean_downscale2, residual_block, softmax, upconv
from npl.weights import WeightStore

logger = logging.getLogger(__name__)

PREDICTION_FLOOR = 1e-12


def as_tensor(img: np.ndarray) -> np.ndarray:
    x = np.asarray(img, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    if x.ndim != 3:
        raise ShapeError("input must be (height, width) or (height, width, depth)", actual=x.shape)
    return x


def _block(x: np.ndarray, ws: WeightStore, arch: NplArchitecture, prefix: str) -> np.ndarray:
    if arch.variant is Variant.U:
        c0 = ws.conv(f"{prefix}/conv0")
        c1 = ws.conv(f"{prefix}/conv1")
        x = conv2d(x, c0.kernel, c0.bias)
        return conv2d(x, c1.kernel, c1.bias)
    inner = [ws.conv(f"{prefix}/res{r}") for r in range(arch.residual_depth)]
    return residual_block(x, ws.conv(f"{prefix}/entry"), inner)


def ru_net_forward(x: np.ndarray, weights: WeightStore, arch: NplArchitecture) -> np.ndarray:
    """Encoder/decoder with concatenation shortcuts; returns ``initial_depth`` feature maps.

    ``arch.variant`` U uses plain two-convolution blocks, RU and ARU residual blocks.
    """
    x = as_tensor(x)
    if x.shape[2] != arch.input_depth:
        raise ShapeError(f"expected input depth {arch.input_depth}", expected=(arch.input_depth,),
                         actual=(x.shape[2],))
    skips: List[np.ndarray] = []
    h = x
    for level in range(arch.scale_spaces):
        if level > 0:
            h = maxpool2(h)
        h = _block(h, weights, arch, f"{BACKBONE}/enc{level}")
        skips.append(h)

    for level in range(arch.scale_spaces - 2, -1, -1):
        skip = skips[level]
        up = weights.conv(f"{BACKBONE}/dec{level}/up")
        h = upconv(h, up.kernel, up.bias, factor=DECODER_FACTOR, target=skip.shape[:2], activation='relu')
        h = np.concatenate([skip, h], axis=2)
        h = _block(h, weights, arch, f"{BACKBONE}/dec{level}")
    return h


def anet_forward(x: np.ndarray, weights: WeightStore, arch: NplArchitecture) -> np.ndarray:
    """Attention logits at the resolution of ``x`` (single channel)."""
    h = as_tensor(x)
    last = len(arch.anet_depths) - 1
    for i in range(len(arch.anet_depths)):
        params = weights.conv(f"anet/conv{i}")
        h = conv2d(h, params.kernel, params.bias, activation='none' if i == last else 'relu')
        h = maxpool2(h)
    up = weights.conv("anet/up")
    return upconv(h, up.kernel, up.bias, factor=arch.anet_factor, target=x.shape[:2])


def _classify(features: np.ndarray, weights: WeightStore) -> ConfidenceMaps:
    params = weights.conv("classifier")
    logits = conv2d(features, params.kernel, params.bias, activation='none')
    probs = softmax(logits.astype(np.float64), axis=-1)
    return ConfidenceMaps(baseline=probs[..., 0], separator=probs[..., 1], other=probs[..., 2])


def _check_input(x: np.ndarray, arch: NplArchitecture) -> None:
    h, w = x.shape[:2]
    if min(h, w) < arch.min_input_size:
        raise ProcessingError(
            f"image {h}x{w} is smaller than the minimum side {arch.min_input_size} "
            f"required by {arch.scale_spaces} scale spaces",
            code='IMAGE_TOO_SMALL', details={'height': h, 'width': w})


def aru_forward_with_attention(img: np.ndarray, weights: WeightStore,
                               arch: NplArchitecture) -> Tuple[ConfidenceMaps, np.ndarray]:
    """ARU-Net inference; also returns the normalised attention maps ``(scales, h, w)``."""
    if arch.variant is not Variant.ARU:
        raise ValidationError("aru_forward needs the ARU variant", field='variant', value=arch.variant.value)
    x = as_tensor(img)
    _check_input(x, arch)
    height, width = x.shape[:2]

    pyramid = [x]
    for _ in range(1, arch.image_scales):
        pyramid.append(mean_downscale2(pyramid[-1]))

    features, logits = [], []
    for scale, level in enumerate(pyramid):
        ru = ru_net_forward(level, weights, arch)
        a = anet_forward(level, weights, arch)
        if scale > 0:
            f = 2 ** scale
            d_ru = weights.conv(f"deconv_ru/x{f}")
            d_a = weights.conv(f"deconv_a/x{f}")
            ru = upconv(ru, d_ru.kernel, d_ru.bias, factor=f, target=(height, width))
            a = upconv(a, d_a.kernel, d_a.bias, factor=f, target=(height, width))
        features.append(ru)
        logits.append(a[..., 0])
        logger.debug(f"scale {scale}: input {level.shape[:2]}, features {ru.shape}")

    attention = softmax(np.stack(logits), axis=0)
    combined = np.sum(np.stack(features) * attention[..., None], axis=0)
    return _classify(combined, weights), attention


def aru_forward(img: np.ndarray, weights: WeightStore, arch: NplArchitecture) -> ConfidenceMaps:
    maps, _ = aru_forward_with_attention(img, weights, arch)
    return maps


def npl_forward(img: np.ndarray, weights: WeightStore, arch: NplArchitecture) -> ConfidenceMaps:
    """Run the labeler selected by ``arch.variant``; weights are checked first."""
    weights.validate(architecture_slots(arch))
    if arch.variant is Variant.ARU:
        return aru_forward(img, weights, arch)
    x = as_tensor(img)
    _check_input(x, arch)
    return _classify(ru_net_forward(x, weights, arch), weights)


def cross_entropy_loss(pred: ConfidenceMaps, gt) -> float:
    """``-sum G * ln(pred)`` over pixels and classes, pred floored at 1e-12.

    ``gt`` is a PixelGT (one-hot planes in baseline, separator, other order).
    """
    if pred.shape != gt.shape:
        raise ShapeError("prediction and ground truth dims differ", expected=gt.shape, actual=pred.shape)
    planes = pred.with_other().planes()
    target = gt.planes.astype(np.float64)
    return float(-np.sum(target * np.log(np.maximum(planes, PREDICTION_FLOOR))))
