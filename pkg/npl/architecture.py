"""Architecture description, parameter slots and random initialisation."""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from core.constants import Variant
from core.exceptions import ValidationError

Shape = Tuple[int, ...]

BACKBONE = 'net'
DECODER_FACTOR = 2


@dataclass(frozen=True)
class NplArchitecture:
    """Hyperparameters of the U / RU / ARU pixel labelers."""
    scale_spaces: int = 6
    initial_depth: int = 8
    residual_depth: int = 3
    growth_factor: int = 2
    kernel_size: int = 3
    anet_kernel: int = 4
    anet_depths: Tuple[int, ...] = (12, 16, 32, 1)
    image_scales: int = 5
    classifier_kernel: int = 4
    num_classes: int = 3
    input_depth: int = 1
    variant: Variant = Variant.ARU

    def __post_init__(self):
        object.__setattr__(self, 'variant', Variant(self.variant))
        object.__setattr__(self, 'anet_depths', tuple(self.anet_depths))
        if self.scale_spaces < 1:
            raise ValidationError("scale_spaces must be >= 1", field='scale_spaces', value=self.scale_spaces)
        if self.image_scales < 1:
            raise ValidationError("image_scales must be >= 1", field='image_scales', value=self.image_scales)
        if self.growth_factor < 2:
            raise ValidationError("growth_factor must be >= 2", field='growth_factor', value=self.growth_factor)
        if self.residual_depth < 1:
            raise ValidationError("residual_depth must be >= 1", field='residual_depth', value=self.residual_depth)
        if not self.anet_depths or self.anet_depths[-1] != 1:
            raise ValidationError("the attention network must end in a single map", field='anet_depths',
                                  value=self.anet_depths)

    def depth(self, level: int) -> int:
        return self.initial_depth * self.growth_factor ** level

    @property
    def anet_factor(self) -> int:
        return 2 ** len(self.anet_depths)

    @property
    def min_input_size(self) -> int:
        return 2 ** (self.scale_spaces - 1)

    def with_variant(self, variant: Variant) -> 'NplArchitecture':
        return NplArchitecture(**{**self.__dict__, 'variant': Variant(variant)})


def conv_slot_shapes(kh: int, kw: int, cin: int, cout: int) -> Tuple[Shape, Shape]:
    return (kh, kw, cin, cout), (cout,)


def conv_parameter_count(kh: int, kw: int, cin: int, cout: int) -> int:
    return kh * kw * cin * cout + cout


def _block_slots(arch: NplArchitecture, prefix: str, cin: int, cout: int) -> Iterator[Tuple[str, Shape]]:
    k = arch.kernel_size
    if arch.variant is Variant.U:
        yield f"{prefix}/conv0", (k, k, cin, cout)
        yield f"{prefix}/conv1", (k, k, cout, cout)
    else:
        yield f"{prefix}/entry", (k, k, cin, cout)
        for r in range(arch.residual_depth):
            yield f"{prefix}/res{r}", (k, k, cout, cout)


def _backbone_slots(arch: NplArchitecture) -> Iterator[Tuple[str, Shape]]:
    cin = arch.input_depth
    for level in range(arch.scale_spaces):
        depth = arch.depth(level)
        yield from _block_slots(arch, f"{BACKBONE}/enc{level}", cin, depth)
        cin = depth
    f = DECODER_FACTOR
    for level in range(arch.scale_spaces - 2, -1, -1):
        depth = arch.depth(level)
        yield f"{BACKBONE}/dec{level}/up", (f, f, arch.depth(level + 1), depth)
        yield from _block_slots(arch, f"{BACKBONE}/dec{level}", 2 * depth, depth)


def _attention_slots(arch: NplArchitecture) -> Iterator[Tuple[str, Shape]]:
    cin = arch.input_depth
    for i, depth in enumerate(arch.anet_depths):
        yield f"anet/conv{i}", (arch.anet_kernel, arch.anet_kernel, cin, depth)
        cin = depth
    f = arch.anet_factor
    yield "anet/up", (f, f, 1, 1)
    for scale in range(1, arch.image_scales):
        f = 2 ** scale
        yield f"deconv_ru/x{f}", (f, f, arch.initial_depth, arch.initial_depth)
        yield f"deconv_a/x{f}", (f, f, 1, 1)


def conv_slots(arch: NplArchitecture) -> List[Tuple[str, Shape]]:
    """Every convolution slot of the variant with its kernel shape, in network order."""
    slots = list(_backbone_slots(arch))
    if arch.variant is Variant.ARU:
        slots.extend(_attention_slots(arch))
    c = arch.classifier_kernel
    slots.append(("classifier", (c, c, arch.initial_depth, arch.num_classes)))
    return slots


def architecture_slots(arch: NplArchitecture) -> Dict[str, Shape]:
    """Tensor name -> shape for every trainable tensor (kernels and biases)."""
    tensors: Dict[str, Shape] = {}
    for slot, shape in conv_slots(arch):
        kernel, bias = conv_slot_shapes(*shape)
        tensors[f"{slot}/kernel"] = kernel
        tensors[f"{slot}/bias"] = bias
    return tensors


def count_parameters(arch: NplArchitecture) -> int:
    return sum(int(np.prod(shape)) for shape in architecture_slots(arch).values())


def init_weights(arch: NplArchitecture, seed: int = 0):
    """Xavier-uniform kernels and zero biases, deterministic in ``seed``."""
    from npl.weights import WeightStore

    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in sorted(architecture_slots(arch).items()):
        if name.endswith('/bias'):
            tensors[name] = np.zeros(shape, dtype=np.float32)
            continue
        kh, kw, cin, cout = shape
        limit = np.sqrt(6.0 / (kh * kw * (cin + cout)))
        tensors[name] = rng.uniform(-limit, limit, size=shape).astype(np.float32)
    return WeightStore(tensors)
