"""Named parameter store and its binary file format.

File layout (little-endian): magic ``ARUW``, u32 tensor count, then per tensor
u32 name length, UTF-8 name, u32 rank, rank x u32 dims, float32 row-major data.
Tensors are written sorted by name.
"""
import logging
import struct
from typing import Dict, Iterable, Iterator, Mapping, Tuple

import numpy as np

from core.exceptions import FormatError, MissingWeightError, ShapeError, ValidationError
from npl.layers import ConvParams
from utils.validators import validate_slot_name

MAGIC = b'ARUW'

logger = logging.getLogger(__name__)


class WeightStore:
    """Immutable name -> float32 tensor mapping shared read-only across workers.

    Names follow the slot naming rules the file loader enforces, so every store
    that can be built can also be saved and read back.
    """

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        self._tensors: Dict[str, np.ndarray] = {}
        for name, value in tensors.items():
            valid, problem = validate_slot_name(name)
            if not valid:
                raise ValidationError(f"bad tensor name '{name}': {problem}", field='name', value=name)
            arr = np.array(value, dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"tensor '{name}' holds non-finite values", field=name)
            arr.setflags(write=False)
            self._tensors[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._tensors[name]
        except KeyError:
            raise MissingWeightError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tensors))

    def items(self) -> Iterable[Tuple[str, np.ndarray]]:
        return ((name, self._tensors[name]) for name in sorted(self._tensors))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightStore) or set(self._tensors) != set(other._tensors):
            return False
        return all(
            a.shape == other._tensors[name].shape and a.tobytes() == other._tensors[name].tobytes()
            for name, a in self._tensors.items()
        )

    def conv(self, slot: str) -> ConvParams:
        kernel = self[f"{slot}/kernel"].astype(np.float64)
        bias = self[f"{slot}/bias"].astype(np.float64)
        return ConvParams(kernel, bias)

    def validate(self, expected: Mapping[str, Tuple[int, ...]]) -> None:
        """Check every expected slot is present with the expected shape."""
        for name, shape in sorted(expected.items()):
            actual = self[name].shape
            if actual != tuple(shape):
                raise ShapeError(f"tensor '{name}' has shape {actual}, expected {tuple(shape)}",
                                 expected=tuple(shape), actual=actual)

    def parameter_count(self) -> int:
        return sum(int(a.size) for a in self._tensors.values())


def save_weights(ws: WeightStore) -> bytes:
    chunks = [MAGIC, struct.pack('<I', len(ws))]
    for name, arr in ws.items():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<I', len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack('<I', arr.ndim))
        chunks.append(struct.pack(f'<{arr.ndim}I', *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype='<f4').tobytes())
    return b''.join(chunks)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"weights payload truncated at byte {self.offset} (needed {n} more)",
                              code='TRUNCATED')
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self) -> int:
        return struct.unpack('<I', self.take(4))[0]


def load_weights(data: bytes) -> WeightStore:
    if data[:4] != MAGIC:
        raise FormatError("not a weights file (bad magic)", code='BAD_MAGIC')
    reader = _Reader(data)
    reader.take(4)
    count = reader.u32()
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        name_bytes = reader.take(reader.u32())
        try:
            name = name_bytes.decode('utf-8')
        except UnicodeDecodeError as e:
            raise FormatError("tensor name is not valid UTF-8", code='BAD_NAME') from e
        valid, problem = validate_slot_name(name)
        if not valid:
            raise FormatError(f"bad tensor name '{name}': {problem}", code='BAD_NAME')
        rank = reader.u32()
        dims = struct.unpack(f'<{rank}I', reader.take(4 * rank)) if rank else ()
        size = int(np.prod(dims)) if dims else 1
        values = np.frombuffer(reader.take(4 * size), dtype='<f4').reshape(dims)
        if name in tensors:
            raise FormatError(f"duplicate tensor name '{name}'", code='DUPLICATE_NAME')
        tensors[name] = values
    if reader.offset != len(data):
        logger.warning(f"ignoring {len(data) - reader.offset} trailing bytes in weights payload")
    return WeightStore(tensors)
