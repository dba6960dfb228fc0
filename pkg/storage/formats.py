"""Binary confidence-map files.

Layout (little-endian): magic ``ARUC``, u32 height, u32 width, u32 channels,
then channel-planar row-major float32 values.
"""
import struct

import numpy as np

from core.exceptions import FormatError
from core.types import ConfidenceMaps

MAGIC = b'ARUC'
HEADER = struct.Struct('<4sIII')


def encode_planes(planes: np.ndarray) -> bytes:
    planes = np.asarray(planes)
    if planes.ndim == 2:
        planes = planes[None]
    channels, height, width = planes.shape
    return HEADER.pack(MAGIC, height, width, channels) + np.ascontiguousarray(planes, dtype='<f4').tobytes()


def decode_planes(data: bytes, path: str = None) -> np.ndarray:
    """Planes ``(channels, h, w)`` as float64."""
    if len(data) < HEADER.size:
        raise FormatError("map file shorter than its header", code='TRUNCATED', path=path)
    magic, height, width, channels = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("not a confidence-map file (bad magic)", code='BAD_MAGIC', path=path)
    expected = HEADER.size + 4 * height * width * channels
    if len(data) < expected:
        raise FormatError(f"map payload truncated: {len(data)} of {expected} bytes", code='TRUNCATED', path=path)
    if len(data) > expected:
        raise FormatError(f"map file has {len(data) - expected} trailing bytes", code='BAD_SHAPE', path=path)
    values = np.frombuffer(data, dtype='<f4', offset=HEADER.size, count=height * width * channels)
    return values.reshape(channels, height, width).astype(np.float64)


def encode_maps(maps: ConfidenceMaps) -> bytes:
    return encode_planes(maps.planes())


def decode_maps(data: bytes, path: str = None) -> ConfidenceMaps:
    planes = decode_planes(data, path)
    if planes.shape[0] not in (2, 3):
        raise FormatError(f"confidence maps need 2 or 3 channels, found {planes.shape[0]}",
                          code='BAD_SHAPE', path=path)
    # float32 storage may push values a hair outside [0, 1]
    planes = np.clip(planes, 0.0, 1.0)
    if planes.shape[0] == 2:
        return ConfidenceMaps(planes[0], planes[1])
    return ConfidenceMaps(planes[0], planes[1], planes[2])
