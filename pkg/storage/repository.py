import os
import time
import logging
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from core.config import AppConfig
from core.exceptions import FormatError, ImageError, ResourceNotFoundError
from core.types import ConfidenceMaps
from npl.weights import WeightStore, load_weights, save_weights
from storage.baseline_json import BaselineDocument, decode_document, dumps, encode_document
from storage.formats import decode_maps, decode_planes, encode_maps, encode_planes
from utils.image_utils import encode_gray, load_gray


@contextmanager
def atomic_write(path: Path):
    """Yield a binary file in the target directory; it replaces ``path`` only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, 'wb') as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


class FileRepository:
    """Reads and writes every artifact of a run: maps, weights, rasters and JSON documents."""

    def __init__(self, config: Optional[AppConfig] = None):
        self.config = config or AppConfig()
        self.logger = logging.getLogger(__name__)

    def read_bytes(self, path: Path) -> bytes:
        """Read a file, retrying transient OS errors."""
        path = Path(path)
        if not path.exists():
            raise ResourceNotFoundError('file', str(path), code='NOT_FOUND')
        max_retries = max(1, self.config.max_retries)
        for attempt in range(max_retries):
            try:
                return path.read_bytes()
            except (FileNotFoundError, IsADirectoryError) as e:
                raise ResourceNotFoundError('file', str(path), code='NOT_FOUND') from e
            except OSError as e:
                if attempt < max_retries - 1:
                    self.logger.warning(f"Read attempt {attempt + 1} for {path} failed: {e}")
                    time.sleep(self.config.retry_delay)
                else:
                    self.logger.error(f"Could not read {path} after {max_retries} attempts: {e}")
                    raise

    def write_bytes(self, path: Path, data: bytes) -> Path:
        with atomic_write(path) as handle:
            handle.write(data)
        self.logger.debug(f"wrote {len(data)} bytes to {path}")
        return Path(path)

    # confidence maps and planes

    def load_maps(self, path: Path) -> ConfidenceMaps:
        return decode_maps(self.read_bytes(path), str(path))

    def save_maps(self, path: Path, maps: ConfidenceMaps) -> Path:
        return self.write_bytes(path, encode_maps(maps))

    def load_planes(self, path: Path) -> np.ndarray:
        return decode_planes(self.read_bytes(path), str(path))

    def save_planes(self, path: Path, planes: np.ndarray) -> Path:
        return self.write_bytes(path, encode_planes(planes))

    # weights

    def load_weights(self, path: Path) -> WeightStore:
        try:
            return load_weights(self.read_bytes(path))
        except FormatError as e:
            e.path = str(path)
            raise

    def save_weights(self, path: Path, weights: WeightStore) -> Path:
        return self.write_bytes(path, save_weights(weights))

    # rasters

    def load_image(self, path: Path) -> np.ndarray:
        path = Path(path)
        if not path.exists():
            raise ResourceNotFoundError('image', str(path), code='NOT_FOUND')
        try:
            return load_gray(path)
        except ImageError:
            raise
        except OSError as e:
            raise ImageError(f"cannot read image: {e}", str(path)) from e

    def save_image(self, path: Path, plane: np.ndarray) -> Path:
        fmt = 'PPM' if Path(path).suffix.lower() == '.pgm' else 'PNG'
        return self.write_bytes(path, encode_gray(plane, fmt))

    # JSON documents

    def load_document(self, path: Path) -> BaselineDocument:
        return decode_document(self.read_bytes(path), str(path))

    def save_document(self, path: Path, doc: BaselineDocument) -> Path:
        return self.write_bytes(path, encode_document(doc))

    def save_json(self, path: Path, data: Dict) -> Path:
        return self.write_bytes(path, (dumps(data) + '\n').encode('utf-8'))
