import io
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, UnidentifiedImageError

from core.constants import ALLOWED_IMAGE_EXTENSIONS
from core.exceptions import ImageError


def load_gray(image_path: Path) -> np.ndarray:
    """Read an 8-bit PNG or PGM as intensities in [0, 1]."""
    image_path = Path(image_path)
    if image_path.suffix.lower() not in ALLOWED_IMAGE_EXTENSIONS:
        raise ImageError(f"unsupported image type '{image_path.suffix}'", str(image_path),
                         details={'allowed': sorted(ALLOWED_IMAGE_EXTENSIONS)})
    try:
        with Image.open(image_path) as img:
            img.load()
            if img.mode not in ('L', 'P', 'RGB', 'RGBA', '1'):
                raise ImageError(f"unsupported pixel mode '{img.mode}'", str(image_path),
                                 details={'mode': img.mode})
            gray = img.convert('L')
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError) as e:
        raise ImageError(f"cannot decode image: {e}", str(image_path)) from e
    return np.asarray(gray, dtype=np.float64) / 255.0


def to_uint8(plane: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(plane, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def encode_gray(plane: np.ndarray, fmt: str = 'PNG') -> bytes:
    """8-bit grayscale file bytes of a [0, 1] plane."""
    buffer = io.BytesIO()
    Image.fromarray(to_uint8(plane), mode='L').save(buffer, format=fmt)
    return buffer.getvalue()


def render_overlay(background: np.ndarray, chains, color=(255, 0, 0), width: int = 2) -> bytes:
    """PNG of ``background`` with every chain drawn on top."""
    canvas = Image.fromarray(to_uint8(background), mode='L').convert('RGB')
    draw = ImageDraw.Draw(canvas)
    for chain in chains:
        draw.line([tuple(p) for p in chain.points], fill=color, width=width)
        x, y = chain.points[0]
        draw.ellipse([x - width - 1, y - width - 1, x + width + 1, y + width + 1], outline=color)
    buffer = io.BytesIO()
    canvas.save(buffer, format='PNG')
    return buffer.getvalue()
