from typing import Any, Dict, Optional

import numpy as np


class ApplicationError(Exception):
    """Root of every error the pipeline and its commands raise on purpose."""

    def __init__(self, message: str, code: Optional[str] = None,
                 details: Optional[Any] = None):
        self.message = message
        self.code = code
        self.details = details
        super().__init__(self.message)


class ValidationError(ApplicationError):
    """Invalid parameter, label or configuration value."""

    def __init__(self, message: str, field: Optional[str] = None,
                 value: Optional[Any] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value


class ShapeError(ValidationError):
    """Tensor or raster dimensions that do not fit together."""

    def __init__(self, message: str, expected: Optional[tuple] = None,
                 actual: Optional[tuple] = None, **kwargs):
        kwargs.setdefault('code', 'BAD_SHAPE')
        super().__init__(message, field='shape', value=actual, **kwargs)
        self.expected = expected
        self.actual = actual


class ProcessingError(ApplicationError):
    """A pipeline stage cannot run on the page it was given."""

    def __init__(self, message: str, image_path: Optional[str] = None,
                 stage: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.image_path = image_path
        self.stage = stage


class ResourceNotFoundError(ApplicationError):
    """An input file or a named resource does not exist."""

    def __init__(self, resource_type: str, resource_id: str, **kwargs):
        message = kwargs.pop('message', None) or f"{resource_type} '{resource_id}' not found"
        super().__init__(message, **kwargs)
        self.resource_type = resource_type
        self.resource_id = resource_id


class MissingWeightError(ResourceNotFoundError):
    """An architecture slot has no entry in the weight store."""

    def __init__(self, slot: str, **kwargs):
        kwargs.setdefault('code', 'MISSING_SLOT')
        super().__init__('weight slot', slot,
                         message=f"weight store has no tensor for slot '{slot}'", **kwargs)
        self.slot = slot


class ImageError(ApplicationError):
    """Unreadable or undecodable raster."""

    def __init__(self, message: str, image_path: str,
                 details: Optional[dict] = None, **kwargs):
        kwargs.setdefault('code', 'BAD_IMAGE')
        super().__init__(message, details=details or {}, **kwargs)
        self.image_path = image_path


class FormatError(ApplicationError):
    """Malformed binary or JSON file.

    ``code`` is one of BAD_MAGIC, TRUNCATED, DUPLICATE_NAME, BAD_NAME, BAD_SHAPE, BAD_JSON.
    """

    def __init__(self, message: str, code: str, path: Optional[str] = None, **kwargs):
        super().__init__(message, code=code, **kwargs)
        self.path = path


def _origin(exc: Exception) -> Dict[str, str]:
    return {'exception_type': type(exc).__name__, 'original_message': str(exc)}


def handle_exception(exc: Exception) -> ApplicationError:
    """Wrap a foreign exception so the command boundary can pick an exit code."""
    if isinstance(exc, ApplicationError):
        return exc

    if isinstance(exc, (FileNotFoundError, IsADirectoryError)):
        return ResourceNotFoundError('file', str(getattr(exc, 'filename', '') or exc),
                                     code='NOT_FOUND', details=_origin(exc))

    # numpy raises its own subclasses for degenerate inputs (singular systems, bad casts)
    if isinstance(exc, np.linalg.LinAlgError):
        return ProcessingError(f"numerical failure: {exc}", code='NUMERICAL', details=_origin(exc))
    if isinstance(exc, MemoryError):
        return ProcessingError("page too large to process in memory", code='OUT_OF_MEMORY',
                               details=_origin(exc))
    if isinstance(exc, (ValueError, TypeError)):
        return ValidationError(str(exc), code='INVALID_VALUE', details=_origin(exc))

    return ApplicationError(str(exc), code='UNKNOWN_ERROR', details=_origin(exc))
