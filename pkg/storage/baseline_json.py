"""Baseline documents: page size, chains, regions and the config snapshot."""
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from core.exceptions import FormatError, ValidationError
from core.types import PolyChain, Region


@dataclass
class BaselineDocument:
    width: int
    height: int
    baselines: List[PolyChain] = field(default_factory=list)
    regions: List[Region] = field(default_factory=list)
    config: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'width': int(self.width),
            'height': int(self.height),
            'baselines': [chain.to_list() for chain in self.baselines],
            'regions': [region.boundary.to_list() for region in self.regions],
        }
        if self.config is not None:
            data['config'] = self.config
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: str = None) -> 'BaselineDocument':
        try:
            width = int(data['width'])
            height = int(data['height'])
            baselines = [PolyChain.from_points(points) for points in data.get('baselines', [])]
            regions = [Region.from_points(points) for points in data.get('regions', [])]
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise FormatError(f"malformed baseline document: {e}", code='BAD_JSON', path=path) from e
        return cls(width, height, baselines, regions, data.get('config'))


def _number(value: float) -> str:
    if not math.isfinite(value):
        raise ValidationError("cannot serialize a non-finite number", field='value', value=value)
    return format(value, '.17g')


def dumps(obj: Any) -> str:
    """Compact JSON with floats written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _number(obj)
    if isinstance(obj, dict):
        return '{' + ','.join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + '}'
    if isinstance(obj, (list, tuple)):
        return '[' + ','.join(dumps(v) for v in obj) + ']'
    if hasattr(obj, 'item'):
        return dumps(obj.item())
    raise ValidationError(f"cannot serialize {type(obj).__name__}", field='value')


def encode_document(doc: BaselineDocument) -> bytes:
    return (dumps(doc.to_dict()) + '\n').encode('utf-8')


def decode_document(data: bytes, path: str = None) -> BaselineDocument:
    try:
        parsed = json.loads(data.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"invalid JSON: {e}", code='BAD_JSON', path=path) from e
    if not isinstance(parsed, dict):
        raise FormatError("baseline document must be a JSON object", code='BAD_JSON', path=path)
    return BaselineDocument.from_dict(parsed, path)
