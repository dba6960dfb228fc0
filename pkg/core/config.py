import os
import json
import logging
from pathlib import Path
from dataclasses import dataclass, fields, asdict
from typing import Any, Dict, Tuple

from core.constants import DEFAULT_DIAMETERS, DEFAULT_HARMONICS
from core.exceptions import ValidationError


@dataclass
class AppConfig:
    """Process-level settings for the command-line application."""

    # Processing
    max_threads: int = os.cpu_count() or 4
    max_retries: int = 3
    retry_delay: float = 0.2

    # Logging
    log_level: int = logging.INFO
    log_json: bool = False
    log_max_bytes: int = 5_242_880
    log_backup_count: int = 5


@dataclass(frozen=True)
class PipelineConfig:
    """Constants of the baseline detection pipeline.

    Defaults are the fixed values used for every experiment; all of them can be
    overridden from the command line or a ``key=value`` file.
    """
    bin_threshold: float = 0.2
    min_sp_distance: float = 10.0
    diameters: Tuple[int, ...] = DEFAULT_DIAMETERS
    harmonics: Tuple[int, ...] = DEFAULT_HARMONICS
    sigma: float = 25.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.3
    delta: float = 0.5
    eta: float = 0.125
    reg_degree: int = 3
    min_sps_per_baseline: int = 2
    data_cost_cap: float = 20.0
    connectivity_mode: str = "mean"
    use_separators: bool = True
    bridge_moves: bool = True
    repair_pass: bool = True
    label_tolerance: float = 0.05
    end_extension: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, 'diameters', tuple(int(d) for d in self.diameters))
        object.__setattr__(self, 'harmonics', tuple(int(k) for k in self.harmonics))

        if not 0.0 <= self.bin_threshold < 1.0:
            raise ValidationError("bin_threshold must lie in [0, 1)", field='bin_threshold',
                                  value=self.bin_threshold)
        for name in ('min_sp_distance', 'sigma', 'gamma', 'delta', 'eta', 'data_cost_cap',
                     'label_tolerance'):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive", field=name, value=getattr(self, name))
        for name in ('alpha', 'beta', 'end_extension'):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative", field=name, value=getattr(self, name))
        if not self.diameters or any(d < 2 or d & (d - 1) for d in self.diameters):
            raise ValidationError("diameters must be powers of two", field='diameters', value=self.diameters)
        if any(b <= a for a, b in zip(self.diameters, self.diameters[1:])):
            raise ValidationError("diameters must be strictly increasing", field='diameters',
                                  value=self.diameters)
        if not self.harmonics or any(k < 1 for k in self.harmonics):
            raise ValidationError("harmonics must be positive", field='harmonics', value=self.harmonics)
        if self.reg_degree < 0:
            raise ValidationError("reg_degree must be non-negative", field='reg_degree', value=self.reg_degree)
        if self.min_sps_per_baseline < 2:
            raise ValidationError("min_sps_per_baseline must be at least 2", field='min_sps_per_baseline',
                                  value=self.min_sps_per_baseline)
        if self.connectivity_mode not in ("mean", "literal"):
            raise ValidationError("connectivity_mode must be 'mean' or 'literal'", field='connectivity_mode',
                                  value=self.connectivity_mode)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['diameters'] = list(self.diameters)
        data['harmonics'] = list(self.harmonics)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PipelineConfig':
        known = {f.name: f for f in fields(cls)}
        values = {}
        for key, raw in data.items():
            if key not in known:
                raise ValidationError(f"unknown configuration key '{key}'", field=key, value=raw)
            values[key] = _coerce(key, raw, known[key].default)
        return cls(**values)

    @classmethod
    def from_text(cls, text: str) -> 'PipelineConfig':
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        return cls.from_dict(parse_overrides(text))

    @classmethod
    def load(cls, path: Path) -> 'PipelineConfig':
        """Load from a key=value file or from the ``config`` snapshot of a detection JSON."""
        return cls.from_dict(read_overrides(path))

    def replace(self, **changes) -> 'PipelineConfig':
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return PipelineConfig.from_dict(data)


def _coerce(key: str, raw: Any, default: Any) -> Any:
    if not isinstance(raw, str):
        if isinstance(default, tuple):
            return tuple(raw)
        return raw
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered not in ('true', 'false', '1', '0', 'yes', 'no'):
                raise ValueError(raw)
            return lowered in ('true', '1', 'yes')
        if isinstance(default, tuple):
            return tuple(int(part) for part in raw.replace(',', ' ').split())
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as e:
        raise ValidationError(f"invalid value for '{key}': {raw}", field=key, value=raw) from e


def parse_overrides(text: str) -> Dict[str, Any]:
    data = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValidationError(f"line {lineno}: expected key=value", field='config', value=line)
        key, value = (part.strip() for part in line.split('=', 1))
        data[key] = value
    return data


def read_overrides(path: Path) -> Dict[str, Any]:
    """Keys set by a key=value file or by the ``config`` snapshot of a detection JSON."""
    text = Path(path).read_text(encoding='utf-8')
    if not text.lstrip().startswith('{'):
        return parse_overrides(text)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid JSON configuration: {e}", field='config', value=str(path)) from e
    data = document.get('config', document) if isinstance(document, dict) else None
    if not isinstance(data, dict):
        raise ValidationError("JSON configuration must be an object", field='config', value=str(path))
    return data
