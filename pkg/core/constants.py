from enum import Enum
from typing import Dict, Iterable, Set, Tuple

import numpy as np

from core.exceptions import ValidationError


class Variant(Enum):
    """Neural pixel labeler compositions."""
    U = "U"
    RU = "RU"
    ARU = "ARU"


class SynthStyle(Enum):
    STRAIGHT = "straight"
    CURVED = "curved"
    ROTATED = "rotated"
    MIXED = "mixed"


class DeformKind(Enum):
    AFFINE = "affine"
    ELASTIC = "elastic"
    ROTATION = "rotation"


DEFAULT_DIAMETERS: Tuple[int, ...] = (64, 128, 256, 512)
DEFAULT_HARMONICS: Tuple[int, ...] = (3, 4, 5)

ALLOWED_IMAGE_EXTENSIONS: Set[str] = {'.png', '.pgm'}
MAPS_EXTENSION: str = '.aruc'
WEIGHTS_EXTENSION: str = '.aruw'


class InterlineLabelSet:
    """Sorted (descending) list of admissible interline distances d/k.

    Each label keeps its provenance ``(d, k)``; lookups by value accept a small
    tolerance so rounded values such as ``42.7`` resolve to ``128/3``.
    """

    def __init__(self, diameters: Iterable[int] = DEFAULT_DIAMETERS,
                 harmonics: Iterable[int] = DEFAULT_HARMONICS,
                 tolerance: float = 0.05):
        provenance: Dict[float, Tuple[int, int]] = {}
        for d in diameters:
            for k in harmonics:
                value = d / k
                if any(abs(value - other) <= tolerance for other in provenance):
                    raise ValidationError(
                        f"interline label {value:.3f} from d={d}, k={k} is not unique",
                        field='diameters', value=(d, k))
                provenance[value] = (int(d), int(k))
        self.values: Tuple[float, ...] = tuple(sorted(provenance, reverse=True))
        self.provenance: Tuple[Tuple[int, int], ...] = tuple(provenance[v] for v in self.values)
        self.tolerance = tolerance
        self._array = np.array(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, index: int) -> float:
        return self.values[index]

    def index_of(self, value: float) -> int:
        """Index of the label closest to ``value``; unknown labels are rejected."""
        idx = int(np.argmin(np.abs(self._array - value)))
        if abs(self._array[idx] - value) > self.tolerance:
            raise ValidationError(f"{value} is not an interline label", field='interline', value=value)
        return idx

    def labels_for(self, diameter: int) -> Dict[int, int]:
        """Map harmonic k -> label index for one projection diameter."""
        return {k: i for i, (d, k) in enumerate(self.provenance) if d == diameter}


DEFAULT_LABELS = InterlineLabelSet()
