import re
from pathlib import Path
from typing import Optional, Sequence, Tuple

SLOT_PATTERN = re.compile(r'^[a-z_]+[a-z0-9_]*(/[a-z0-9_]+)*$')


def validate_input_file(path: Optional[Path], flag: str,
                        extensions: Sequence[str] = ()) -> Tuple[bool, Optional[str]]:
    """Validate a path given on the command line."""
    if path is None:
        return False, f"{flag} is required"
    path = Path(path)
    if not path.exists():
        return False, f"{flag}: '{path}' does not exist"
    if not path.is_file():
        return False, f"{flag}: '{path}' is not a file"
    if extensions and path.suffix.lower() not in extensions:
        return False, f"{flag}: expected one of {', '.join(sorted(extensions))}, got '{path.suffix}'"
    return True, None


def validate_output_dir(path: Optional[Path]) -> Tuple[bool, Optional[str]]:
    if path is None:
        return False, "--out is required"
    path = Path(path)
    if path.exists() and not path.is_dir():
        return False, f"--out: '{path}' exists and is not a directory"
    return True, None


def validate_positive(value, flag: str) -> Tuple[bool, Optional[str]]:
    if value is None or value <= 0:
        return False, f"{flag} must be positive"
    return True, None


def validate_slot_name(name: str) -> Tuple[bool, Optional[str]]:
    """Validate a weight slot name such as ``net/enc0/conv0/kernel``."""
    if not name:
        return False, "Slot name cannot be empty"
    if len(name) > 200:
        return False, "Slot name cannot exceed 200 characters"
    if not SLOT_PATTERN.match(name):
        return False, "Slot name must be lowercase path segments of letters, digits and underscores"
    return True, None
