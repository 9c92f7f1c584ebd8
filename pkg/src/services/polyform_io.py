import logging
import re
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from src.errors import CertificateError, InvalidPolyformError, PolyformParseError
from src.grid_domain import (
    MPolyform,
    Side,
    TriangleId,
    diamond_polyform,
    extended_polyform,
    rectangle_polyform,
    square_polyform,
    triangle_polyform,
)
from src.models import TilingCertificate

logger = logging.getLogger(__name__)

_SIZE = re.compile(r"^[1-9][0-9]*$")
_RECT = re.compile(r"^([1-9][0-9]*)x([1-9][0-9]*)$")

# Shorthand generators; square:w is the polyform of side w, so its domain is (w-1)×(w-1).
GENERATORS: Dict[str, Callable[[int], MPolyform]] = {
    "square": square_polyform,
    "triangle": triangle_polyform,
    "diamond": diamond_polyform,
}


def parse_polyform(text: str, source: str = "<text>") -> MPolyform:
    """Parses the "x y d" polyform format.

    Args:
        text: One triangle per line as integer square coordinates and a side N/E/S/W.
            Blank lines and lines starting with '#' are ignored.
        source: Name used in error messages.

    Returns:
        The polyform.

    Raises:
        PolyformParseError: On malformed lines, duplicates or an empty file.
        InvalidPolyformError: If the triangles are not edge-connected.
    """
    triangles: List[TriangleId] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise PolyformParseError(f"{source}:{number}: expected 'x y d', got '{line}'")
        try:
            x, y = int(parts[0]), int(parts[1])
        except ValueError:
            raise PolyformParseError(f"{source}:{number}: coordinates must be integers")
        side = parts[2].upper()
        if side not in Side.__members__:
            raise PolyformParseError(f"{source}:{number}: side must be one of N, E, S, W")
        triangles.append(TriangleId(x, y, Side[side]))

    if not triangles:
        raise PolyformParseError(f"{source}: no triangles")
    if len(set(triangles)) != len(triangles):
        raise PolyformParseError(f"{source}: duplicate triangle")
    return MPolyform(frozenset(triangles))


def format_polyform(P: MPolyform, comment: Optional[str] = None) -> str:
    lines = [f"# {comment}"] if comment else []
    lines.extend(f"{t.square_x} {t.square_y} {t.side.name}" for t in P.sorted_triangles())
    return "\n".join(lines) + "\n"


def resolve_shorthand(ref: str) -> Optional[MPolyform]:
    """Builds the polyform named by a generator shorthand, or None if `ref` is not one.

    Accepted forms: square:w, triangle:k, diamond:k, rect:WxH and extended:<ref>, the
    latter adding one triangle that leaves the domain unchanged.
    """
    name, sep, arg = ref.partition(":")
    if not sep:
        return None
    if name == "extended":
        base = load_polyform(arg)
        extended = extended_polyform(base)
        if extended is None:
            raise InvalidPolyformError(f"No domain-preserving extension of '{arg}' exists")
        return extended
    if name == "rect":
        match = _RECT.match(arg)
        if not match:
            raise PolyformParseError(f"Bad rectangle shorthand '{ref}', expected rect:WxH")
        return rectangle_polyform(int(match.group(1)), int(match.group(2)))
    if name in GENERATORS:
        if not _SIZE.match(arg):
            raise PolyformParseError(f"Bad size in shorthand '{ref}'")
        return GENERATORS[name](int(arg))
    return None


def load_polyform(ref: str) -> MPolyform:
    """Resolves a CLI polyform reference: generator shorthand first, then a file path."""
    polyform = resolve_shorthand(ref)
    if polyform is not None:
        logger.debug(f"Polyform '{ref}' built from shorthand with {len(polyform)} triangles")
        return polyform
    path = Path(ref)
    if not path.is_file():
        raise PolyformParseError(f"'{ref}' is neither a shorthand nor a readable file")
    return parse_polyform(path.read_text(), source=str(path))


def write_polyform(P: MPolyform, path: Path, comment: Optional[str] = None) -> None:
    path.write_text(format_polyform(P, comment))


def load_certificate(path: Path) -> TilingCertificate:
    try:
        return TilingCertificate.model_validate_json(Path(path).read_text())
    except FileNotFoundError:
        raise CertificateError(f"Certificate file not found: {path}")
    except ValidationError as e:
        raise CertificateError(f"Malformed certificate {path}: {e.error_count()} errors") from e


def write_certificate(certificate: TilingCertificate, path: Path) -> None:
    Path(path).write_text(certificate.model_dump_json(indent=2) + "\n")
