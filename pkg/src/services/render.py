import logging
from fractions import Fraction

from src.errors import InputError, NegativeConfigurationError
from src.harmonic import HarmonicFunction
from src.models import HarmonicFunctionModel
from src.sandpile_core import ChipConfig

logger = logging.getLogger(__name__)

# Heights 0..3 of a stable configuration as PGM gray levels.
GRAY_LEVELS = (0, 85, 170, 255)
PGM_MAXVAL = 255


def rational_str(value) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _require_stable(c: ChipConfig) -> None:
    if not c.is_stable():
        raise NegativeConfigurationError("Only stable configurations (heights 0..3) can be rendered")


def render_text(c: ChipConfig) -> str:
    """One row per line from north to south; '.' marks lattice points outside the domain."""
    _require_stable(c)
    rows = c.as_grid()
    return "\n".join("".join("." if v is None else str(v) for v in row) for row in rows) + "\n"


def render_pgm(c: ChipConfig) -> str:
    """Plain (P2) PGM over the bounding box, north at the top; outside points are black."""
    _require_stable(c)
    rows = c.as_grid()
    lines = ["P2", f"{len(rows[0])} {len(rows)}", str(PGM_MAXVAL)]
    for row in rows:
        lines.append(" ".join(str(GRAY_LEVELS[v] if v is not None else 0) for v in row))
    return "\n".join(lines) + "\n"


def harmonic_to_model(h: HarmonicFunction) -> HarmonicFunctionModel:
    """Rows of the bounding box from north to south, west to east within a row."""
    x0, y0, x1, y1 = h.bounding_box
    rows = [
        [rational_str(h[(x, y)]) if (x, y) in h else None for x in range(x0, x1 + 1)]
        for y in range(y1, y0 - 1, -1)
    ]
    return HarmonicFunctionModel(box=[x0, y0, x1, y1], values=rows)


def harmonic_from_model(model: HarmonicFunctionModel) -> HarmonicFunction:
    x0, y0, x1, y1 = model.box
    width, height = x1 - x0 + 1, y1 - y0 + 1
    if len(model.values) != height or any(len(row) != width for row in model.values):
        raise InputError(f"Values do not fill the {width}x{height} box {model.box}")
    values = {
        (x0 + i, y1 - j): Fraction(v)
        for j, row in enumerate(model.values)
        for i, v in enumerate(row)
        if v is not None
    }
    return HarmonicFunction(values, (x0, y0, x1, y1))
