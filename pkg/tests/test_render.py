from fractions import Fraction

import pytest

from src.errors import InputError, NegativeConfigurationError
from src.grid_domain import Domain
from src.harmonic import HarmonicFunction, h_xy
from src.models import HarmonicFunctionModel
from src.sandpile_core import ChipConfig
from src.services.render import harmonic_from_model, harmonic_to_model, render_pgm, render_text

from tests.conftest import square


def _config(domain, heights):
    return ChipConfig(domain, tuple(heights[v] for v in domain.vertices))


def test_pgm_gray_levels():
    strip = Domain(tuple((x, 0) for x in range(4)))
    c = _config(strip, {(0, 0): 0, (1, 0): 1, (2, 0): 2, (3, 0): 3})
    assert render_pgm(c) == "P2\n4 1\n255\n0 85 170 255\n"


def test_pgm_puts_north_on_top():
    block = Domain(((0, 0), (0, 1), (1, 0), (1, 1)))
    c = _config(block, {(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3})
    assert render_pgm(c) == "P2\n2 2\n255\n170 255\n0 85\n"
    assert render_text(c) == "23\n01\n"


def test_points_outside_the_domain():
    corner = Domain(((0, 0), (0, 1), (1, 0)))
    c = _config(corner, {(0, 0): 3, (0, 1): 3, (1, 0): 3})
    assert render_pgm(c) == "P2\n2 2\n255\n255 0\n255 255\n"
    assert render_text(c) == "3.\n33\n"


def test_unstable_configurations_are_not_rendered(square_3x3):
    with pytest.raises(NegativeConfigurationError):
        render_pgm(ChipConfig.constant(square_3x3, 4))
    with pytest.raises(NegativeConfigurationError):
        render_text(ChipConfig.constant(square_3x3, -1))


def test_harmonic_json_round_trip():
    h = h_xy(square(5))
    model = harmonic_to_model(h)
    assert model.box == [0, 0, 6, 6]
    assert model.values[0] == ["-9", "-6", "-3", "0", "3", "6", "9"]
    assert model.values[-1] == ["9", "6", "3", "0", "-3", "-6", "-9"]
    reread = HarmonicFunctionModel.model_validate_json(model.model_dump_json())
    assert harmonic_from_model(reread) == h


def test_rational_values_and_gaps():
    h = HarmonicFunction({(0, 0): Fraction(1, 3), (1, 1): 2})
    model = harmonic_to_model(h)
    assert model.box == [0, 0, 1, 1]
    assert model.values == [[None, "2"], ["1/3", None]]
    assert harmonic_from_model(model).values == h.values


def test_model_must_fill_its_box():
    with pytest.raises(InputError):
        harmonic_from_model(HarmonicFunctionModel(box=[0, 0, 1, 1], values=[["1", "2"]]))
