from pathlib import Path

import pytest

from src.grid_domain import Domain, domain_of, square_polyform

DATA_DIR = Path(__file__).parent / "data"


def square(n: int) -> Domain:
    """The N×N square domain, i.e. the domain of the polyform of side N + 1."""
    return domain_of(square_polyform(n + 1))


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def square_3x3() -> Domain:
    return square(3)


@pytest.fixture
def square_5x5() -> Domain:
    return square(5)
