import json

import pytest

from src.errors import CertificateError, InvalidPolyformError, PolyformParseError
from src.grid_domain import domain_of, rectangle_polyform, square_polyform
from src.services.polyform_io import (
    load_certificate,
    load_polyform,
    parse_polyform,
    resolve_shorthand,
    write_polyform,
)


def test_parse_skips_comments_and_blanks():
    P = parse_polyform("# one square\n\n0 0 N\n0 0 E\n0 0 S\n0 0 W\n")
    assert P == square_polyform(1)


@pytest.mark.parametrize(
    "text",
    ["0 0\n", "0 0 Q\n", "a 0 N\n", "0 0 N\n0 0 N\n", "# nothing\n"],
)
def test_parse_rejects_bad_lines(text):
    with pytest.raises(PolyformParseError):
        parse_polyform(text)


def test_parse_rejects_disconnected_triangles():
    with pytest.raises(InvalidPolyformError):
        parse_polyform("0 0 N\n5 5 S\n")


def test_written_polyform_loads_back(tmp_path):
    path = tmp_path / "square.txt"
    write_polyform(square_polyform(3), path, comment="side 3")
    assert path.read_text().startswith("# side 3\n")
    assert load_polyform(str(path)) == square_polyform(3)


def test_shorthand():
    assert resolve_shorthand("square:4") == square_polyform(4)
    assert resolve_shorthand("rect:3x2") == rectangle_polyform(3, 2)
    assert resolve_shorthand("plain.txt") is None
    extended = resolve_shorthand("extended:square:3")
    assert len(extended) == len(square_polyform(3)) + 1
    assert domain_of(extended) == domain_of(square_polyform(3))


@pytest.mark.parametrize("ref", ["square:0", "rect:3", "square:x", "missing.txt"])
def test_bad_references(ref):
    with pytest.raises(PolyformParseError):
        load_polyform(ref)


def test_load_certificate_errors(tmp_path):
    with pytest.raises(CertificateError):
        load_certificate(tmp_path / "absent.json")
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"template": "square:2", "placements": []}))
    with pytest.raises(CertificateError):
        load_certificate(path)
