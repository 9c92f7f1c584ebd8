import json

import jsonschema
import pytest

from src.cli import EXIT_INPUT, EXIT_OK, EXIT_VERIFICATION, run
from src.models import TilingCertificate
from src.services.schemas import REPORT_MODELS, load_schema, report_schema


def _json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize(
    "spec, order, factors",
    [
        ("square:2", "4", ["4"]),
        ("square:4", "100352", None),
        ("square:6", "32565539635200", None),
    ],
)
def test_group(capsys, spec, order, factors):
    assert run(["group", spec, "--format", "json"]) == EXIT_OK
    report = _json(capsys)
    assert report["order"] == order
    if factors is not None:
        assert report["invariant_factors"] == factors


def test_group_factorization(capsys):
    assert run(["group", "square:4", "--format", "json"]) == EXIT_OK
    assert _json(capsys)["factorization"] == {"2": 11, "7": 2}


def test_group_text(capsys):
    assert run(["group", "square:2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "order: 4" in out


def test_identity_text(capsys):
    assert run(["identity", "square:2"]) == EXIT_OK
    assert capsys.readouterr().out == "0\n"


def test_identity_pgm_matches_golden(capsys, data_dir):
    assert run(["identity", "square:4", "--format", "pgm"]) == EXIT_OK
    assert capsys.readouterr().out == (data_dir / "identity_3x3.pgm").read_text()


def test_identity_verify_json(capsys):
    assert run(["identity", "square:4", "--verify", "--format", "json"]) == EXIT_OK
    report = _json(capsys)
    assert report["verified"] is True
    assert report["configuration"] == [[2, 1, 2], [1, 0, 1], [2, 1, 2]]


def test_identity_to_file(tmp_path, data_dir):
    out = tmp_path / "identity.pgm"
    assert run(["identity", "square:4", "--format", "pgm", "--out", str(out)]) == EXIT_OK
    assert out.read_text() == (data_dir / "identity_3x3.pgm").read_text()


@pytest.mark.parametrize(
    "spec, size, determinant",
    [
        ("square:2", 1, "4"),
        ("square:3", 4, "192"),
        ("square:4", 8, "100352"),
        ("square:5", 12, None),
        ("square:6", 16, "32565539635200"),
        pytest.param("square:7", 20, None, marks=pytest.mark.slow),
    ],
)
def test_basis(capsys, spec, size, determinant):
    assert run(["basis", spec, "--format", "json"]) == EXIT_OK
    report = _json(capsys)
    assert report["size"] == size
    assert report["determinant"] == report["group_order"]
    if determinant is not None:
        assert report["determinant"] == determinant


def test_tile_counts(capsys):
    assert run(["tile", "square:3", "square:3"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("count: 8\n")
    assert run(["tile", "square:3", "extended:square:3"]) == EXIT_OK
    assert capsys.readouterr().out == "count: 0\n"


def test_tile_then_mono(tmp_path, capsys):
    assert run(["tile", "square:2", "square:4", "--limit", "1", "--out", str(tmp_path)]) == EXIT_OK
    certificate = tmp_path / "tiling_000.json"
    assert certificate.is_file()
    capsys.readouterr()
    assert run(["mono", str(certificate), "--format", "json"]) == EXIT_OK
    report = _json(capsys)
    assert report["injective"] and report["well_defined"]
    assert report["image_order"] == report["source_order"] == "4"


def test_mono_identity_certificate(tmp_path, capsys):
    certificate = TilingCertificate.model_validate(
        {
            "template": "square:4",
            "target": "square:4",
            "placements": [{"rot": 0, "reflect": False, "dx": 0, "dy": 0, "sign": 1}],
        }
    )
    path = tmp_path / "identity.json"
    path.write_text(certificate.model_dump_json())
    assert run(["mono", str(path), "--format", "json"]) == EXIT_OK
    report = _json(capsys)
    assert report["image_order"] == "100352"


def test_mono_corrupted_certificate(tmp_path, capsys):
    assert run(["tile", "square:2", "square:4", "--limit", "1", "--out", str(tmp_path)]) == EXIT_OK
    path = tmp_path / "tiling_000.json"
    data = json.loads(path.read_text())
    data["placements"][1]["dx"] += 1
    path.write_text(json.dumps(data))
    capsys.readouterr()
    assert run(["mono", str(path), "--format", "json"]) == EXIT_VERIFICATION
    report = _json(capsys)
    assert not report["injective"]
    assert report["diagnostics"]


def test_mono_polyform_file_reference(tmp_path, capsys):
    (tmp_path / "small.txt").write_text(
        "# unit square\n0 0 N\n0 0 E\n0 0 S\n0 0 W\n1 0 N\n1 0 E\n1 0 S\n1 0 W\n"
        "0 1 N\n0 1 E\n0 1 S\n0 1 W\n1 1 N\n1 1 E\n1 1 S\n1 1 W\n"
    )
    path = tmp_path / "cert.json"
    path.write_text(
        json.dumps(
            {
                "template": "small.txt",
                "target": "small.txt",
                "placements": [{"rot": 1, "reflect": False, "dx": 2, "dy": 0, "sign": 1}],
            }
        )
    )
    assert run(["mono", str(path)]) == EXIT_OK
    assert "injective: True" in capsys.readouterr().out


def test_dynamics_xy(capsys):
    assert run(
        ["dynamics", "square:6", "--harmonic", "xy", "--times", "0", "1/3", "2/3", "--format", "json"]
    ) == EXIT_OK
    report = _json(capsys)
    assert report["subgroup_order"] == 3
    frames = report["frames"]
    assert all(f["in_subgroup"] for f in frames)
    assert len({json.dumps(f["configuration"]) for f in frames}) == 3


def test_dynamics_identity_at_zero(capsys):
    assert run(["identity", "square:6", "--format", "json"]) == EXIT_OK
    identity = _json(capsys)["configuration"]
    assert run(["dynamics", "square:6", "--harmonic", "xy", "--times", "0", "--format", "json"]) == EXIT_OK
    assert _json(capsys)["frames"][0]["configuration"] == identity


def test_dynamics_is_periodic(capsys):
    assert run(["dynamics", "square:6", "--harmonic", "xy", "--times", "1/5", "6/5", "--format", "json"]) == EXIT_OK
    frames = _json(capsys)["frames"]
    assert frames[0]["configuration"] == frames[1]["configuration"]
    assert not frames[0]["in_subgroup"]


@pytest.mark.parametrize(
    "argv",
    [
        ["group", "square:0"],
        ["group", "nonsense.txt"],
        ["group", "square:4", "--format", "pgm"],
        ["tile", "square:3", "square:3", "--limit", "0"],
        ["dynamics", "square:6", "--harmonic", "cosine"],
        ["dynamics", "square:6", "--harmonic", "xy", "--times", "one/third"],
        ["dynamics", "square:5", "--harmonic", "xy"],
        ["frobnicate"],
    ],
)
def test_bad_input_exits_2(argv):
    assert run(argv) == EXIT_INPUT


def _identity_certificate(tmp_path):
    path = tmp_path / "identity.json"
    path.write_text(
        json.dumps(
            {
                "template": "square:3",
                "target": "square:3",
                "placements": [{"rot": 0, "reflect": False, "dx": 0, "dy": 0, "sign": 1}],
            }
        )
    )
    return str(path)


@pytest.mark.parametrize(
    "command, args",
    [
        ("group", ["square:4"]),
        ("identity", ["square:4", "--verify"]),
        ("basis", ["square:4"]),
        ("tile", ["square:2", "square:4", "--limit", "2"]),
        ("mono", None),
        ("dynamics", ["square:4", "--harmonic", "xy"]),
    ],
)
def test_json_output_validates_against_shipped_schema(tmp_path, capsys, command, args):
    if args is None:
        args = [_identity_certificate(tmp_path)]
    assert run([command, *args, "--format", "json"]) == EXIT_OK
    jsonschema.validate(_json(capsys), load_schema(command))


@pytest.mark.parametrize("command", list(REPORT_MODELS))
def test_shipped_schemas_follow_models(command):
    shipped, live = load_schema(command), report_schema(command)
    assert shipped["title"] == live["title"]
    assert list(shipped["properties"]) == list(live["properties"])
    assert set(shipped.get("required", [])) == set(live.get("required", []))
    assert set(shipped.get("$defs", {})) == set(live.get("$defs", {}))


def test_schemas_command_writes_model_schemas(tmp_path, capsys):
    assert run(["schemas", "--out", str(tmp_path)]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == len(REPORT_MODELS)
    for command in REPORT_MODELS:
        written = json.loads((tmp_path / f"{command}.schema.json").read_text())
        assert written == report_schema(command)


def test_dynamics_reports_function_over_its_box(capsys):
    assert run(["dynamics", "square:4", "--harmonic", "xy", "--times", "0", "--format", "json"]) == EXIT_OK
    function = _json(capsys)["function"]
    assert function["box"] == [0, 0, 4, 4]
    assert function["values"][0] == ["-4", "-2", "0", "2", "4"]
    assert function["values"][2] == ["0"] * 5
