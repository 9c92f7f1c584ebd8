"""
Command-line front end.

Exit codes: 0 success, 2 bad input, 3 a mathematical invariant failed inside the library,
4 a requested verification came out negative.
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError
from sympy import factorint

from src.config import APP_CONFIG
from src.errors import (
    DomainShapeError,
    InputError,
    InvariantError,
    PolyformParseError,
    VerificationError,
)
from src.grid_domain import Domain, domain_of
from src.harmonic import (
    HarmonicFunction,
    basis_algorithm,
    cyclic_subgroup_from_harmonic,
    h_diamond,
    h_pi,
    h_xy,
    harmonic_dynamics,
    potential_matrix,
)
from src.models import (
    OUTPUT_FORMATS,
    BasisReport,
    BasisStepModel,
    DynamicsFrame,
    DynamicsReport,
    GroupReport,
    IdentityReport,
    MonomorphismReport,
    RunConfig,
    TilingSearchReport,
)
from src.monomorphism import GroupMap, verify_monomorphism
from src.sandpile_core import SandpileGroup, group_decomposition, group_order, is_recurrent
from src.services.polyform_io import load_certificate, load_polyform, write_certificate
from src.services.render import harmonic_to_model, render_pgm, render_text
from src.services.schemas import SCHEMA_DIR, write_schemas
from src.tiling import search_tilings, tiling_from_certificate, tiling_to_certificate, validate_tiling

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_VERIFICATION = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sandpile-tilings",
        description=(
            "Sandpile groups of lattice domains and the monomorphisms induced by DC-tilings. "
            "Polyforms are files in the 'x y d' format or shorthand such as square:4; note that "
            "square:w has side w, so its domain is the (w-1)x(w-1) square."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=OUTPUT_FORMATS, default="text")
    common.add_argument("--out", help="Output file (a directory for 'tile').")
    common.add_argument("--seed", type=int, default=APP_CONFIG.default_seed)
    common.add_argument("--limit", type=int, default=APP_CONFIG.default_limit)
    common.add_argument("--verify", action="store_true", help="Run the command's self-checks.")

    commands = parser.add_subparsers(dest="command", required=True)
    group = commands.add_parser("group", parents=[common], help="Order and invariant factors.")
    group.add_argument("specs", nargs=1, metavar="POLYFORM")
    identity = commands.add_parser("identity", parents=[common], help="Render the identity.")
    identity.add_argument("specs", nargs=1, metavar="POLYFORM")
    basis = commands.add_parser("basis", parents=[common], help="Integer harmonic basis.")
    basis.add_argument("specs", nargs=1, metavar="POLYFORM")
    tile = commands.add_parser("tile", parents=[common], help="DC-tilings of TARGET by TILE.")
    tile.add_argument("specs", nargs=2, metavar=("TILE", "TARGET"))
    mono = commands.add_parser("mono", parents=[common], help="Verify a tiling certificate.")
    mono.add_argument("specs", nargs=1, metavar="CERTIFICATE")
    dynamics = commands.add_parser("dynamics", parents=[common], help="Harmonic sandpile dynamics.")
    dynamics.add_argument("specs", nargs=1, metavar="POLYFORM")
    dynamics.add_argument("--harmonic", required=True, help="xy, pi or diamond:i")
    dynamics.add_argument("--times", nargs="*", default=[], help="Rational times such as 1/3.")
    schemas = commands.add_parser(
        "schemas", parents=[common], help="Write the JSON schemas of the reports to --out."
    )
    schemas.set_defaults(specs=[])
    return parser


def _emit(config: RunConfig, text: str) -> None:
    if config.out:
        Path(config.out).write_text(text)
        logger.info(f"Output written to {config.out}")
    else:
        sys.stdout.write(text)


def _domain(spec: str) -> Domain:
    return domain_of(load_polyform(spec))


def cmd_group(config: RunConfig) -> int:
    spec = config.specs[0]
    domain = _domain(spec)
    order = group_order(domain)
    factors = group_decomposition(domain)
    report = GroupReport(
        spec=spec,
        vertices=len(domain),
        order=str(order),
        invariant_factors=[str(d) for d in factors],
        factorization={str(p): e for p, e in sorted(factorint(order).items())},
    )
    logger.info(f"Sandpile group of {spec} has order {order}")
    if config.format == "json":
        _emit(config, report.model_dump_json(indent=2) + "\n")
    else:
        product = " * ".join(f"{p}^{e}" if e > 1 else p for p, e in report.factorization.items())
        _emit(
            config,
            f"vertices: {report.vertices}\norder: {report.order}\n"
            f"invariant factors: {' '.join(report.invariant_factors)}\n"
            f"factorization: {product or '1'}\n",
        )
    return EXIT_OK


def cmd_identity(config: RunConfig) -> int:
    spec = config.specs[0]
    group = SandpileGroup(_domain(spec))
    e = group.identity()
    verified = None
    if config.verify:
        verified = group.add(e, e) == e and is_recurrent(e.rep)
        if not verified:
            raise VerificationError("Identity is not idempotent and recurrent")
    if config.format == "pgm":
        _emit(config, render_pgm(e.rep))
    elif config.format == "json":
        report = IdentityReport(spec=spec, configuration=e.rep.as_grid(), verified=verified)
        _emit(config, report.model_dump_json(indent=2) + "\n")
    else:
        _emit(config, render_text(e.rep))
    return EXIT_OK


def cmd_basis(config: RunConfig) -> int:
    spec = config.specs[0]
    domain = _domain(spec)
    basis = basis_algorithm(domain)
    potentials = potential_matrix(basis)
    determinant = abs(potentials.determinant)
    order = group_order(domain)
    if determinant != order:
        raise InvariantError(f"Potential determinant {determinant} differs from the group order {order}")
    report = BasisReport(
        spec=spec,
        size=len(basis),
        trace=[
            BasisStepModel(vertex=list(step.vertex), family=step.family.value, index=step.index)
            for step in basis.trace
        ],
        potential_matrix=[[str(e) for e in row] for row in potentials.entries],
        determinant=str(determinant),
        group_order=str(order),
    )
    logger.info(f"Basis of {len(basis)} functions on {spec}, |det| = {determinant}")
    if config.format == "json":
        _emit(config, report.model_dump_json(indent=2) + "\n")
    else:
        lines = [f"basis functions: {report.size}", f"|det|: {report.determinant}"]
        lines += [f"{tuple(s.vertex)} {s.family} {s.index}" for s in report.trace]
        _emit(config, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_tile(config: RunConfig) -> int:
    tile_spec, target_spec = config.specs
    tilings = search_tilings(load_polyform(tile_spec), load_polyform(target_spec), limit=config.limit)
    certificates = [tiling_to_certificate(T, tile_spec, target_spec) for T in tilings]
    logger.info(f"Found {len(tilings)} tilings of {target_spec} by {tile_spec}")
    report = TilingSearchReport(
        template=tile_spec, target=target_spec, count=len(certificates), certificates=certificates
    )
    if config.out:
        directory = Path(config.out)
        directory.mkdir(parents=True, exist_ok=True)
        for k, certificate in enumerate(certificates):
            write_certificate(certificate, directory / f"tiling_{k:03d}.json")
        sys.stdout.write(f"count: {report.count}\n")
    elif config.format == "json":
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    else:
        sys.stdout.write(f"count: {report.count}\n")
        for k, certificate in enumerate(certificates):
            placements = "; ".join(
                f"rot={p.rot} reflect={int(p.reflect)} d=({p.dx},{p.dy}) sign={p.sign:+d}"
                for p in certificate.placements
            )
            sys.stdout.write(f"{k}: {placements}\n")
    return EXIT_OK


def _certificate_polyform(ref: str, certificate_path: Path):
    try:
        return load_polyform(ref)
    except PolyformParseError:
        sibling = certificate_path.parent / ref
        if sibling.is_file():
            return load_polyform(str(sibling))
        raise


def cmd_mono(config: RunConfig) -> int:
    path = Path(config.specs[0])
    certificate = load_certificate(path)
    template = _certificate_polyform(certificate.template, path)
    target = _certificate_polyform(certificate.target, path)
    tiling = tiling_from_certificate(certificate, template, target)

    verdict = validate_tiling(tiling)
    if verdict:
        check = verify_monomorphism(GroupMap.from_paste(tiling, check=False), seed=config.seed)
        report = MonomorphismReport(
            source_order=str(check.source_order),
            target_order=None if check.target_order is None else str(check.target_order),
            image_order=None if check.image_order is None else str(check.image_order),
            injective=check.injective,
            well_defined=check.well_defined,
            method=check.method,
            diagnostics=check.diagnostics,
            tiling=certificate,
        )
    else:
        report = MonomorphismReport(
            source_order=str(group_order(tiling.source_domain)),
            injective=False,
            well_defined=False,
            method="none",
            diagnostics=[f"Invalid tiling: {verdict.detail}"],
            tiling=certificate,
        )

    if config.format == "json":
        _emit(config, report.model_dump_json(indent=2) + "\n")
    else:
        lines = [
            f"well-defined: {report.well_defined}",
            f"injective: {report.injective} ({report.method})",
            f"orders: source {report.source_order}, target {report.target_order}, image {report.image_order}",
        ]
        lines += [f"diagnostic: {d}" for d in report.diagnostics]
        _emit(config, "\n".join(lines) + "\n")
    if not (report.well_defined and report.injective):
        raise VerificationError("; ".join(report.diagnostics) or "Monomorphism check failed")
    return EXIT_OK


def _named_harmonic(name: str, domain: Domain) -> tuple[HarmonicFunction, int]:
    x0, y0, x1, y1 = domain.bounding_box
    side = x1 - x0 + 1
    if name == "xy":
        return h_xy(domain), (side + 1) // 2
    if name == "pi":
        return h_pi(domain), side + 1
    kind, sep, index = name.partition(":")
    if kind == "diamond" and sep and index.isdigit():
        return h_diamond(domain, int(index)), 4
    raise DomainShapeError(f"Unknown harmonic function '{name}', expected xy, pi or diamond:i")


def _parse_time(value: str) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"Time must be a rational such as 1/3, got '{value}'")


def cmd_dynamics(config: RunConfig) -> int:
    spec = config.specs[0]
    domain = _domain(spec)
    group = SandpileGroup(domain)
    h, n = _named_harmonic(config.harmonic, domain)
    _, order = cyclic_subgroup_from_harmonic(h, domain, n, group)
    times = [_parse_time(t) for t in config.times] or [Fraction(k, order) for k in range(order)]

    frames = []
    renders = []
    for t in times:
        element = harmonic_dynamics(h, t, domain, group)
        frames.append(
            DynamicsFrame(
                t=str(t), configuration=element.rep.as_grid(), in_subgroup=(t * order).denominator == 1
            )
        )
        renders.append(render_pgm(element.rep) if config.format == "pgm" else render_text(element.rep))
    logger.info(f"Dynamics of {config.harmonic} on {spec}: {len(frames)} frames, subgroup order {order}")

    if config.format == "json":
        report = DynamicsReport(
            spec=spec,
            harmonic=config.harmonic,
            function=harmonic_to_model(h),
            subgroup_order=order,
            frames=frames,
        )
        _emit(config, report.model_dump_json(indent=2) + "\n")
    elif config.format == "pgm":
        _emit(config, "".join(renders))
    else:
        blocks = [
            f"t={frame.t}{' *' if frame.in_subgroup else ''}\n{render}"
            for frame, render in zip(frames, renders)
        ]
        _emit(config, "\n".join(blocks))
    return EXIT_OK


def cmd_schemas(config: RunConfig) -> int:
    directory = Path(config.out) if config.out else SCHEMA_DIR
    for path in write_schemas(directory):
        sys.stdout.write(f"{path}\n")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "group": cmd_group,
    "identity": cmd_identity,
    "basis": cmd_basis,
    "tile": cmd_tile,
    "mono": cmd_mono,
    "dynamics": cmd_dynamics,
    "schemas": cmd_schemas,
}


def parse_run_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(
        command=args.command,
        specs=args.specs,
        format=args.format,
        out=args.out,
        seed=args.seed,
        limit=args.limit,
        verify=args.verify,
        harmonic=getattr(args, "harmonic", None),
        times=getattr(args, "times", []),
    )


def run(argv: Optional[List[str]] = None) -> int:
    """Parses arguments, runs one command and maps library errors to exit codes."""
    try:
        config = parse_run_config(argv)
    except ValidationError as e:
        logger.error(f"Invalid options: {e}")
        return EXIT_INPUT
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT

    try:
        return COMMANDS[config.command](config)
    except InputError as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except ValidationError as e:
        logger.error(f"Invalid data: {e}")
        return EXIT_INPUT
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        return EXIT_VERIFICATION
    except InvariantError as e:
        logger.error(f"Invariant violated: {e}", exc_info=True)
        return EXIT_INVARIANT
    except Exception as e:
        logger.error(f"Unexpected failure in '{config.command}': {e}", exc_info=True)
        return EXIT_INVARIANT
