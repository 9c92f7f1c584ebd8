from pydantic import BaseModel, Field, field_validator
from typing import List, Literal, Optional, Union


OUTPUT_FORMATS = ("text", "json", "pgm")


class Verdict(BaseModel):
    """Outcome of a verifier: a negative verdict is an answer, not an exception."""

    holds: bool
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds


class RunConfig(BaseModel):
    """Options of one CLI invocation, validated before any work starts."""

    command: Literal["group", "identity", "basis", "tile", "mono", "dynamics", "schemas"]
    specs: List[str] = Field(
        default_factory=list,
        description="Polyform specs: file paths or generator shorthand such as 'square:4'.",
    )
    format: Literal["text", "json", "pgm"] = Field(
        "text", description="Output format of the command."
    )
    out: Optional[str] = Field(None, description="Output file (or directory for 'tile').")
    seed: int = Field(0, description="Seed of sampled property checks.")
    limit: int = Field(100, ge=1, description="Cap on search results.")
    verify: bool = Field(False, description="Run the optional self-checks of the command.")
    harmonic: Optional[str] = Field(
        None, description="Named harmonic function for 'dynamics': xy, pi or diamond:i."
    )
    times: List[str] = Field(
        default_factory=list, description="Rational times t for 'dynamics', e.g. '1/3'."
    )

    @field_validator("format")
    @classmethod
    def pgm_only_for_renders(cls, value: str, info) -> str:
        command = info.data.get("command")
        if value == "pgm" and command not in ("identity", "dynamics"):
            raise ValueError(f"PGM output is only available for renders, not '{command}'")
        return value


class PlacementModel(BaseModel):
    rot: int = Field(ge=0, le=3, description="Quarter turns applied after the reflection.")
    reflect: bool = Field(description="Reflect y -> -y before rotating.")
    dx: Union[int, float] = Field(description="Translation along x.")
    dy: Union[int, float] = Field(description="Translation along y.")
    sign: Literal[1, -1] = Field(description="-1 iff the placement involves a reflection.")


class TilingCertificate(BaseModel):
    """A DC-tiling written to disk; accepted back by 'mono'."""

    template: str = Field(description="Polyform file reference or generator shorthand.")
    target: str = Field(description="Polyform file reference or generator shorthand.")
    placements: List[PlacementModel]


class GroupReport(BaseModel):
    spec: str
    vertices: int
    order: str = Field(description="Group order as a decimal string.")
    invariant_factors: List[str]
    factorization: dict[str, int] = Field(description="Prime -> exponent of the order.")


class BasisStepModel(BaseModel):
    vertex: List[int]
    family: str = Field(description="Diagonal family, one of '+>=', '+<=', '->=', '-<='.")
    index: int


class BasisReport(BaseModel):
    spec: str
    size: int
    trace: List[BasisStepModel]
    potential_matrix: List[List[str]]
    determinant: str
    group_order: str


class HarmonicFunctionModel(BaseModel):
    """Values over a box, one row per y from north to south; rationals as 'p/q' strings."""

    box: List[int] = Field(min_length=4, max_length=4, description="[x0, y0, x1, y1]")
    values: List[List[Optional[str]]] = Field(
        description="Row-major from the northern row; null where the function is undefined."
    )


class MonomorphismReport(BaseModel):
    source_order: str
    target_order: Optional[str] = Field(
        None, description="Target group order; None when the target is too large for a determinant."
    )
    image_order: Optional[str] = Field(
        None, description="Order of the image subgroup; None when it was not computed."
    )
    injective: bool
    well_defined: bool
    method: Literal["snf", "socle", "none"]
    diagnostics: List[str] = Field(default_factory=list)
    tiling: TilingCertificate


class DynamicsFrame(BaseModel):
    t: str
    configuration: List[List[Optional[int]]] = Field(
        description="Rows from north to south; null outside the domain."
    )
    in_subgroup: bool = Field(description="True when t is a multiple of 1/n.")


class DynamicsReport(BaseModel):
    spec: str
    harmonic: str
    function: HarmonicFunctionModel = Field(description="Values of the harmonic function on its box.")
    subgroup_order: int
    frames: List[DynamicsFrame]


class IdentityReport(BaseModel):
    spec: str
    configuration: List[List[Optional[int]]] = Field(
        description="Rows from north to south; null outside the domain."
    )
    verified: Optional[bool] = Field(
        None, description="Idempotence and recurrence check; None when not requested."
    )


class TilingSearchReport(BaseModel):
    template: str
    target: str
    count: int
    certificates: List[TilingCertificate]
