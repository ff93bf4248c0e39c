from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, model_validator
from datetime import datetime
from typing import Annotated, Any, Dict, List, Literal, Optional
import math

from config import settings


# Complex scalar type
def parse_complex(value: Any) -> complex:
    """Accept numbers, [re, im] pairs and strings written as "a+bi"."""
    if isinstance(value, bool):
        raise ValueError("booleans are not complex scalars")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("complex pairs must be [re, im]")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        if text.endswith("j"):
            head = text[:-1]
            if head == "" or head[-1] in "+-":
                text = head + "1j"
        try:
            return complex(text)
        except ValueError:
            raise ValueError(f"cannot read {value!r} as a complex number (expected a+bi)")
    raise ValueError(f"unsupported complex literal {value!r}")


def format_complex(value: complex) -> str:
    value = complex(value)
    sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
    return f"{value.real!r}{sign}{abs(value.imag)!r}i"


Complex = Annotated[
    complex,
    PlainValidator(parse_complex),
    PlainSerializer(format_complex, return_type=str),
]


# Run configuration Schemas
class QSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    phi: Complex

    @model_validator(mode="after")
    def check_not_root_of_unity(self):
        from numerics_core import QParams  # numerics_core imports this module

        QParams.from_phi(self.phi)
        return self


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=1)
    chi: List[Complex]
    xi: List[Complex] = []


class RawBoundarySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c00: float
    c01: float
    c00_tilde: float
    c01_tilde: float
    theta: float
    theta_tilde: float


class ChainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=1)
    alpha: Optional[Complex] = None
    alpha_star: Optional[Complex] = None
    theta: Optional[Complex] = None
    raw: Optional[RawBoundarySpec] = None

    @model_validator(mode="after")
    def check_boundary(self):
        if self.N > settings.CHAIN_SITE_CAP:
            raise ValueError(f"N={self.N} exceeds the site cap {settings.CHAIN_SITE_CAP}")
        explicit = (self.alpha, self.alpha_star, self.theta)
        if self.raw is None and any(v is None for v in explicit):
            raise ValueError("give either alpha, alpha_star and theta or a [chain.raw] table")
        return self


class CouplingSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kappa: Complex = 0j
    kappa_star: Complex = 0j
    kappa_plus: Complex = 0j
    kappa_minus: Complex = 0j
    # chain runs derive k± from theta; functional runs must set them
    k_plus: Optional[Complex] = None
    k_minus: Optional[Complex] = None


class ScanSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parameter: Literal[
        "alpha", "alpha_star", "theta", "kappa", "kappa_star", "kappa_plus", "kappa_minus"
    ]
    center: Complex
    step: Complex
    points: int = Field(ge=1)

    @model_validator(mode="after")
    def check_size(self):
        if self.points > settings.SCAN_POINT_CAP:
            raise ValueError(f"scan grid of {self.points} points exceeds {settings.SCAN_POINT_CAP}")
        return self

    def grid(self) -> List[complex]:
        """Point k sits at center + step*(k - points//2); the center is always on the grid."""
        half = self.points // 2
        return [self.center + self.step * (k - half) for k in range(self.points)]


class BetheSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    roots: List[Complex]
    variable: Literal["lambda", "z"] = "lambda"


class Options(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cutoff: int = Field(default=24, ge=4)
    degree: int = Field(default=12, ge=0)
    tolerance: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    samples: int = Field(default=16, ge=1)
    sector_n: Optional[int] = Field(default=None, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_caps(self):
        if self.cutoff > settings.CUTOFF_CAP:
            raise ValueError(f"cutoff {self.cutoff} exceeds the cap {settings.CUTOFF_CAP}")
        if self.degree > settings.DEGREE_CAP:
            raise ValueError(f"degree {self.degree} exceeds the cap {settings.DEGREE_CAP}")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    representation: Literal["functional", "chain"]
    q: QSpec
    family: Optional[FamilySpec] = None
    chain: Optional[ChainSpec] = None
    couplings: CouplingSpec = CouplingSpec()
    options: Options = Options()
    scan: Optional[ScanSpec] = None
    bethe: Optional[BetheSpec] = None

    @model_validator(mode="after")
    def check_representation(self):
        if self.representation == "functional" and self.family is None:
            raise ValueError("functional runs need a [family] table")
        if self.representation == "chain" and self.chain is None:
            raise ValueError("chain runs need a [chain] table")
        return self


# Result file Schemas
class CheckRecord(BaseModel):
    name: str
    max_abs: float
    tolerance: float
    passed: bool
    soft: bool = False
    note: Optional[str] = None


class Provenance(BaseModel):
    timestamp: datetime
    seed: int
    tool_version: str = settings.APP_VERSION


class ResultFile(BaseModel):
    schema_version: str = settings.RESULT_SCHEMA_VERSION
    command: str
    status: Literal["pass", "fail", "error"]
    config: RunConfig
    checks: List[CheckRecord] = []
    payload: Dict[str, Any] = {}
    provenance: Provenance
