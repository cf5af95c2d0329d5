"""Pydantic schemas for run configs and the documents phasecert writes."""

from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SUBCOMMANDS = ("certify", "expand", "check-lemmas", "kernel-scan", "vdc-scan")

Subcommand = Literal["certify", "expand", "check-lemmas", "kernel-scan", "vdc-scan"]
PhaseSpec = Union[str, int, float, Dict[str, Union[str, int, float]]]


def _rational_text(value: Any) -> str:
    try:
        return str(Fraction(str(value)))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{value!r} is not a rational number") from exc


class FamilyConfig(BaseModel):
    """The ``family`` section: dimension, form and phases keyed by degree."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=1, description="Number of variables")
    theta: Union[List[int], List[List[Union[int, float, str]]]] = Field(
        ..., description="Signs of Q, or a symmetric rational matrix"
    )
    d: Optional[int] = Field(None, ge=1, description="Maximal degree; defaults to the largest phase degree")
    phases: Dict[int, PhaseSpec] = Field(..., description="p_j by degree j")

    @model_validator(mode="after")
    def _check_shape(self) -> "FamilyConfig":
        if self.theta and isinstance(self.theta[0], list):
            if len(self.theta) != self.n or any(len(row) != self.n for row in self.theta):
                raise ValueError(f"theta must be an {self.n}x{self.n} matrix")
        elif len(self.theta) != self.n:
            raise ValueError(f"theta has {len(self.theta)} entries, expected n = {self.n}")
        return self

    @property
    def is_matrix(self) -> bool:
        return bool(self.theta) and isinstance(self.theta[0], list)


class EnsembleSizes(BaseModel):
    model_config = ConfigDict(extra="forbid")

    decomposition: int = Field(25, ge=1)
    propB: int = Field(50, ge=1)
    propD: int = Field(50, ge=1)
    xi_identity: int = Field(20, ge=1)
    abc_closed_forms: int = Field(10, ge=1)
    abc_corollary: int = Field(10, ge=1)
    cramer: int = Field(10, ge=1)
    sylvester: int = Field(20, ge=1)


class RunConfig(BaseModel):
    """The ``run`` section. Scan and vdc parameters are flat keys."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Optional[Subcommand] = None
    seed: int = 0
    sector: Union[int, Literal["all"]] = "all"
    nu: Dict[int, str] = Field(default_factory=dict, description="Rational nu_j as strings")
    r: Optional[str] = Field(None, description="Stopping value; defaults to |nu|")
    gate: bool = True

    r_grid: List[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0, 10000.0])
    points: int = Field(1000, ge=1)
    mu_samples: int = Field(10, ge=1)
    eps1: float = Field(0.2, gt=0)
    eps2: float = Field(0.6, gt=0)
    c0_const: Union[Literal["auto"], float] = "auto"
    tau_max: float = Field(0.95, gt=0, lt=1)
    margin: float = Field(0.02, ge=0)
    tolerance: float = Field(1e-3, gt=0)
    max_depth: int = Field(8, ge=1)
    base_nodes: int = Field(16, ge=2)
    workers: Optional[int] = Field(None, ge=1)

    vdc_phase: str = "x1^2"
    vdc_nvars: int = Field(1, ge=1)
    vdc_box: Optional[List[Tuple[float, float]]] = None
    lambdas: List[float] = Field(default_factory=lambda: [100.0, 1000.0, 10000.0])
    rho: float = Field(0.05, gt=0)
    grid: Optional[int] = Field(None, ge=2)

    ensembles: EnsembleSizes = Field(default_factory=EnsembleSizes)

    @field_validator("nu", mode="before")
    @classmethod
    def _nu_as_text(cls, value: Any) -> Dict[int, str]:
        if value is None:
            return {}
        return {int(j): _rational_text(v) for j, v in dict(value).items()}

    @field_validator("r", mode="before")
    @classmethod
    def _r_as_text(cls, value: Any) -> Optional[str]:
        return None if value is None else _rational_text(value)

    @field_validator("sector")
    @classmethod
    def _sector_positive(cls, value: Union[int, str]) -> Union[int, str]:
        if isinstance(value, int) and value < 1:
            raise ValueError("sector is 1-based")
        return value

    @field_validator("r_grid")
    @classmethod
    def _r_grid_at_least_one(cls, value: List[float]) -> List[float]:
        if not value or any(r < 1 for r in value):
            raise ValueError("r_grid needs values r >= 1")
        return sorted(value)


class KernelScanConfig(BaseModel):
    """Everything :func:`phasecert.oscint.kernel_decay_scan` reads."""

    sector: int = Field(1, ge=1)
    nu_direction: Dict[int, float]
    r_grid: List[float]
    points: int = Field(..., ge=1)
    mu_samples: int = Field(..., ge=1)
    eps1: float = 0.2
    eps2: float = 0.6
    c0_const: Union[Literal["auto"], float] = "auto"
    tau_max: float = 0.95
    margin: float = 0.02

    @classmethod
    def from_run(cls, run: RunConfig, sector: int) -> "KernelScanConfig":
        return cls(
            sector=sector,
            nu_direction={j: float(Fraction(v)) for j, v in run.nu.items()},
            r_grid=run.r_grid,
            points=run.points,
            mu_samples=run.mu_samples,
            eps1=run.eps1,
            eps2=run.eps2,
            c0_const=run.c0_const,
            tau_max=run.tau_max,
            margin=run.margin,
        )


class RecheckEntry(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class CertificateDocument(BaseModel):
    """Serialized certificate for one sector."""

    version: str
    config_sha256: str
    family_sha256: str
    family: str
    sector: int = Field(..., description="1-based distinguished coordinate l")
    case: str
    m0: int
    r: str
    nu: Dict[str, str]
    dstar: Dict[str, str] = Field(..., description="gamma(j) for every column j")
    trace: List[Dict[str, Any]] = Field(default_factory=list)
    gamma: List[int]
    d0: int
    s0: int
    s1: int
    W_parts: Dict[str, str]
    W: str
    W_norm: float
    witness: List[str]
    witness_value: str
    det_bstar: str
    checks: List[RecheckEntry]
    passed: bool


class LemmaEntry(BaseModel):
    name: str
    instances: int
    failures: int
    passed: bool
    detail: List[str] = Field(default_factory=list)


class LemmaReport(BaseModel):
    version: str
    seed: int
    config_sha256: Optional[str] = None
    results: List[LemmaEntry]
    passed: bool


class Diagnostic(BaseModel):
    error_type: str
    message: str
    severity: str
    description: str
    suggestion: str
    context: Dict[str, Any] = Field(default_factory=dict)
    exit_code: int
