"""Pydantic schemas for body descriptions, run configuration and JSON reports."""

import os
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationInfo, field_validator


# Body descriptions
class DiskSpec(BaseModel):
    """Euclidean disk centered at the origin."""
    kind: Literal["disk"]
    radius: float = Field(1.0, gt=0)


class EllipseSpec(BaseModel):
    """Ellipse with semi-axes a (along x) and b (along y)."""
    kind: Literal["ellipse"]
    a: float = Field(..., gt=0)
    b: float = Field(..., gt=0)


class FourierSpec(BaseModel):
    """Support function a0 + sum(cos[k] cos kθ + sin[k] sin kθ)."""
    kind: Literal["fourier"]
    a0: float
    cos: List[float] = Field(default_factory=list)
    sin: List[float] = Field(default_factory=list)


BodySpec = Annotated[Union[DiskSpec, EllipseSpec, FourierSpec], Field(discriminator="kind")]
body_spec_adapter = TypeAdapter(BodySpec)


def parse_body_spec(text: str):
    """Validate a JSON body description."""
    return body_spec_adapter.validate_json(text)


class RunConfig(BaseModel):
    """Everything a command needs besides its subcommand name."""
    body: BodySpec
    field_expr: Optional[str] = None
    field_csv: Optional[str] = None
    f_expr: Optional[str] = None
    step: float = Field(1e-3, gt=0)
    tol: Optional[float] = Field(None, gt=0)
    cells: int = Field(16, ge=1)
    order: int = Field(8, ge=1, le=64)
    seed: int = 0
    curves: int = Field(64, ge=8)
    samples: int = Field(1024, ge=64)
    out: Optional[str] = None

    @field_validator("out")
    @classmethod
    def validate_out(cls, v):
        """Output files must land in an existing, writable directory."""
        if v is None:
            return v
        directory = os.path.dirname(os.path.abspath(v))
        if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
            raise ValueError(f"output directory {directory} is not writable")
        return v

    @field_validator("field_csv")
    @classmethod
    def validate_field_source(cls, v, info: ValidationInfo):
        """Expression and CSV field sources are exclusive."""
        if v is not None and info.data.get("field_expr") is not None:
            raise ValueError("give either an expression or a CSV field, not both")
        return v


# Reports
class BodyReport(BaseModel):
    label: str
    a0: float
    harmonics: int
    rho_min: float
    h_min: float
    area: float
    perimeter: float
    F_range: List[float]

    model_config = ConfigDict(from_attributes=True)


class WulffReport(BaseModel):
    body: str
    n_curves: int
    n_samples: int
    period: float
    area: float
    apex: List[float]
    apex_gap: float
    max_h_k_gap: float
    max_horizontality_residual: float
    vertices: int
    faces: int


class AreaReport(BaseModel):
    body: str
    field: str
    area: float
    cells: int
    order: int


class VariationReport(BaseModel):
    body: str
    field: str
    first_variation: float
    volume_variation: float
    h0_estimate: Optional[float] = None
    finite_difference: Optional[float] = None
    step: Optional[float] = None
    effective_step: Optional[float] = None


class CriticalityReport(BaseModel):
    body: str
    field: str
    tests: int
    residuals: List[float]
    max_residual: float
    tolerance: float
    passed: bool


class LeafReport(BaseModel):
    a: float
    b: float
    samples: int
    method: str
    exited: bool
    error_estimate: float
    ode_residual: float
    horizontality_residual: float


class FamilyReport(BaseModel):
    leaves: int
    samples: int
    min_jacobian: float
    max_jacobian: float


class SynthesisReport(BaseModel):
    leaves: int
    shape: List[int]
    max_residual: float
    tolerance: float
    passed: bool
    h0_estimate: Optional[float] = None


class RegularityReport(BaseModel):
    samples: int
    quotients: List[float]
    ratios: List[float]
    verdict: Literal["C2_CONSISTENT", "C2_VIOLATION", "INCONCLUSIVE"]


class CurvatureReport(BaseModel):
    max_gap_hd: float
    max_gap_hk: float
    n_samples: int
    body: str
    tolerances: Dict[str, float]


class IdentityReport(BaseModel):
    body: str
    dpi_kernel_gap: float
    dpi_eigen_gap: float
    dpi_symmetry_gap: float
    dpi_finite_difference_gap: float
    ratio: CurvatureReport
    apex_gap: float
    max_h_k_gap: float
    tolerances: Dict[str, float]
    passed: bool
