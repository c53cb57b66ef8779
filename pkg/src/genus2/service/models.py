"""Pydantic request/response models for the compute/verify service.

Complex numbers travel as "a+bi" strings on input (shell-friendly, also
accepted by the CLI) and as [re, im] pairs on output.  Surface points
are "torus<1|2>:<complex>" strings.  Every response echoes the resolved
configuration so a run can be reproduced bit for bit.
"""
from __future__ import annotations

import re
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator

from ..elliptic import DomainViolation

_COMPLEX_RE = re.compile(
    r"^\s*(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
    r"(?P<im>(?:[+-]\s*(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*[ij])?\s*$"
)


def parse_complex(text: str) -> complex:
    """Parse 'a+bi' style literals: '1.2', 'i', '-i', '0.3+1.1i', '2-0.5j'."""
    s = str(text).strip().replace(" ", "")
    if not s:
        raise DomainViolation("empty complex literal")
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        pass
    m = re.fullmatch(
        r"(?P<re>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?"
        r"(?P<imsign>[+-])?(?P<im>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?(?P<unit>[ij])?",
        s,
    )
    if not m or (m.group("unit") is None and m.group("im") is not None):
        raise DomainViolation(f"cannot parse complex literal {text!r}")
    re_part = float(m.group("re")) if m.group("re") else 0.0
    if m.group("unit"):
        mag = float(m.group("im")) if m.group("im") else 1.0
        sign = -1.0 if m.group("imsign") == "-" else 1.0
        return complex(re_part, sign * mag)
    return complex(re_part, 0.0)


def parse_point(text: str):
    """Parse 'torus1:0.5+0.2i' into a SurfacePoint."""
    from ..sewing import SurfacePoint

    s = str(text).strip()
    m = re.fullmatch(r"torus([12]):(.+)", s)
    if not m:
        raise DomainViolation(f"surface point must look like 'torus1:0.5+0.2i', got {text!r}")
    return SurfacePoint(int(m.group(1)), parse_complex(m.group(2)))


def c2pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


class ModuliModel(BaseModel):
    tau1: str = "i"
    tau2: str = "i"
    eps: str = "0"

    def resolve(self):
        from ..sewing import validate_moduli

        return validate_moduli(parse_complex(self.tau1), parse_complex(self.tau2),
                               parse_complex(self.eps))


class RunConfigModel(BaseModel):
    moduli: ModuliModel = Field(default_factory=ModuliModel)
    trunc_order: int = 16
    auto_order: bool = True
    q_terms: int = 128
    tail_tol: float = 1e-12
    alpha_nodes: int = 128
    beta_panels: int = 24
    beta_order: int = 16
    circle_nodes: int = 128
    fd_step: float = 1e-4
    fd_levels: int = 1
    level_cap: int = 6
    tolerances: dict[str, float] = Field(default_factory=dict)

    @field_validator("tolerances")
    @classmethod
    def _positive_tols(cls, v):
        if any(t <= 0 for t in v.values()):
            raise ValueError("tolerance overrides must be positive")
        return v

    def series(self):
        from ..elliptic import SeriesConfig

        return SeriesConfig(q_terms=self.q_terms, tail_tol=self.tail_tol)

    def quad(self):
        from ..calculus import QuadratureConfig

        return QuadratureConfig(alpha_nodes=self.alpha_nodes, beta_panels=self.beta_panels,
                                beta_order=self.beta_order, circle_nodes=self.circle_nodes)

    def fd(self):
        from ..calculus import FDConfig

        return FDConfig(step=self.fd_step, richardson_levels=self.fd_levels)

    def echo(self, M: int, sqrt_eps: complex) -> dict:
        data = self.model_dump()
        data["resolved_order"] = M
        data["sqrt_eps_branch"] = c2pair(sqrt_eps)
        return data


class ComputeRequest(BaseModel):
    config: RunConfigModel = Field(default_factory=RunConfigModel)
    # object-specific arguments; unused ones are ignored by each endpoint
    x: Optional[str] = None
    y: Optional[str] = None
    points: list[str] = Field(default_factory=list)
    lam: list[str] = Field(default_factory=lambda: ["0", "0"])
    weight: int = 2
    i: int = 0
    j: int = 1
    form_index: Optional[int] = None


class ValueItem(BaseModel):
    inputs: dict[str, Any]
    value: list[float]


class ComputeResponse(BaseModel):
    object: str
    config: dict[str, Any]
    values: list[ValueItem]


class VerifyRequest(BaseModel):
    config: RunConfigModel = Field(default_factory=RunConfigModel)
    use_standard_grid: bool = True


class ResidualItem(BaseModel):
    name: str
    tolerance: float
    max_residual: Optional[float]
    passed: bool
    n_samples: int
    samples: list[dict[str, Any]]
    error: Optional[str] = None


class VerifyResponse(BaseModel):
    object: str
    config: dict[str, Any]
    residuals: list[ResidualItem]
    passed: bool


class ErrorRecord(BaseModel):
    error: dict[str, Any]
