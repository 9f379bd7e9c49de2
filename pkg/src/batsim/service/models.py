"""Request and response schemas of the simulation service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, model_validator


class ScenarioSource(BaseModel):
    """A scenario document, either inline text or a shipped preset name."""

    scenario_text: Optional[str] = None
    preset: Optional[str] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.scenario_text is None) == (self.preset is None):
            raise ValueError("provide exactly one of scenario_text or preset")
        return self


class RunRequest(ScenarioSource):
    variant: Optional[str] = Field(None, description="run a single table row")
    replicates: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    threads: Optional[int] = Field(None, ge=1)


class MetricsModel(BaseModel):
    pfdr: Optional[float]
    fdr: float
    type1_a: Optional[float]
    type1_b: Optional[float]
    power: Optional[float]
    bias: float
    mse: float
    coverage_one_sided: float
    coverage_symmetric: float
    mean_sample_size: float
    n_reject: int
    n_h0: int
    n_h1: int
    n_replicates: int
    mc_se: dict


class RowModel(BaseModel):
    label: str
    interims: bool
    metrics: MetricsModel


class RunResponse(BaseModel):
    name: str
    rows: list[RowModel]


class CalibrateRequest(ScenarioSource):
    variant: Optional[str] = Field(
        None, description="defaults to the variant whose user prior matches the generator")
    target_pfdr: float = Field(0.05, gt=0.0, lt=1.0)
    replicates: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    grid_step: Optional[float] = Field(None, gt=0.0, lt=0.5)
    threads: Optional[int] = Field(None, ge=1)


class CalibrateResponse(BaseModel):
    variant: str
    cutoff: float
    achieved_pfdr: float
    mc_se: float
    band_lower: float
    band_upper: float
    grid_step: float
    n_reject: int
    n_replicates: int


class PropertiesRequest(BaseModel):
    suite: str
    scale: str = Field("full", pattern="^(full|smoke)$")
    threads: Optional[int] = Field(None, ge=1)


class CheckModel(BaseModel):
    name: str
    passed: bool
    observed: float
    bound: str
    detail: str = ""


class PropertiesResponse(BaseModel):
    suite: str
    passed: bool
    checks: list[CheckModel]


class PresetInfo(BaseModel):
    name: str
    description: str


class PresetsResponse(BaseModel):
    presets: list[PresetInfo]
