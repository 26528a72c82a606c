from datetime import datetime
from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional

from simulation.scenario import Scenario

Mode = Literal["default", "oracle", "lstm", "gru"]


class RunCreate(BaseModel):
    scenario: Optional[Scenario] = None  # built-in default when omitted
    mode: Mode = "default"
    seed: int = Field(1, ge=0)
    model_ref: Optional[str] = None  # model file for lstm/gru modes
    duration: Optional[int] = Field(None, gt=0)  # overrides scenario.duration


class RunOut(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: int
    mode: str
    seed: int
    scenario_digest: str
    duration_ms: int
    mean_cqi: Optional[float] = None
    mean_delay_ms: Optional[float] = None
    mean_ota_delay_ms: Optional[float] = None
    mean_throughput_bps: Optional[float] = None
    freeze_count: int
    freeze_total_ms: float
    ota_completion_ms: Optional[float] = None
    handover_count: int
    created_at: Optional[datetime] = None


class ReportRequest(BaseModel):
    metric: Literal[
        "mean_cqi", "mean_delay_ms", "mean_ota_delay_ms", "mean_throughput_bps", "freeze_count",
        "freeze_total_ms", "ota_completion_ms", "handover_count",
    ] = "mean_delay_ms"
    modes: List[Mode] = Field(default_factory=lambda: ["default", "oracle"], min_length=1)
    scenario_digest: Optional[str] = None  # restrict to one scenario


class ModeSummary(BaseModel):
    mode: str
    runs: int
    mean: float
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


class Comparison(BaseModel):
    mode_a: str
    mode_b: str
    mean_a: float
    mean_b: float
    delta_pct: Optional[float] = None
    f_value: Optional[float] = None
    p_value: Optional[float] = None
    df_between: Optional[int] = None
    df_within: Optional[int] = None


class ReportOut(BaseModel):
    metric: str
    means: List[ModeSummary]
    comparisons: List[Comparison]
