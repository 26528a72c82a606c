from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Annotated, List, Literal, Optional, Tuple, Union
from pathlib import Path

# 3GPP 256QAM CQI table spectral efficiencies (bits/s/Hz), index = CQI
DEFAULT_CQI_EFFICIENCY = [
    0.0, 0.1523, 0.3770, 0.8770, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547, 6.2266, 6.9141, 7.4063,
]


class CellConfig(BaseModel):
    id: int = Field(..., ge=0)
    position: Tuple[float, float]
    tx_power: float = Field(46.0, ge=0.0, le=60.0)  # dBm
    carrier_freq: float = Field(3.5, gt=0.0)  # GHz, n78
    bandwidth: float = Field(100.0, gt=0.0)  # MHz
    height_m: float = Field(25.0, ge=0.0)


class VehicleConfig(BaseModel):
    id: int = Field(..., ge=0)
    route: List[Tuple[float, float]] = Field(..., min_length=1)
    speed: Optional[float] = Field(15.0, gt=0.0)  # m/s; None draws U[14, 16]


class ShadowingConfig(BaseModel):
    enabled: bool = True
    sigma_db: float = Field(4.0, ge=0.0)
    decorrelation_m: float = Field(50.0, gt=0.0)
    resolution_m: float = Field(1.0, gt=0.0)


class HoPolicy(BaseModel):
    hom: float = Field(3.0, ge=0.0)  # Handover Hysteresis Margin, dB
    check_period_ms: int = Field(1000, gt=0)
    pingpong_guard_ms: int = Field(2000, ge=0)
    horizon_n: int = Field(10, ge=1)
    prediction_step_ms: int = Field(1000, gt=0)


class LinkModel(BaseModel):
    cqi_efficiency: List[float] = Field(default_factory=lambda: list(DEFAULT_CQI_EFFICIENCY))
    bandwidth_share: float = Field(5e6, gt=0.0)  # Hz per UE and direction
    interruption_ms: int = Field(50, ge=0)
    propagation_ms: float = Field(1.0, ge=0.0)

    @field_validator("cqi_efficiency")
    @classmethod
    def check_efficiency(cls, table):
        if len(table) != 16:
            raise ValueError("cqi_efficiency needs exactly 16 entries")
        if table[0] != 0.0:
            raise ValueError("efficiency of CQI 0 must be 0")
        if any(b < a for a, b in zip(table, table[1:])):
            raise ValueError("cqi_efficiency must be non-decreasing")
        return table


class StreamConfig(BaseModel):
    kind: Literal["stream"] = "stream"
    frame_period_ms: int = Field(100, gt=0)
    frame_sizes: Optional[List[int]] = None  # bytes per frame, cycled; None = synthetic
    trace_file: Optional[str] = None
    mean_frame_bytes: float = Field(50_000.0, gt=0.0)
    sigma: float = Field(0.5, ge=0.0)  # log-normal shape of synthetic sizes
    prebuffer_frames: int = Field(3, ge=1)
    direction: Literal["uplink"] = "uplink"
    ue_ids: Optional[List[int]] = None


class OtaConfig(BaseModel):
    kind: Literal["ota"] = "ota"
    total_bytes: int = Field(35_600_000, gt=0)
    packet_bytes: int = Field(1024, gt=0)
    interval_ms: int = Field(5, gt=0)
    start_ms: int = Field(0, ge=0)
    direction: Literal["downlink"] = "downlink"
    ue_ids: Optional[List[int]] = None


TrafficConfig = Annotated[Union[StreamConfig, OtaConfig], Field(discriminator="kind")]


class Scenario(BaseModel):
    duration: int = Field(200_000, gt=0)  # ms
    seed: int = Field(1, ge=0, lt=2 ** 64)
    cells: List[CellConfig] = Field(..., min_length=1)
    vehicles: List[VehicleConfig] = Field(..., min_length=1)
    ho_mode: Literal["default", "predictive"] = "default"
    predictor: Literal["oracle", "model"] = "oracle"
    model_ref: Optional[str] = None
    traffic: List[TrafficConfig] = Field(default_factory=list)
    policy: HoPolicy = Field(default_factory=HoPolicy)
    link: LinkModel = Field(default_factory=LinkModel)
    shadowing: ShadowingConfig = Field(default_factory=ShadowingConfig)
    report_period_ms: int = Field(1000, gt=0)
    tick_ms: int = Field(10, gt=0)
    metrics_period_ms: int = Field(100, gt=0)
    noise_figure_db: float = 7.0
    ue_height_m: float = Field(1.5, ge=0.0)
    sdl_capacity: int = Field(256, ge=1)
    trace_file: Optional[str] = None

    @model_validator(mode="after")
    def check_consistency(self):
        cell_ids = [cell.id for cell in self.cells]
        if len(set(cell_ids)) != len(cell_ids):
            raise ValueError("cell ids must be unique")
        ue_ids = [vehicle.id for vehicle in self.vehicles]
        if len(set(ue_ids)) != len(ue_ids):
            raise ValueError("vehicle ids must be unique")
        if 1000 % self.tick_ms != 0:
            raise ValueError("tick_ms must divide 1000")
        if self.metrics_period_ms % self.tick_ms != 0 or self.report_period_ms % self.tick_ms != 0:
            raise ValueError("metrics and report periods must be multiples of tick_ms")
        if self.ho_mode == "predictive" and self.predictor == "model" and not self.model_ref:
            raise ValueError("predictive mode with a model predictor requires model_ref")
        return self


def default_scenario(**overrides) -> Scenario:
    """Linear 3 km road with three n78 gNodeBs 35 m off the road."""
    document = {
        "duration": 200_000,
        "seed": 1,
        "cells": [
            {"id": 1, "position": (500.0, 35.0)},
            {"id": 2, "position": (1500.0, 35.0)},
            {"id": 3, "position": (2500.0, 35.0)},
        ],
        "vehicles": [{"id": 1, "route": [(0.0, 0.0), (3000.0, 0.0)], "speed": 15.0}],
        "traffic": [{"kind": "stream"}, {"kind": "ota"}],
    }
    document.update(overrides)
    return Scenario.model_validate(document)


def load_scenario(path) -> Scenario:
    return Scenario.model_validate_json(Path(path).read_text())
