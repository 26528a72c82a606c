"""
Radio environment: mobility along polyline routes, UMa-LOS path loss,
spatially correlated log-normal shadowing, RSRP/SINR/CQI and measurement
reports. Everything here is a pure function of (scenario, seed, time).
"""
import bisect
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from simulation.core import SimTime, rng_stream
from simulation.scenario import CellConfig, Scenario, ShadowingConfig

logger = logging.getLogger(__name__)

CQI_SINR_THRESHOLDS = (
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
)
THERMAL_NOISE_DBM_HZ = -174.0
SPEED_RANGE = (14.0, 16.0)


def path_loss(distance_3d: float, freq: float) -> float:
    """UMa LOS simplified: 28 + 22 log10(d) + 20 log10(f_GHz). d is clamped to 1 m."""
    d = max(distance_3d, 1.0)
    return 28.0 + 22.0 * math.log10(d) + 20.0 * math.log10(freq)


def rsrp(cell: CellConfig, ue_pos: Sequence[float], shadowing: float = 0.0, ue_height: float = 1.5) -> float:
    dx = ue_pos[0] - cell.position[0]
    dy = ue_pos[1] - cell.position[1]
    dz = cell.height_m - ue_height
    distance = math.sqrt(dx * dx + dy * dy + dz * dz)
    return cell.tx_power - path_loss(distance, cell.carrier_freq) - shadowing


def noise_floor(bandwidth_mhz: float, noise_figure_db: float = 7.0) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


def cqi_from_sinr(sinr: float) -> int:
    return bisect.bisect_right(CQI_SINR_THRESHOLDS, sinr)


def dbm_to_mw(value: float) -> float:
    return 10.0 ** (value / 10.0)


@dataclass(frozen=True)
class Route:
    points: Tuple[Tuple[float, float], ...]
    cumulative: Tuple[float, ...]

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "Route":
        pts = tuple((float(x), float(y)) for x, y in points)
        cumulative = [0.0]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            cumulative.append(cumulative[-1] + math.hypot(x1 - x0, y1 - y0))
        return cls(points=pts, cumulative=tuple(cumulative))

    @property
    def length(self) -> float:
        return self.cumulative[-1]

    def point_at(self, s: float) -> Tuple[float, float]:
        if len(self.points) == 1 or s <= 0.0:
            return self.points[0]
        if s >= self.length:
            return self.points[-1]
        i = bisect.bisect_right(self.cumulative, s) - 1
        seg = self.cumulative[i + 1] - self.cumulative[i]
        frac = (s - self.cumulative[i]) / seg if seg > 0 else 0.0
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return (x0 + frac * (x1 - x0), y0 + frac * (y1 - y0))


@dataclass(frozen=True)
class VehicleState:
    id: int
    route: Route
    speed: float  # m/s
    position: Tuple[float, float]
    serving_cell: Optional[int] = None
    travelled: float = 0.0  # arc length along route, m


@dataclass(frozen=True)
class MeasurementReport:
    ue: int
    t: SimTime
    serving: int
    entries: Tuple[Tuple[int, float], ...]  # (cell, rsrp dBm) sorted by cell
    sinr: float
    cqi: int

    def rsrp_of(self, cell: int) -> float:
        for cell_id, value in self.entries:
            if cell_id == cell:
                return value
        raise KeyError(cell)

    @property
    def serving_rsrp(self) -> float:
        return self.rsrp_of(self.serving)

    def strongest_neighbor(self) -> Optional[Tuple[int, float]]:
        best = None
        for cell_id, value in self.entries:
            if cell_id == self.serving:
                continue
            if best is None or value > best[1]:
                best = (cell_id, value)
        return best


def step_mobility(state: VehicleState, dt: SimTime) -> VehicleState:
    """Advance along the route by speed*dt; the vehicle stops at the route end."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    travelled = min(state.travelled + state.speed * dt / 1000.0, state.route.length)
    return replace(state, travelled=travelled, position=state.route.point_at(travelled))


def make_report(
    ue: VehicleState,
    cells: Sequence[CellConfig],
    t: SimTime,
    shadowing: Optional[Mapping[int, float]] = None,
    noise_figure_db: float = 7.0,
    ue_height: float = 1.5,
) -> MeasurementReport:
    if not cells:
        raise ValueError("at least one cell is required")
    shadowing = shadowing or {}
    entries = tuple(sorted(
        (cell.id, rsrp(cell, ue.position, shadowing.get(cell.id, 0.0), ue_height)) for cell in cells
    ))
    serving = ue.serving_cell
    if serving is None:
        serving = max(entries, key=lambda entry: (entry[1], -entry[0]))[0]
    serving_cell = next(cell for cell in cells if cell.id == serving)
    signal = 0.0
    interference = 0.0
    for cell_id, value in entries:
        if cell_id == serving:
            signal = dbm_to_mw(value)
        else:
            interference += dbm_to_mw(value)
    noise = dbm_to_mw(noise_floor(serving_cell.bandwidth, noise_figure_db))
    sinr = 10.0 * math.log10(signal / (interference + noise))
    return MeasurementReport(ue=ue.id, t=t, serving=serving, entries=entries, sinr=sinr, cqi=cqi_from_sinr(sinr))


class ShadowingField:
    """
    Log-normal shadowing along a route: AR(1) samples on a regular arc-length
    grid give autocovariance sigma^2 * exp(-d / decorrelation).
    """

    def __init__(self, length: float, config: ShadowingConfig, rng: np.random.Generator):
        self.resolution = config.resolution_m
        count = int(math.ceil(length / self.resolution)) + 2
        if not config.enabled or config.sigma_db == 0.0:
            self.samples = np.zeros(count)
            return
        rho = math.exp(-self.resolution / config.decorrelation_m)
        innovations = rng.standard_normal(count)
        samples = np.empty(count)
        samples[0] = config.sigma_db * innovations[0]
        scale = config.sigma_db * math.sqrt(1.0 - rho * rho)
        for i in range(1, count):
            samples[i] = rho * samples[i - 1] + scale * innovations[i]
        self.samples = samples

    def at(self, s: float) -> float:
        position = max(s, 0.0) / self.resolution
        i = min(int(position), len(self.samples) - 2)
        frac = position - i
        return float(self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac)


def load_mobility_trace(path) -> Dict[int, Tuple[List[Tuple[float, float]], float]]:
    """Read a `t_ms,ue_id,x_m,y_m` trace into per-UE (route, mean speed)."""
    frame = pd.read_csv(path)
    missing = {"t_ms", "ue_id", "x_m", "y_m"} - set(frame.columns)
    if missing:
        raise ValueError(f"mobility trace lacks columns {sorted(missing)}")
    routes = {}
    for ue_id, rows in frame.sort_values(["ue_id", "t_ms"]).groupby("ue_id", sort=True):
        points = []
        for x, y in zip(rows["x_m"], rows["y_m"]):
            if not points or points[-1] != (float(x), float(y)):
                points.append((float(x), float(y)))
        span_s = (rows["t_ms"].iloc[-1] - rows["t_ms"].iloc[0]) / 1000.0
        length = Route.from_points(points).length
        speed = length / span_s if span_s > 0 and length > 0 else 15.0
        routes[int(ue_id)] = (points, speed)
    return routes


class RadioEnvironment:
    def __init__(self, scenario: Scenario):
        self.cells = sorted(scenario.cells, key=lambda cell: cell.id)
        self.cells_by_id = {cell.id: cell for cell in self.cells}
        self.noise_figure_db = scenario.noise_figure_db
        self.ue_height = scenario.ue_height_m
        trace = load_mobility_trace(scenario.trace_file) if scenario.trace_file else {}
        mobility_rng = rng_stream("mobility", scenario.seed)
        self.initial: Dict[int, VehicleState] = {}
        for vehicle in sorted(scenario.vehicles, key=lambda v: v.id):
            points, speed = vehicle.route, vehicle.speed
            if vehicle.id in trace:
                points, speed = trace[vehicle.id]
            if speed is None:
                speed = float(mobility_rng.uniform(*SPEED_RANGE))
            route = Route.from_points(points)
            self.initial[vehicle.id] = VehicleState(
                id=vehicle.id, route=route, speed=float(speed), position=route.point_at(0.0)
            )
        self.shadowing: Dict[Tuple[int, int], ShadowingField] = {}
        for ue_id, state in self.initial.items():
            for cell in self.cells:
                stream = rng_stream(f"shadowing:{ue_id}:{cell.id}", scenario.seed)
                self.shadowing[(ue_id, cell.id)] = ShadowingField(state.route.length, scenario.shadowing, stream)

    def state_at(self, ue: int, t: SimTime) -> VehicleState:
        initial = self.initial[ue]
        return step_mobility(initial, t) if t > 0 else initial

    def shadowing_at(self, ue: int, travelled: float) -> Dict[int, float]:
        return {cell.id: self.shadowing[(ue, cell.id)].at(travelled) for cell in self.cells}

    def rsrp_at(self, ue: int, cell: int, t: SimTime) -> float:
        state = self.state_at(ue, t)
        shadow = self.shadowing[(ue, cell)].at(state.travelled)
        return rsrp(self.cells_by_id[cell], state.position, shadow, self.ue_height)

    def report(self, ue: int, serving: Optional[int], t: SimTime) -> MeasurementReport:
        state = replace(self.state_at(ue, t), serving_cell=serving)
        return make_report(
            state, self.cells, t, self.shadowing_at(ue, state.travelled), self.noise_figure_db, self.ue_height
        )

    def strongest_cell(self, ue: int, t: SimTime) -> int:
        return self.report(ue, None, t).serving
