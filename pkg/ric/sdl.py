"""
Shared Data Layer: bounded per-(ue, cell) RSRP time series plus the latest
measurement report per UE.
"""
from collections import deque
from typing import Deque, Dict, List, Optional, Tuple

import pandas as pd

from simulation.radio import MeasurementReport

DEFAULT_CAPACITY = 256
DUMP_COLUMNS = ["ue_id", "cell_id", "t_ms", "rsrp_dbm"]


class SdlOrderError(ValueError):
    """A sample was not newer than the last stored sample of its series."""


class SdlStore:
    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._series: Dict[Tuple[int, int], Deque[Tuple[int, float]]] = {}
        self._latest: Dict[int, MeasurementReport] = {}

    def put(self, ue: int, cell: int, t: int, rsrp: float) -> None:
        series = self._series.get((ue, cell))
        if series is None:
            series = self._series[(ue, cell)] = deque(maxlen=self.capacity)
        elif series[-1][0] >= t:
            raise SdlOrderError(f"sample t={t} for ue {ue} cell {cell} is not after t={series[-1][0]}")
        series.append((t, rsrp))

    def accepts(self, ue: int, cell: int, t: int) -> bool:
        series = self._series.get((ue, cell))
        return not series or series[-1][0] < t

    def window(self, ue: int, cell: int, n: int) -> List[Tuple[int, float]]:
        if n < 1:
            raise ValueError("n must be >= 1")
        series = self._series.get((ue, cell))
        if not series:
            return []
        return list(series)[-n:]

    def latest(self, ue: int) -> Optional[MeasurementReport]:
        return self._latest.get(ue)

    def set_latest(self, report: MeasurementReport) -> None:
        self._latest[report.ue] = report

    def ues(self) -> List[int]:
        return sorted(self._latest)

    def series_keys(self) -> List[Tuple[int, int]]:
        return sorted(self._series)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (ue, cell, t, rsrp)
            for (ue, cell) in self.series_keys()
            for t, rsrp in self._series[(ue, cell)]
        ]
        return pd.DataFrame(rows, columns=DUMP_COLUMNS)

    def dump_csv(self, path) -> int:
        frame = self.to_frame()
        frame.to_csv(path, index=False)
        return len(frame)
