"""
RSRP training data: one chronological series per (ue, cell), windowed into
(lookback -> next value) pairs without crossing series boundaries.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

DATASET_COLUMNS = ["t_ms", "ue_id", "cell_id", "rsrp_dbm"]
TRAIN_FRACTION = 0.8


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    series: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_values(cls, values: Sequence[float], ue: int = 0, cell: int = 0) -> "Dataset":
        return cls({(ue, cell): np.asarray(values, dtype=np.float64)})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Dataset":
        missing = set(DATASET_COLUMNS) - set(frame.columns)
        if missing:
            raise DatasetError(f"dataset lacks columns {sorted(missing)}")
        if frame.empty:
            raise DatasetError("dataset has no rows")
        try:
            frame = frame[DATASET_COLUMNS].astype({"t_ms": "int64", "ue_id": "int64", "cell_id": "int64", "rsrp_dbm": "float64"})
        except (TypeError, ValueError) as e:
            raise DatasetError(f"dataset has non-numeric values: {e}")
        if not np.isfinite(frame["rsrp_dbm"]).all():
            raise DatasetError("dataset has non-finite rsrp values")
        series = {}
        ordered = frame.sort_values(["ue_id", "cell_id", "t_ms"], kind="stable")
        for (ue, cell), rows in ordered.groupby(["ue_id", "cell_id"], sort=True):
            series[(int(ue), int(cell))] = rows["rsrp_dbm"].to_numpy(dtype=np.float64)
        return cls(series)

    @property
    def samples(self) -> int:
        return sum(len(values) for values in self.series.values())

    def values(self) -> np.ndarray:
        if not self.series:
            return np.empty(0)
        return np.concatenate([self.series[key] for key in sorted(self.series)])


def load_dataset(path) -> Dataset:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise DatasetError(f"dataset file {path} does not exist")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"dataset file {path} is empty")
    except pd.errors.ParserError as e:
        raise DatasetError(f"dataset file {path} is not valid CSV: {e}")
    dataset = Dataset.from_frame(frame)
    logger.info(f"Loaded {dataset.samples} samples in {len(dataset.series)} series from {path}")
    return dataset


def make_windows(values: np.ndarray, lookback: int) -> Tuple[np.ndarray, np.ndarray]:
    """All (values[k:k+lookback], values[k+lookback]) pairs, oldest first."""
    count = len(values) - lookback
    if count <= 0:
        return np.empty((0, lookback)), np.empty(0)
    windows = np.lib.stride_tricks.sliding_window_view(values, lookback)[:count]
    return np.array(windows, dtype=np.float64), np.asarray(values[lookback:], dtype=np.float64)


def split_windows(
    dataset: Dataset, lookback: int, transform, train_fraction: float = TRAIN_FRACTION
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Chronological split of every series' windows into train and validation sets."""
    if dataset.samples < lookback + 1:
        raise DatasetError(f"dataset has {dataset.samples} samples, needs at least {lookback + 1}")
    train_x: List[np.ndarray] = []
    train_y: List[np.ndarray] = []
    val_x: List[np.ndarray] = []
    val_y: List[np.ndarray] = []
    for key in sorted(dataset.series):
        x, y = make_windows(transform(dataset.series[key]), lookback)
        cut = int(len(y) * train_fraction)
        train_x.append(x[:cut])
        train_y.append(y[:cut])
        val_x.append(x[cut:])
        val_y.append(y[cut:])
    xt, yt = np.concatenate(train_x), np.concatenate(train_y)
    xv, yv = np.concatenate(val_x), np.concatenate(val_y)
    if len(yt) == 0 or len(yv) == 0:
        raise DatasetError(
            f"dataset too small for lookback {lookback}: {len(yt)} training and {len(yv)} validation windows"
        )
    return xt, yt, xv, yv
