"""
Run metrics: long-format series (`t_ms,ue_id,metric,value`) and the
aggregates recomputed from them.
"""
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["t_ms", "ue_id", "metric", "value"]
AGGREGATE_KEYS = [
    "mode", "seed", "mean_cqi", "mean_delay_ms", "mean_ota_delay_ms", "mean_throughput_bps",
    "freeze_count", "freeze_total_ms", "ota_completion_ms", "handover_count",
]
METRIC_FILES = {"series": "metrics.csv", "aggregates": "aggregates.json", "decisions": "decisions.csv"}
DIRECTIONS = ("uplink", "downlink")
# one delay metric per application
DELAY_METRICS = {"stream": "delay_ms", "ota": "ota_delay_ms"}


class MetricsRecorder:
    """Collects raw samples while a run is in progress."""

    def __init__(self, duration_ms: int):
        self.duration_ms = duration_ms
        self.rows: List[Tuple[int, int, str, float]] = []
        self.served_bits: Dict[Tuple[int, str], Dict[int, float]] = defaultdict(lambda: defaultdict(float))
        self.ota_completion: Dict[int, Optional[float]] = {}

    def cqi(self, t: int, ue: int, cqi: int):
        self.rows.append((int(t), ue, "cqi", float(cqi)))

    def delay(self, delivered_at: float, ue: int, delay_ms: float, app: str = "stream"):
        self.rows.append((int(math.floor(delivered_at)), ue, DELAY_METRICS[app], float(delay_ms)))

    def served(self, t: int, ue: int, bits: float, direction: str = "downlink"):
        if bits > 0:
            self.served_bits[(ue, direction)][int(t) // 1000] += bits

    def freeze(self, start: float, ue: int, duration_ms: float):
        self.rows.append((int(math.floor(start)), ue, "freeze_ms", float(duration_ms)))

    def handover(self, t: int, ue: int, target: int):
        self.rows.append((int(t), ue, "handover", float(target)))

    def ota_done(self, ue: int, completion_ms: Optional[float]):
        self.ota_completion[ue] = completion_ms

    def throughput_rows(self, ues) -> List[Tuple[int, int, str, float]]:
        bins = math.ceil(self.duration_ms / 1000)
        return [
            (b * 1000, ue, f"throughput_{direction}_bps",
             self.served_bits[(ue, direction)].get(b, 0.0) / min(1.0, (self.duration_ms - b * 1000) / 1000.0))
            for ue in ues
            for direction in DIRECTIONS
            for b in range(bins)
        ]


@dataclass
class RunMetrics:
    series: pd.DataFrame
    aggregates: Dict[str, object]
    decisions: Optional[pd.DataFrame] = None
    counters: Dict[str, int] = field(default_factory=dict)


def _mean(values: pd.Series) -> Optional[float]:
    return float(values.mean()) if len(values) else None


def aggregates_from_series(series: pd.DataFrame, mode: str, seed: int, ota_completion_ms: Optional[float]) -> Dict[str, object]:
    by_metric = {name: rows["value"] for name, rows in series.groupby("metric")}
    empty = pd.Series(dtype="float64")
    freezes = by_metric.get("freeze_ms", empty)
    # both directions of a ue share one bin
    served = series[series["metric"].isin([f"throughput_{direction}_bps" for direction in DIRECTIONS])]
    throughput = served.groupby(["t_ms", "ue_id"])["value"].sum()
    return {
        "mode": mode,
        "seed": seed,
        "mean_cqi": _mean(by_metric.get("cqi", empty)),
        "mean_delay_ms": _mean(by_metric.get(DELAY_METRICS["stream"], empty)),
        "mean_ota_delay_ms": _mean(by_metric.get(DELAY_METRICS["ota"], empty)),
        "mean_throughput_bps": _mean(throughput),
        "freeze_count": int(len(freezes)),
        "freeze_total_ms": float(freezes.sum()),
        "ota_completion_ms": ota_completion_ms,
        "handover_count": int(len(by_metric.get("handover", empty))),
    }


def finalize_metrics(
    recorder: MetricsRecorder, ues, mode: str, seed: int, decisions: Optional[pd.DataFrame] = None
) -> RunMetrics:
    rows = recorder.rows + recorder.throughput_rows(ues)
    series = pd.DataFrame(rows, columns=SERIES_COLUMNS)
    series = series.sort_values(["t_ms", "ue_id"], kind="stable").reset_index(drop=True)
    completions = list(recorder.ota_completion.values())
    # the download is complete once every OTA receiver finished
    ota_completion = max(completions) if completions and None not in completions else None
    aggregates = aggregates_from_series(series, mode, seed, ota_completion)
    return RunMetrics(series=series, aggregates=aggregates, decisions=decisions)


def write_outputs(metrics: RunMetrics, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics.series.to_csv(out / METRIC_FILES["series"], index=False)
    if metrics.decisions is not None:
        metrics.decisions.to_csv(out / METRIC_FILES["decisions"], index=False)
    # aggregates last: its presence marks a finished run
    (out / METRIC_FILES["aggregates"]).write_text(json.dumps(metrics.aggregates, indent=2) + "\n")
    return out


def read_aggregates(path) -> Dict[str, object]:
    return json.loads(Path(path).read_text())
