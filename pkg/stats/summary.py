"""
Per-mode comparison tables over the aggregates of a campaign.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Sequence

import numpy as np
import pandas as pd

from stats.anova import anova, t_quantile
from traffic.metrics import METRIC_FILES, read_aggregates

logger = logging.getLogger(__name__)

MEAN_COLUMNS = ["mode", "runs", "mean", "ci_low", "ci_high"]
COMPARISON_COLUMNS = ["mode_a", "mode_b", "mean_a", "mean_b", "delta_pct", "f_value", "p_value", "df_between", "df_within"]


class MissingModeError(LookupError):
    pass


@dataclass
class GroupSamples:
    label: str
    values: List[float]


@dataclass
class Summary:
    metric: str
    means: pd.DataFrame
    comparisons: pd.DataFrame


def confidence_interval(values: Sequence[float], level: float = 0.95):
    values = np.asarray(values, dtype=np.float64)
    mean = float(values.mean())
    if len(values) < 2:
        return mean, math.nan, math.nan
    half = t_quantile(0.5 + level / 2.0, len(values) - 1) * float(values.std(ddof=1)) / math.sqrt(len(values))
    return mean, mean - half, mean + half


def delta_pct(a: float, b: float) -> float:
    return (b - a) / a * 100.0 if a != 0 else math.nan


def load_campaign(campaign_dir) -> Dict[str, List[dict]]:
    """mode -> aggregates of every finished run under <dir>/<mode>/<seed>/."""
    runs: Dict[str, List[dict]] = {}
    root = Path(campaign_dir)
    for path in sorted(root.glob(f"*/*/{METRIC_FILES['aggregates']}")):
        mode = path.parent.parent.name
        runs.setdefault(mode, []).append(read_aggregates(path))
    for mode in runs:
        runs[mode].sort(key=lambda aggregates: aggregates["seed"])
    return runs


def groups_for(runs: Mapping[str, Sequence[dict]], metric: str, modes: Sequence[str]) -> List[GroupSamples]:
    groups = []
    for mode in modes:
        if not runs.get(mode):
            raise MissingModeError(f"no runs for mode '{mode}'")
        values = [float(aggregates[metric]) for aggregates in runs[mode] if aggregates.get(metric) is not None]
        if not values:
            raise MissingModeError(f"mode '{mode}' has no values for {metric}")
        groups.append(GroupSamples(mode, values))
    return groups


def summarize(runs: Mapping[str, Sequence[dict]], metric: str, modes: Sequence[str]) -> Summary:
    groups = groups_for(runs, metric, modes)
    mean_rows = []
    for group in groups:
        mean, low, high = confidence_interval(group.values)
        mean_rows.append((group.label, len(group.values), mean, low, high))

    comparison_rows = []
    for a, b in itertools.combinations(groups, 2):
        mean_a, mean_b = float(np.mean(a.values)), float(np.mean(b.values))
        try:
            result = anova([a, b])
            tested = (result.f_value, result.p_value, result.df_between, result.df_within)
        except ValueError as e:
            logger.warning(f"No ANOVA for {a.label} vs {b.label}: {e}")
            tested = (math.nan, math.nan, None, None)
        comparison_rows.append((a.label, b.label, mean_a, mean_b, delta_pct(mean_a, mean_b), *tested))
    return Summary(
        metric=metric,
        means=pd.DataFrame(mean_rows, columns=MEAN_COLUMNS),
        comparisons=pd.DataFrame(comparison_rows, columns=COMPARISON_COLUMNS).astype({"df_between": "Int64", "df_within": "Int64"}),
    )


def write_summary(summary: Summary, out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"report_{summary.metric}.csv"
    means_path = out / f"report_{summary.metric}_means.csv"
    text_path = out / f"report_{summary.metric}.txt"
    summary.comparisons.to_csv(csv_path, index=False)
    summary.means.to_csv(means_path, index=False)
    text = (
        f"metric: {summary.metric}\n\n"
        f"{summary.means.to_string(index=False)}\n\n"
        f"{summary.comparisons.to_string(index=False) if len(summary.comparisons) else '(single mode, no comparisons)'}\n"
    )
    text_path.write_text(text)
    return [csv_path, means_path, text_path]
