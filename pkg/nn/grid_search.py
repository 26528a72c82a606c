"""
Exhaustive or budgeted hyperparameter search over lookback, optimizer,
dense activation, batch size and learning rate.
"""
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import pandas as pd

from nn.dataset import Dataset
from nn.model import ModelConfig, RecurrentModel
from nn.training import TrainReport, train
from simulation.core import rng_stream

logger = logging.getLogger(__name__)

SEARCH_SPACE: Dict[str, list] = {
    "lookback": [10, 15],
    "optimizer": ["rmsprop", "adam"],
    "activation": ["relu", "linear"],
    "batch_size": [16, 32, 64],
    "learning_rate": [0.0001, 0.0005, 0.001, 0.005],
}
REPORT_COLUMNS = ["rank", "arch", *SEARCH_SPACE, "val_mse", "val_mae", "best_epoch", "epochs_run"]


@dataclass
class SearchResult:
    config: ModelConfig
    model: RecurrentModel
    report: TrainReport

    @property
    def val_mse(self) -> float:
        return self.report.best_val_mse

    @property
    def val_mae(self) -> float:
        return self.report.best_val_mae


def search_space(arch: str, epochs: int = 200, seed: int = 0, space: Optional[Dict[str, list]] = None) -> List[ModelConfig]:
    space = space or SEARCH_SPACE
    names = list(space)
    return [
        ModelConfig(arch=arch, epochs=epochs, seed=seed, **dict(zip(names, values)))
        for values in itertools.product(*(space[name] for name in names))
    ]


def budget_subset(configs: Sequence[ModelConfig], budget: Optional[int], seed: int = 0) -> List[ModelConfig]:
    """A seeded choice of `budget` configs, kept in space order."""
    if budget is None or budget >= len(configs):
        return list(configs)
    chosen = sorted(rng_stream("grid-search", seed).permutation(len(configs))[:budget])
    return [configs[i] for i in chosen]


def _train_one(args) -> SearchResult:
    config, dataset = args
    model, report = train(config, dataset)
    return SearchResult(config, model, report)


def grid_search(
    configs: Sequence[ModelConfig], dataset: Dataset, budget: Optional[int] = None, seed: int = 0, workers: int = 1
) -> List[SearchResult]:
    """Train every selected config; best first by validation MSE, then MAE."""
    if not configs:
        raise ValueError("search space is empty")
    selected = budget_subset(configs, budget, seed)
    logger.info(f"Grid search over {len(selected)} of {len(configs)} configurations")
    jobs = [(config, dataset) for config in selected]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_one, jobs))
    else:
        results = [_train_one(job) for job in jobs]
    return sorted(results, key=lambda result: (result.val_mse, result.val_mae))


def search_report(results: Sequence[SearchResult]) -> pd.DataFrame:
    rows = []
    for rank, result in enumerate(results, start=1):
        row = {"rank": rank, "arch": result.config.arch}
        row.update({name: getattr(result.config, name) for name in SEARCH_SPACE})
        row.update({
            "val_mse": result.val_mse,
            "val_mae": result.val_mae,
            "best_epoch": result.report.best_epoch,
            "epochs_run": result.report.epochs_run,
        })
        rows.append(row)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)
