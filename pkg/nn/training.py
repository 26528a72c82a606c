"""
Mini-batch BPTT training with early stopping on validation MSE.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from nn.dataset import Dataset, split_windows
from nn.model import ModelConfig, RecurrentModel, Scaler, backprop, init_model, mse_mae
from nn.optimizers import make_optimizer
from simulation.core import rng_stream

logger = logging.getLogger(__name__)


@dataclass
class TrainReport:
    train_mse: List[float] = field(default_factory=list)
    train_mae: List[float] = field(default_factory=list)
    val_mse: List[float] = field(default_factory=list)
    val_mae: List[float] = field(default_factory=list)
    best_epoch: int = 0
    wall_time_s: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.val_mse)

    @property
    def best_val_mse(self) -> float:
        return self.val_mse[self.best_epoch - 1]

    @property
    def best_val_mae(self) -> float:
        return self.val_mae[self.best_epoch - 1]

    def to_dict(self) -> dict:
        # wall time stays out of persisted reports
        return {
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "best_val_mse": self.best_val_mse,
            "best_val_mae": self.best_val_mae,
            "train_mse": self.train_mse,
            "train_mae": self.train_mae,
            "val_mse": self.val_mse,
            "val_mae": self.val_mae,
        }


def train(
    config: ModelConfig, dataset: Dataset, scaler: Optional[Scaler] = None
) -> Tuple[RecurrentModel, TrainReport]:
    """
    Fit a model on the chronological 80/20 split of every series.

    The scaler is fitted on the whole dataset unless one is given. Returns the
    weights of the epoch with the lowest validation MSE.
    """
    started = time.perf_counter()
    scaler = scaler or Scaler.fit(dataset.values())
    train_x, train_y, val_x, val_y = split_windows(dataset, config.lookback, scaler.transform)

    model = init_model(config, scaler, rng_stream(f"init:{config.arch}", config.seed))
    shuffle_rng = rng_stream("shuffle", config.seed)
    dropout_rng = rng_stream("dropout", config.seed)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)

    report = TrainReport()
    best_params = model.copy_params()
    best_mse = float("inf")
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train_y))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            _, grads = backprop(model, train_x[batch], train_y[batch], dropout_rng)
            optimizer.step(model.params, grads)

        train_mse, train_mae = mse_mae(model, train_x, train_y)
        val_mse, val_mae = mse_mae(model, val_x, val_y)
        report.train_mse.append(train_mse)
        report.train_mae.append(train_mae)
        report.val_mse.append(val_mse)
        report.val_mae.append(val_mae)
        logger.debug(f"epoch {epoch}: train mse {train_mse:.6g}, val mse {val_mse:.6g}, val mae {val_mae:.6g}")

        if val_mse < best_mse or report.best_epoch == 0:
            best_mse = val_mse
            best_params = model.copy_params()
            report.best_epoch = epoch
        elif epoch - report.best_epoch >= config.patience:
            logger.info(f"Early stop at epoch {epoch}, best epoch {report.best_epoch}")
            break

    model.params = best_params
    report.wall_time_s = time.perf_counter() - started
    logger.info(
        f"Trained {config.arch} for {report.epochs_run} epochs in {report.wall_time_s:.1f} s: "
        f"val mse {report.best_val_mse:.6g}, val mae {report.best_val_mae:.6g}"
    )
    return model, report
