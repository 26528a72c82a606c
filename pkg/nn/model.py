"""
Recurrent RSRP forecaster: stacked GRU or LSTM layers, inverted dropout and
a one-unit dense head, trained on min-max normalized windows.

Layer stacks:
    lstm  LSTM(64, sequences) -> Dropout(0.2) -> LSTM(32) -> Dropout(0.2) -> Dense(1)
    gru   GRU(128) -> Dense(1)
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from nn.cells import gru_backward, gru_forward, lstm_backward, lstm_forward

logger = logging.getLogger(__name__)

DEFAULT_UNITS = {"lstm": [64, 32], "gru": [128]}
DEFAULT_DROPOUT = {"lstm": 0.2, "gru": 0.0}
DEFAULT_OPTIMIZER = {"lstm": "rmsprop", "gru": "adam"}
GATES = {"lstm": 4, "gru": 3}
# normalized targets lie in [0, 1]; a ReLU head must start with positive pre-activations to train
RELU_HEAD_BIAS = 0.5


class ModelConfig(BaseModel):
    arch: Literal["lstm", "gru"] = "gru"
    units: Optional[List[int]] = None
    dropout: Optional[float] = Field(None, ge=0.0, lt=1.0)
    lookback: int = Field(15, ge=1)
    activation: Literal["relu", "linear"] = "relu"
    optimizer: Optional[Literal["adam", "rmsprop"]] = None
    learning_rate: float = Field(1e-4, ge=0.0)
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(200, ge=1)
    patience: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def fill_arch_defaults(self):
        if self.units is None:
            self.units = list(DEFAULT_UNITS[self.arch])
        if not self.units or any(units <= 0 for units in self.units):
            raise ValueError("every recurrent layer needs a positive unit count")
        if self.dropout is None:
            self.dropout = DEFAULT_DROPOUT[self.arch]
        if self.optimizer is None:
            self.optimizer = DEFAULT_OPTIMIZER[self.arch]
        return self


@dataclass(frozen=True)
class Scaler:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"scaler max {self.hi} must exceed min {self.lo}")

    @classmethod
    def fit(cls, values: Sequence[float]) -> "Scaler":
        values = np.asarray(values, dtype=np.float64)
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            hi = lo + 1.0
        return cls(lo, hi)

    def transform(self, values):
        return (np.asarray(values, dtype=np.float64) - self.lo) / (self.hi - self.lo)

    def inverse(self, values):
        return np.asarray(values, dtype=np.float64) * (self.hi - self.lo) + self.lo


@dataclass
class RecurrentModel:
    config: ModelConfig
    scaler: Scaler
    params: Dict[str, np.ndarray] = field(default_factory=dict)

    def layer_params(self, layer: int) -> Dict[str, np.ndarray]:
        return {key: self.params[f"rnn{layer}.{key}"] for key in ("W", "U", "b")}

    def copy_params(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}


def parameter_shapes(config: ModelConfig, input_size: int = 1) -> List[Tuple[str, Tuple[int, ...]]]:
    """Parameter names and shapes in declared (persisted) order."""
    gates = GATES[config.arch]
    shapes = []
    width = input_size
    for layer, units in enumerate(config.units):
        shapes.append((f"rnn{layer}.W", (width, gates * units)))
        shapes.append((f"rnn{layer}.U", (units, gates * units)))
        shapes.append((f"rnn{layer}.b", (gates * units,)))
        width = units
    shapes.append(("dense.W", (width, 1)))
    shapes.append(("dense.b", (1,)))
    return shapes


def init_model(config: ModelConfig, scaler: Scaler, rng: np.random.Generator) -> RecurrentModel:
    """Weights uniform in +-1/sqrt(rows), biases zero except a ReLU head, which starts mid-range."""
    params = {}
    for name, shape in parameter_shapes(config):
        if name == "dense.b" and config.activation == "relu":
            params[name] = np.full(shape, RELU_HEAD_BIAS)
        elif name.endswith(".b"):
            params[name] = np.zeros(shape)
        else:
            limit = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-limit, limit, size=shape)
    return RecurrentModel(config=config, scaler=scaler, params=params)


def _as_batch(windows) -> np.ndarray:
    x = np.asarray(windows, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return np.clip(x, 0.0, 1.0)[:, :, None]


def _forward(model: RecurrentModel, x: np.ndarray, rng: Optional[np.random.Generator]):
    """x is (batch, time, 1); dropout is active only when an rng is given."""
    config = model.config
    keep = 1.0 - config.dropout
    batch, steps, _ = x.shape
    caches = []
    seq = x
    for layer, units in enumerate(config.units):
        params = model.layer_params(layer)
        h = np.zeros((batch, units))
        c = np.zeros((batch, units))
        outputs = np.empty((batch, steps, units))
        steps_cache = []
        for t in range(steps):
            if config.arch == "gru":
                h, cache = gru_forward(seq[:, t, :], h, params)
            else:
                h, c, cache = lstm_forward(seq[:, t, :], h, c, params)
            outputs[:, t, :] = h
            steps_cache.append(cache)
        mask = None
        if rng is not None and config.dropout > 0.0:
            mask = (rng.random(outputs.shape) < keep) / keep
            outputs = outputs * mask
        caches.append((steps_cache, mask))
        seq = outputs
    last = seq[:, -1, :]
    pre = last @ model.params["dense.W"] + model.params["dense.b"]
    out = np.maximum(pre, 0.0) if config.activation == "relu" else pre
    return out[:, 0], (caches, last, pre)


def forward(model: RecurrentModel, windows):
    """Normalized one-step prediction for one window (scalar) or a batch (vector)."""
    x = np.asarray(windows, dtype=np.float64)
    if x.shape[-1] != model.config.lookback:
        raise ValueError(f"window length {x.shape[-1]} differs from lookback {model.config.lookback}")
    y, _ = _forward(model, _as_batch(x), None)
    return float(y[0]) if x.ndim == 1 else y


def predict_dbm(model: RecurrentModel, window_dbm: Sequence[float]) -> float:
    return float(model.scaler.inverse(forward(model, model.scaler.transform(window_dbm))))


def predict_recursive(model: RecurrentModel, history: Sequence[float], n: int) -> List[float]:
    """n one-step predictions in dBm, each fed back into the sliding window."""
    lookback = model.config.lookback
    if len(history) < lookback:
        raise ValueError(f"history of {len(history)} samples is shorter than lookback {lookback}")
    window = list(model.scaler.transform(list(history)[-lookback:]))
    predictions = []
    for _ in range(n):
        y = forward(model, window)
        predictions.append(float(model.scaler.inverse(y)))
        window = window[1:] + [y]
    return predictions


def mse_mae(model: RecurrentModel, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    error = forward(model, x) - y
    return float(np.mean(error * error)), float(np.mean(np.abs(error)))


def backprop(
    model: RecurrentModel, x, y, rng: Optional[np.random.Generator] = None
) -> Tuple[float, Dict[str, np.ndarray]]:
    """MSE loss over a batch of normalized windows and its gradient for every parameter."""
    config = model.config
    xb = _as_batch(x)
    target = np.asarray(y, dtype=np.float64).reshape(-1)
    out, (caches, last, pre) = _forward(model, xb, rng)
    batch, steps, _ = xb.shape
    error = out - target
    loss = float(np.mean(error * error))

    grads: Dict[str, np.ndarray] = {}
    dpre = (2.0 * error / batch)[:, None]
    if config.activation == "relu":
        dpre = dpre * (pre > 0.0)
    grads["dense.W"] = last.T @ dpre
    grads["dense.b"] = dpre.sum(axis=0)

    dseq = np.zeros((batch, steps, last.shape[1]))
    dseq[:, -1, :] = dpre @ model.params["dense.W"].T
    for layer in range(len(config.units) - 1, -1, -1):
        params = model.layer_params(layer)
        steps_cache, mask = caches[layer]
        if mask is not None:
            dseq = dseq * mask
        units = config.units[layer]
        width = params["W"].shape[0]
        dW, dU, db = np.zeros_like(params["W"]), np.zeros_like(params["U"]), np.zeros_like(params["b"])
        dx = np.zeros((batch, steps, width))
        dh_next = np.zeros((batch, units))
        dc_next = np.zeros((batch, units))
        for t in range(steps - 1, -1, -1):
            dh = dseq[:, t, :] + dh_next
            if config.arch == "gru":
                dx[:, t, :], dh_next, step = gru_backward(dh, steps_cache[t], params)
            else:
                dx[:, t, :], dh_next, dc_next, step = lstm_backward(dh, dc_next, steps_cache[t], params)
            dW += step["W"]
            dU += step["U"]
            db += step["b"]
        grads[f"rnn{layer}.W"], grads[f"rnn{layer}.U"], grads[f"rnn{layer}.b"] = dW, dU, db
        dseq = dx
    return loss, grads
