"""
Model files: a JSON document holding the config, the scaler and the weights
as flat arrays in declared parameter order.

    {"format": "rsrp-recurrent-model", "version": 1,
     "config": {...ModelConfig...},
     "scaler": {"lo": ..., "hi": ...},
     "weights": [{"name": "rnn0.W", "shape": [1, 384], "data": [...]}, ...]}

Floats are written with their shortest round-trip representation, so a
reload is exact and the same model always produces the same bytes.
"""
import logging
from pathlib import Path
from typing import List

import numpy as np
from pydantic import BaseModel, ValidationError

from nn.model import ModelConfig, RecurrentModel, Scaler, parameter_shapes

logger = logging.getLogger(__name__)

MODEL_FORMAT = "rsrp-recurrent-model"
MODEL_VERSION = 1


class ModelError(Exception):
    pass


class WeightBlock(BaseModel):
    name: str
    shape: List[int]
    data: List[float]


class ScalerDocument(BaseModel):
    lo: float
    hi: float


class ModelDocument(BaseModel):
    format: str
    version: int
    config: ModelConfig
    scaler: ScalerDocument
    weights: List[WeightBlock]


def model_to_json(model: RecurrentModel) -> str:
    weights = [
        WeightBlock(name=name, shape=list(shape), data=model.params[name].reshape(-1).tolist())
        for name, shape in parameter_shapes(model.config)
    ]
    document = ModelDocument(
        format=MODEL_FORMAT,
        version=MODEL_VERSION,
        config=model.config,
        scaler=ScalerDocument(lo=model.scaler.lo, hi=model.scaler.hi),
        weights=weights,
    )
    return document.model_dump_json()


def model_from_json(text: str) -> RecurrentModel:
    try:
        document = ModelDocument.model_validate_json(text)
    except ValidationError as e:
        raise ModelError(f"invalid model document: {e}")
    if document.format != MODEL_FORMAT:
        raise ModelError(f"unknown model format '{document.format}'")
    if document.version != MODEL_VERSION:
        raise ModelError(f"unsupported model version {document.version}")
    blocks = {block.name: block for block in document.weights}
    params = {}
    for name, shape in parameter_shapes(document.config):
        block = blocks.get(name)
        if block is None:
            raise ModelError(f"model file lacks parameter {name}")
        if tuple(block.shape) != shape or len(block.data) != int(np.prod(shape)):
            raise ModelError(f"parameter {name} has shape {block.shape}, expected {list(shape)}")
        params[name] = np.asarray(block.data, dtype=np.float64).reshape(shape)
    try:
        scaler = Scaler(document.scaler.lo, document.scaler.hi)
    except ValueError as e:
        raise ModelError(str(e))
    return RecurrentModel(config=document.config, scaler=scaler, params=params)


def save_model(model: RecurrentModel, path) -> None:
    Path(path).write_text(model_to_json(model))
    logger.info(f"Saved {model.config.arch} model to {path}")


def load_model(path) -> RecurrentModel:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ModelError(f"cannot read model file {path}: {e}")
    model = model_from_json(text)
    logger.info(f"Loaded {model.config.arch} model from {path}")
    return model
