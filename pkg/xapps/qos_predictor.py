"""
QoS Predictor: N-step RSRP forecast for the serving and target cells,
inversion / Event A3 scan and conversion of the inversion step into a TTT.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

from nn.model import predict_recursive
from ric.runtime import XAppDescriptor
from ric.sdl import SdlStore
from simulation.scenario import HoPolicy

logger = logging.getLogger(__name__)

HANDOVER = "handover"
NO_HANDOVER = "no_handover"
INSUFFICIENT_HISTORY = "insufficient_history"
MODEL_ERROR = "model_error"

QP_DESCRIPTOR = XAppDescriptor(name="qos-predictor")


class Predictor(Protocol):
    lookback: int

    def forecast(self, ue: int, cell: int, history: Sequence[float], now: int, n: int, step_ms: int) -> List[float]:
        ...


@dataclass(frozen=True)
class PredictionOutcome:
    decision: str
    target: Optional[int] = None
    ttt_ms: int = 0
    inversion_step: Optional[int] = None
    a3_step: Optional[int] = None
    flag: Optional[str] = None

    @property
    def is_handover(self) -> bool:
        return self.decision == HANDOVER


def scan_prediction(serving: Sequence[float], target: Sequence[float], hom: float) -> Tuple[Optional[int], Optional[int]]:
    """First 1-based step with target > serving, and first with target - hom > serving."""
    k_inv = None
    for k, (serv, tgt) in enumerate(zip(serving, target), start=1):
        if k_inv is None and tgt > serv:
            k_inv = k
        if tgt - hom > serv:
            return k_inv, k
    return k_inv, None


def qp_predict(
    ue: int,
    serving: int,
    target: int,
    policy: HoPolicy,
    predictor: Predictor,
    sdl: SdlStore,
    now: int = 0,
) -> PredictionOutcome:
    lookback = max(predictor.lookback, 1)
    serving_history = [rsrp for _, rsrp in sdl.window(ue, serving, lookback)]
    target_history = [rsrp for _, rsrp in sdl.window(ue, target, lookback)]
    if len(serving_history) < lookback or len(target_history) < lookback:
        return PredictionOutcome(NO_HANDOVER, target=target, flag=INSUFFICIENT_HISTORY)
    n, step = policy.horizon_n, policy.prediction_step_ms
    try:
        serving_future = predictor.forecast(ue, serving, serving_history, now, n, step)
        target_future = predictor.forecast(ue, target, target_history, now, n, step)
    except Exception as e:
        logger.error(f"Prediction failed for ue {ue} ({serving} -> {target}): {e}")
        return PredictionOutcome(NO_HANDOVER, target=target, flag=MODEL_ERROR)
    k_inv, k_a3 = scan_prediction(serving_future, target_future, policy.hom)
    if k_a3 is not None:
        assert k_inv is not None and k_inv <= k_a3, "Event A3 predicted without an RSRP inversion"
    ttt = k_inv * step if k_inv is not None else 0
    if k_a3 is None:
        return PredictionOutcome(NO_HANDOVER, target=target, ttt_ms=ttt, inversion_step=k_inv)
    return PredictionOutcome(HANDOVER, target=target, ttt_ms=ttt, inversion_step=k_inv, a3_step=k_a3)


class OraclePredictor:
    """Reads the radio environment's actual future RSRP."""

    lookback = 1

    def __init__(self, environment):
        self.environment = environment

    def forecast(self, ue, cell, history, now, n, step_ms):
        return [self.environment.rsrp_at(ue, cell, now + k * step_ms) for k in range(1, n + 1)]


class ScriptedPredictor:
    """Returns fixed per-cell futures; used to exercise the decision logic."""

    lookback = 1

    def __init__(self, futures: Dict[int, Sequence[float]]):
        self.futures = futures

    def forecast(self, ue, cell, history, now, n, step_ms):
        return list(self.futures[cell][:n])


class ModelPredictor:
    def __init__(self, model):
        self.model = model

    @property
    def lookback(self) -> int:
        return self.model.config.lookback

    def forecast(self, ue, cell, history, now, n, step_ms):
        return predict_recursive(self.model, history, n)


class QosPredictor:
    def __init__(self, sdl: SdlStore, predictor: Predictor, policy: HoPolicy):
        self.sdl = sdl
        self.predictor = predictor
        self.policy = policy
        self.calls = 0

    def predict(self, ue: int, serving: int, target: int, now: int) -> PredictionOutcome:
        self.calls += 1
        return qp_predict(ue, serving, target, self.policy, self.predictor, self.sdl, now)
