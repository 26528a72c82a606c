"""
Handover management: the periodic HO check that asks the QoS Predictor for
a forecast, and the RAN-side Event A3 baseline used by the default mode.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional

import pandas as pd

from e2.messages import ControlStatus, HandoverCommand
from ric.runtime import XAppDescriptor
from ric.sdl import SdlStore
from simulation.radio import MeasurementReport
from simulation.scenario import HoPolicy
from xapps.qos_predictor import PredictionOutcome, QosPredictor

logger = logging.getLogger(__name__)

DECISION_COLUMNS = ["t_ms", "ue_id", "mode", "serving", "target", "ttt_ms", "k_inv", "k_a3"]


def ho_mgmt_descriptor(policy: HoPolicy) -> XAppDescriptor:
    return XAppDescriptor(name="ho-mgmt", timer_period_ms=policy.check_period_ms)


def a3_condition(target_rsrp: float, serving_rsrp: float, hom: float) -> bool:
    return target_rsrp - hom > serving_rsrp


def guard_expired(now: int, last_handover: Optional[int], guard_ms: int) -> bool:
    return last_handover is None or now - last_handover >= guard_ms


@dataclass(frozen=True)
class PredictionRequest:
    ue: int
    serving: int
    target: int


def ho_check(
    ue: int, policy: HoPolicy, sdl: SdlStore, now: int = 0, last_handover: Optional[int] = None
) -> Optional[PredictionRequest]:
    report = sdl.latest(ue)
    if report is None:
        return None
    neighbor = report.strongest_neighbor()
    if neighbor is None:
        return None
    target, target_rsrp = neighbor
    if not target_rsrp + policy.hom > report.serving_rsrp:
        return None
    if not guard_expired(now, last_handover, policy.pingpong_guard_ms):
        return None
    return PredictionRequest(ue=ue, serving=report.serving, target=target)


def baseline_ho_check(
    report: MeasurementReport, hom: float, now: int = 0, last_handover: Optional[int] = None, guard_ms: int = 0
) -> Optional[int]:
    """Immediate handover target on Event A3 (strict inequality), or None."""
    neighbor = report.strongest_neighbor()
    if neighbor is None:
        return None
    target, target_rsrp = neighbor
    if a3_condition(target_rsrp, report.serving_rsrp, hom) and guard_expired(now, last_handover, guard_ms):
        return target
    return None


class DecisionLog:
    def __init__(self):
        self.rows: List[tuple] = []

    def record(self, t, ue, mode, serving, target, ttt_ms, k_inv=None, k_a3=None):
        self.rows.append((t, ue, mode, serving, target, ttt_ms, k_inv, k_a3))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=DECISION_COLUMNS)
        for column in ("k_inv", "k_a3"):
            frame[column] = frame[column].astype("Int64")
        return frame

    def write_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


class HoManagement:
    def __init__(self, ric, predictor: QosPredictor, policy: HoPolicy, decisions: Optional[DecisionLog] = None, mode: str = "predictive"):
        self.ric = ric
        self.predictor = predictor
        self.policy = policy
        self.decisions = decisions
        self.mode = mode
        self.xapp_id: Optional[int] = None
        self.last_handover: Dict[int, int] = {}
        self.pending_until: Dict[int, int] = {}
        self._in_flight: Deque[int] = deque()
        self.commands = 0

    def on_timer(self, t: int):
        for ue in self.ric.sdl.ues():
            if t < self.pending_until.get(ue, -1):
                continue
            request = ho_check(ue, self.policy, self.ric.sdl, t, self.last_handover.get(ue))
            if request is None:
                continue
            outcome = self.predictor.predict(ue, request.serving, request.target, t)
            self._log(t, request, outcome)
            if outcome.is_handover:
                self._command(t, request, outcome)

    def _log(self, t: int, request: PredictionRequest, outcome: PredictionOutcome):
        if self.decisions is not None:
            self.decisions.record(
                t, request.ue, self.mode, request.serving, request.target,
                outcome.ttt_ms if outcome.is_handover else 0, outcome.inversion_step, outcome.a3_step,
            )

    def _command(self, t: int, request: PredictionRequest, outcome: PredictionOutcome):
        command = HandoverCommand(target_cell=request.target, ttt_ms=outcome.ttt_ms)
        self.ric.send_control(self.xapp_id, request.serving, request.ue, command)
        self.pending_until[request.ue] = t + outcome.ttt_ms
        self.last_handover[request.ue] = t + outcome.ttt_ms
        self._in_flight.append(request.ue)
        self.commands += 1
        logger.info(f"t={t}: ue {request.ue} handover {request.serving} -> {request.target} in {outcome.ttt_ms} ms")

    def on_control_ack(self, status: ControlStatus):
        if not self._in_flight:
            return
        ue = self._in_flight.popleft()
        if status != ControlStatus.SUCCESS:
            logger.warning(f"Handover command for ue {ue} failed")
            self.pending_until.pop(ue, None)
            self.last_handover.pop(ue, None)
