"""
RAN-side E2 agent: association setup, subscription bookkeeping, indication
fan-out and RIC Control execution through registered RAN function callbacks.
"""
import logging
from typing import Callable, Dict, Iterable, List, Optional

from e2.codec import decode, encode
from e2.messages import (
    AssociationState,
    ControlStatus,
    E2Message,
    E2SetupRequest,
    E2SetupResponse,
    HandoverCommand,
    Phase,
    RanFunction,
    RicControlAck,
    RicControlRequest,
    RicIndication,
    RicSubscriptionRequest,
    RicSubscriptionResponse,
)
from simulation.radio import MeasurementReport

logger = logging.getLogger(__name__)

# (subscription_id, report_period_ms) -> None
SubscriptionCallback = Callable[[int, int], None]
# (ue_id, command) -> success
ControlCallback = Callable[[int, HandoverCommand], bool]


class E2ProtocolError(RuntimeError):
    pass


class E2Agent:
    def __init__(self, node_id: int, ran_functions: Iterable[RanFunction], endpoint=None):
        self.node_id = node_id
        self.state = AssociationState(registered_functions=tuple(ran_functions))
        self.endpoint = endpoint
        self.subscription_callbacks: Dict[int, SubscriptionCallback] = {}
        self.control_callback: Optional[ControlCallback] = None
        if endpoint is not None:
            endpoint.bind(self.receive)

    def on_subscription(self, function_id: int, callback: SubscriptionCallback):
        self.subscription_callbacks[function_id] = callback

    def on_control(self, callback: ControlCallback):
        self.control_callback = callback

    def setup_request(self) -> E2SetupRequest:
        self.state.phase = Phase.SETUP_SENT
        return E2SetupRequest(node_id=self.node_id, ran_functions=self.state.registered_functions)

    def start(self):
        self._send([self.setup_request()])

    def teardown(self):
        self.state.teardown()

    def handle(self, msg: E2Message) -> List[E2Message]:
        if isinstance(msg, E2SetupResponse):
            if self.state.phase == Phase.SETUP_SENT:
                self.state.phase = Phase.ESTABLISHED if msg.accepted else Phase.IDLE
                logger.info(f"E2 node {self.node_id}: setup {'accepted' if msg.accepted else 'rejected'}")
            return []
        if isinstance(msg, RicSubscriptionRequest):
            return [self._subscribe(msg)]
        if isinstance(msg, RicControlRequest):
            if self.state.phase != Phase.ESTABLISHED:
                raise E2ProtocolError(f"E2 node {self.node_id}: control request before setup")
            return [self._control(msg)]
        raise E2ProtocolError(f"E2 node {self.node_id}: unexpected {type(msg).__name__}")

    def _subscribe(self, msg: RicSubscriptionRequest) -> RicSubscriptionResponse:
        if self.state.phase != Phase.ESTABLISHED:
            logger.warning(f"E2 node {self.node_id}: subscription {msg.subscription_id} before setup")
            return RicSubscriptionResponse(msg.subscription_id, accepted=False)
        if self.state.function(msg.ran_function_id) is None:
            logger.warning(f"E2 node {self.node_id}: unknown RAN function {msg.ran_function_id}")
            return RicSubscriptionResponse(msg.subscription_id, accepted=False)
        if msg.subscription_id in self.state.active_subscriptions or msg.report_period_ms <= 0:
            return RicSubscriptionResponse(msg.subscription_id, accepted=False)
        self.state.active_subscriptions[msg.subscription_id] = (msg.ran_function_id, msg.report_period_ms)
        callback = self.subscription_callbacks.get(msg.ran_function_id)
        if callback is not None:
            callback(msg.subscription_id, msg.report_period_ms)
        return RicSubscriptionResponse(msg.subscription_id, accepted=True)

    def _control(self, msg: RicControlRequest) -> RicControlAck:
        if msg.node_id != self.node_id or self.control_callback is None:
            return RicControlAck(ControlStatus.FAILURE)
        ok = self.control_callback(msg.ue_id, msg.control)
        return RicControlAck(ControlStatus.SUCCESS if ok else ControlStatus.FAILURE)

    def indications(self, function_id: int, report: MeasurementReport, period_ms: Optional[int] = None) -> List[RicIndication]:
        """Indications for every live subscription on a function (optionally one report period)."""
        if self.state.phase != Phase.ESTABLISHED:
            return []
        return [
            RicIndication(subscription_id=sub_id, report=report)
            for sub_id, (fid, period) in sorted(self.state.active_subscriptions.items())
            if fid == function_id and (period_ms is None or period == period_ms)
        ]

    def indicate(self, function_id: int, report: MeasurementReport, period_ms: Optional[int] = None) -> int:
        messages = self.indications(function_id, report, period_ms)
        self._send(messages)
        return len(messages)

    def receive(self, frame: bytes):
        self._send(self.handle(decode(frame)))

    def _send(self, messages: List[E2Message]):
        if self.endpoint is None:
            return
        for message in messages:
            self.endpoint.send(encode(message))
