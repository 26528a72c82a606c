"""
RIC-side E2 termination: one association per E2 node, RIC-assigned
subscription ids, and the subscription_id -> xApp routing table.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Tuple, Union

from e2.messages import (
    AssociationState,
    ControlStatus,
    E2Message,
    E2SetupRequest,
    E2SetupResponse,
    HandoverCommand,
    Phase,
    RicControlAck,
    RicControlRequest,
    RicIndication,
    RicSubscriptionRequest,
    RicSubscriptionResponse,
)
from simulation.radio import MeasurementReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Send:
    node_id: int
    message: E2Message


@dataclass(frozen=True)
class Deliver:
    xapp_id: int
    report: MeasurementReport


@dataclass(frozen=True)
class NodeUp:
    node_id: int


@dataclass(frozen=True)
class ControlResult:
    xapp_id: int
    status: ControlStatus


Dispatch = Union[Send, Deliver, NodeUp, ControlResult]


@dataclass
class TerminationCounters:
    indications_received: int = 0
    indications_delivered: int = 0
    indications_dropped: int = 0
    controls_sent: int = 0
    acks_received: int = 0


class E2Termination:
    def __init__(self):
        self.associations: Dict[int, AssociationState] = {}
        self.routes: Dict[Tuple[int, int], int] = {}
        self.pending: Dict[Tuple[int, int], Tuple[int, int, int]] = {}
        self.pending_controls: Dict[int, Deque[int]] = {}
        self._next_subscription: Dict[int, int] = {}
        self.counters = TerminationCounters()

    def established(self, node_id: int) -> bool:
        association = self.associations.get(node_id)
        return association is not None and association.phase == Phase.ESTABLISHED

    def nodes(self) -> List[int]:
        return sorted(node for node in self.associations if self.established(node))

    def handle(self, node_id: int, msg: E2Message) -> List[Dispatch]:
        if isinstance(msg, E2SetupRequest):
            return self._setup(node_id, msg)
        if isinstance(msg, RicSubscriptionResponse):
            self._subscription_response(node_id, msg)
            return []
        if isinstance(msg, RicIndication):
            return self._indication(node_id, msg)
        if isinstance(msg, RicControlAck):
            self.counters.acks_received += 1
            waiting = self.pending_controls.get(node_id)
            if not waiting:
                logger.warning(f"Control ack from node {node_id} without a pending request")
                return []
            return [ControlResult(waiting.popleft(), msg.status)]
        logger.warning(f"Unexpected {type(msg).__name__} from node {node_id}")
        return []

    def _setup(self, node_id: int, msg: E2SetupRequest) -> List[Dispatch]:
        if msg.node_id != node_id:
            logger.warning(f"Setup for node {msg.node_id} arrived on association {node_id}")
            return [Send(node_id, E2SetupResponse(msg.node_id, accepted=False))]
        if self.established(node_id):
            return [Send(node_id, E2SetupResponse(node_id, accepted=True))]
        self.associations[node_id] = AssociationState(
            phase=Phase.ESTABLISHED, registered_functions=tuple(msg.ran_functions)
        )
        self._next_subscription.setdefault(node_id, 1)
        self.pending_controls[node_id] = deque()
        names = ", ".join(function.name for function in msg.ran_functions)
        logger.info(f"E2 setup from node {node_id} with functions [{names}]")
        return [Send(node_id, E2SetupResponse(node_id, accepted=True)), NodeUp(node_id)]

    def subscribe(self, node_id: int, xapp_id: int, function_id: int, period_ms: int) -> RicSubscriptionRequest:
        if not self.established(node_id):
            raise RuntimeError(f"no established association with node {node_id}")
        sub_id = self._next_subscription[node_id]
        self._next_subscription[node_id] = sub_id + 1
        self.pending[(node_id, sub_id)] = (xapp_id, function_id, period_ms)
        return RicSubscriptionRequest(
            requestor_id=xapp_id, subscription_id=sub_id, ran_function_id=function_id, report_period_ms=period_ms
        )

    def _subscription_response(self, node_id: int, msg: RicSubscriptionResponse):
        pending = self.pending.pop((node_id, msg.subscription_id), None)
        if pending is None:
            logger.warning(f"Subscription response {msg.subscription_id} from node {node_id} was not requested")
            return
        xapp_id, function_id, period = pending
        if not msg.accepted or not self.established(node_id):
            logger.warning(f"Subscription {msg.subscription_id} on node {node_id} rejected")
            return
        self.associations[node_id].active_subscriptions[msg.subscription_id] = (function_id, period)
        self.routes[(node_id, msg.subscription_id)] = xapp_id

    def _indication(self, node_id: int, msg: RicIndication) -> List[Dispatch]:
        self.counters.indications_received += 1
        xapp_id = self.routes.get((node_id, msg.subscription_id))
        if xapp_id is None:
            self.counters.indications_dropped += 1
            logger.warning(f"Dropped indication for unknown subscription {msg.subscription_id} from node {node_id}")
            return []
        self.counters.indications_delivered += 1
        return [Deliver(xapp_id, msg.report)]

    def control(self, node_id: int, xapp_id: int, ue_id: int, command: HandoverCommand) -> RicControlRequest:
        if not self.established(node_id):
            raise RuntimeError(f"no established association with node {node_id}")
        self.pending_controls[node_id].append(xapp_id)
        self.counters.controls_sent += 1
        return RicControlRequest(node_id=node_id, ue_id=ue_id, control=command)

    def unroute(self, xapp_id: int):
        for key in [key for key, owner in self.routes.items() if owner == xapp_id]:
            del self.routes[key]

    def teardown(self, node_id: int):
        association = self.associations.get(node_id)
        if association is None:
            return
        association.teardown()
        for key in [key for key in self.routes if key[0] == node_id]:
            del self.routes[key]
        for key in [key for key in self.pending if key[0] == node_id]:
            del self.pending[key]
        self.pending_controls[node_id].clear()
