from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Tuple, Union

from simulation.radio import MeasurementReport


class MessageType(IntEnum):
    E2_SETUP_REQUEST = 1
    E2_SETUP_RESPONSE = 2
    RIC_SUBSCRIPTION_REQUEST = 3
    RIC_SUBSCRIPTION_RESPONSE = 4
    RIC_INDICATION = 5
    RIC_CONTROL_REQUEST = 6
    RIC_CONTROL_ACK = 7


class ControlStatus(IntEnum):
    SUCCESS = 0
    FAILURE = 1


@dataclass(frozen=True)
class RanFunction:
    id: int
    name: str
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("RAN function name must be non-empty")


@dataclass(frozen=True)
class HandoverCommand:
    target_cell: int
    ttt_ms: int

    def __post_init__(self):
        if self.ttt_ms < 0:
            raise ValueError("ttt_ms must be >= 0")


@dataclass(frozen=True)
class E2SetupRequest:
    node_id: int
    ran_functions: Tuple[RanFunction, ...] = ()


@dataclass(frozen=True)
class E2SetupResponse:
    node_id: int
    accepted: bool


@dataclass(frozen=True)
class RicSubscriptionRequest:
    requestor_id: int
    subscription_id: int
    ran_function_id: int
    report_period_ms: int


@dataclass(frozen=True)
class RicSubscriptionResponse:
    subscription_id: int
    accepted: bool


@dataclass(frozen=True)
class RicIndication:
    subscription_id: int
    report: MeasurementReport


@dataclass(frozen=True)
class RicControlRequest:
    node_id: int
    ue_id: int
    control: HandoverCommand


@dataclass(frozen=True)
class RicControlAck:
    status: ControlStatus


E2Message = Union[
    E2SetupRequest,
    E2SetupResponse,
    RicSubscriptionRequest,
    RicSubscriptionResponse,
    RicIndication,
    RicControlRequest,
    RicControlAck,
]

MESSAGE_TYPES = {
    E2SetupRequest: MessageType.E2_SETUP_REQUEST,
    E2SetupResponse: MessageType.E2_SETUP_RESPONSE,
    RicSubscriptionRequest: MessageType.RIC_SUBSCRIPTION_REQUEST,
    RicSubscriptionResponse: MessageType.RIC_SUBSCRIPTION_RESPONSE,
    RicIndication: MessageType.RIC_INDICATION,
    RicControlRequest: MessageType.RIC_CONTROL_REQUEST,
    RicControlAck: MessageType.RIC_CONTROL_ACK,
}


class Phase(str, Enum):
    IDLE = "idle"
    SETUP_SENT = "setup_sent"
    ESTABLISHED = "established"


@dataclass
class AssociationState:
    phase: Phase = Phase.IDLE
    registered_functions: Tuple[RanFunction, ...] = ()
    # subscription_id -> (ran_function_id, report_period_ms)
    active_subscriptions: Dict[int, Tuple[int, int]] = field(default_factory=dict)

    def function(self, function_id: int):
        for function in self.registered_functions:
            if function.id == function_id:
                return function
        return None

    def teardown(self):
        self.phase = Phase.IDLE
        self.active_subscriptions.clear()
