"""
Near-RT RIC runtime: xApp registry and timers, subscription management on
top of the E2 termination, and synchronous, non-reentrant dispatch.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from e2.codec import decode, encode
from e2.messages import ControlStatus, E2Message, HandoverCommand
from e2.termination import ControlResult, Deliver, Dispatch, E2Termination, NodeUp, Send
from ric.sdl import DEFAULT_CAPACITY, SdlStore
from simulation.core import EventLoop

logger = logging.getLogger(__name__)


class DuplicateXAppError(ValueError):
    pass


class ReentrantDispatchError(RuntimeError):
    pass


@dataclass(frozen=True)
class XAppDescriptor:
    name: str
    # (ran_function_name, report_period_ms)
    wanted_subscriptions: Tuple[Tuple[str, int], ...] = ()
    timer_period_ms: Optional[int] = None


@dataclass
class _Registration:
    xapp_id: int
    descriptor: XAppDescriptor
    handler: object
    timer_event: Optional[int] = None
    indications: int = 0
    timer_calls: int = 0


class NearRtRic:
    def __init__(self, loop: Optional[EventLoop] = None, sdl_capacity: int = DEFAULT_CAPACITY):
        self.loop = loop
        self.termination = E2Termination()
        self.sdl = SdlStore(sdl_capacity)
        self.endpoints: Dict[int, object] = {}
        self.xapps: Dict[int, _Registration] = {}
        self._by_name: Dict[str, int] = {}
        self._next_xapp = 1
        self._dispatching = False

    @property
    def now(self) -> int:
        return self.loop.now if self.loop is not None else 0

    @property
    def counters(self):
        return self.termination.counters

    def connect(self, node_id: int, endpoint) -> None:
        self.endpoints[node_id] = endpoint
        endpoint.bind(lambda frame: self.receive(node_id, frame))

    def receive(self, node_id: int, frame: bytes) -> None:
        self.execute(self.termination.handle(node_id, decode(frame)))

    def execute(self, dispatches: List[Dispatch]) -> None:
        for dispatch in dispatches:
            if isinstance(dispatch, Send):
                self._send(dispatch.node_id, dispatch.message)
            elif isinstance(dispatch, Deliver):
                self._call(dispatch.xapp_id, "on_indication", dispatch.report)
            elif isinstance(dispatch, NodeUp):
                for registration in list(self.xapps.values()):
                    self._subscribe(registration, [dispatch.node_id])
            elif isinstance(dispatch, ControlResult):
                self._call(dispatch.xapp_id, "on_control_ack", dispatch.status)

    def _send(self, node_id: int, message: E2Message) -> None:
        endpoint = self.endpoints.get(node_id)
        if endpoint is None:
            raise RuntimeError(f"node {node_id} is not connected to the RIC")
        endpoint.send(encode(message))

    def register_xapp(self, descriptor: XAppDescriptor, handler) -> int:
        if descriptor.name in self._by_name:
            raise DuplicateXAppError(f"xApp '{descriptor.name}' is already registered")
        registration = _Registration(self._next_xapp, descriptor, handler)
        self._next_xapp += 1
        self.xapps[registration.xapp_id] = registration
        self._by_name[descriptor.name] = registration.xapp_id
        self._subscribe(registration, self.termination.nodes())
        if descriptor.timer_period_ms and self.loop is not None:
            self._arm_timer(registration)
        logger.info(f"Registered xApp '{descriptor.name}' as {registration.xapp_id}")
        return registration.xapp_id

    def deregister_xapp(self, xapp_id: int) -> None:
        registration = self.xapps.pop(xapp_id, None)
        if registration is None:
            return
        del self._by_name[registration.descriptor.name]
        if registration.timer_event is not None and self.loop is not None:
            self.loop.cancel(registration.timer_event)
        self.termination.unroute(xapp_id)
        logger.info(f"Deregistered xApp '{registration.descriptor.name}'")

    def xapp(self, name: str):
        xapp_id = self._by_name.get(name)
        return self.xapps[xapp_id].handler if xapp_id is not None else None

    def _subscribe(self, registration: _Registration, nodes: List[int]) -> None:
        for node_id in nodes:
            functions = self.termination.associations[node_id].registered_functions
            for function_name, period in registration.descriptor.wanted_subscriptions:
                for function in functions:
                    if function.name == function_name:
                        request = self.termination.subscribe(node_id, registration.xapp_id, function.id, period)
                        self._send(node_id, request)

    def _arm_timer(self, registration: _Registration) -> None:
        registration.timer_event = self.loop.schedule_in(
            registration.descriptor.timer_period_ms, "xapp-timer", self._on_timer, registration.xapp_id
        )

    def _on_timer(self, event) -> None:
        registration = self.xapps.get(event.payload)
        if registration is None or registration.timer_event != event.seq:
            return
        self._arm_timer(registration)
        self._call(registration.xapp_id, "on_timer", event.due)

    def _call(self, xapp_id: int, method: str, *args) -> None:
        registration = self.xapps.get(xapp_id)
        if registration is None:
            return
        callback = getattr(registration.handler, method, None)
        if callback is None:
            return
        if self._dispatching:
            raise ReentrantDispatchError(f"re-entrant dispatch of {method} to '{registration.descriptor.name}'")
        self._dispatching = True
        try:
            if method == "on_indication":
                registration.indications += 1
            elif method == "on_timer":
                registration.timer_calls += 1
            callback(*args)
        finally:
            self._dispatching = False

    def send_control(self, xapp_id: int, node_id: int, ue_id: int, command: HandoverCommand) -> None:
        self._send(node_id, self.termination.control(node_id, xapp_id, ue_id, command))
