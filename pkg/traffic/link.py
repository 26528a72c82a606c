"""
Fluid CQI-driven link: every tick drains efficiency[cqi] * bandwidth_share
bits per second from a FIFO queue. Handover interruptions zero the capacity
for a while without dropping anything.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, List

from simulation.scenario import LinkModel

logger = logging.getLogger(__name__)


@dataclass
class Packet:
    ue: int
    app: str
    seq: int
    created: float  # ms
    size_bits: float
    remaining_bits: float = -1.0

    def __post_init__(self):
        if self.remaining_bits < 0:
            self.remaining_bits = self.size_bits


@dataclass(frozen=True)
class Delivery:
    packet: Packet
    delivered_at: float  # ms, propagation included
    delay_ms: float


@dataclass
class ServiceResult:
    deliveries: List[Delivery]
    served_bits: float


class LinkQueue:
    def __init__(self, name: str = ""):
        self.name = name
        self.packets: Deque[Packet] = deque()
        self.outage_until = 0.0
        self.enqueued = 0
        self.delivered = 0

    def enqueue(self, packet: Packet):
        self.packets.append(packet)
        self.enqueued += 1

    def __len__(self) -> int:
        return len(self.packets)

    @property
    def backlog_bits(self) -> float:
        return sum(packet.remaining_bits for packet in self.packets)


def link_rate_bps(link: LinkModel, cqi: int) -> float:
    return link.cqi_efficiency[cqi] * link.bandwidth_share


def serve_queue(link: LinkModel, cqi: int, queue: LinkQueue, now: float, dt: float) -> ServiceResult:
    """
    Drain the queue over [now, now + dt). A packet never starts service before
    it was created; delay = completion - creation + propagation.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    end = now + dt
    rate = link_rate_bps(link, cqi) / 1000.0  # bits per ms
    cursor = max(now, queue.outage_until)
    deliveries: List[Delivery] = []
    served = 0.0
    if rate <= 0.0:
        return ServiceResult(deliveries, served)
    while queue.packets and cursor < end:
        packet = queue.packets[0]
        begin = max(cursor, packet.created)
        if begin >= end:
            break
        available = rate * (end - begin)
        if packet.remaining_bits <= available:
            finish = begin + packet.remaining_bits / rate
            served += packet.remaining_bits
            packet.remaining_bits = 0.0
            queue.packets.popleft()
            queue.delivered += 1
            delivered_at = finish + link.propagation_ms
            deliveries.append(Delivery(packet, delivered_at, delivered_at - packet.created))
            cursor = finish
        else:
            packet.remaining_bits -= available
            served += available
            cursor = end
    return ServiceResult(deliveries, served)


def apply_handover_interruption(queue: LinkQueue, now: float, interruption_ms: float):
    """Zero capacity over [now, now + interruption_ms); queued packets are kept."""
    queue.outage_until = max(queue.outage_until, now + interruption_ms)
