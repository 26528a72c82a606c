"""
Use-case applications: uplink real-time video streaming towards the MEC
endpoint and a constant-bit-rate OTA software download.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from simulation.scenario import OtaConfig, StreamConfig
from traffic.link import Packet

logger = logging.getLogger(__name__)


def load_frame_trace(path) -> List[int]:
    """Frame sizes in bytes from a CSV with a `frame_bytes` column (or a bare first column)."""
    frame = pd.read_csv(path)
    column = "frame_bytes" if "frame_bytes" in frame.columns else frame.columns[0]
    sizes = [int(size) for size in frame[column]]
    if not sizes or min(sizes) <= 0:
        raise ValueError(f"frame trace {path} must hold positive frame sizes")
    return sizes


class StreamSource:
    """One packet per video frame, every frame_period_ms from t=0."""

    def __init__(self, config: StreamConfig, ue: int, rng: np.random.Generator):
        self.config = config
        self.ue = ue
        self.rng = rng
        self.sizes = config.frame_sizes or (load_frame_trace(config.trace_file) if config.trace_file else None)
        # log-normal with the configured mean
        self.mu = math.log(config.mean_frame_bytes) - config.sigma ** 2 / 2.0
        self.next_seq = 0

    def frame_bytes(self, seq: int) -> int:
        if self.sizes:
            return self.sizes[seq % len(self.sizes)]
        return max(1, int(round(self.rng.lognormal(self.mu, self.config.sigma))))

    def emit(self, t0: float, t1: float) -> List[Packet]:
        packets = []
        period = self.config.frame_period_ms
        while self.next_seq * period < t1:
            created = self.next_seq * period
            size = self.frame_bytes(self.next_seq)
            if created >= t0:
                packets.append(Packet(self.ue, "stream", self.next_seq, float(created), size * 8.0))
            self.next_seq += 1
        return packets


class OtaSource:
    """ceil(total / packet) packets at a fixed interval; the last one carries the remainder."""

    def __init__(self, config: OtaConfig, ue: int):
        self.config = config
        self.ue = ue
        self.count = math.ceil(config.total_bytes / config.packet_bytes)
        self.next_seq = 0

    @property
    def offered_bps(self) -> float:
        return self.config.packet_bytes * 8.0 / (self.config.interval_ms / 1000.0)

    def packet_bytes(self, seq: int) -> int:
        if seq == self.count - 1:
            return self.config.total_bytes - (self.count - 1) * self.config.packet_bytes
        return self.config.packet_bytes

    def emit(self, t0: float, t1: float) -> List[Packet]:
        packets = []
        while self.next_seq < self.count:
            created = self.config.start_ms + self.next_seq * self.config.interval_ms
            if created >= t1:
                break
            if created >= t0:
                packets.append(Packet(self.ue, "ota", self.next_seq, float(created), self.packet_bytes(self.next_seq) * 8.0))
            self.next_seq += 1
        return packets


class OtaReceiver:
    def __init__(self, total_packets: int):
        self.total_packets = total_packets
        self.received = 0
        self.completion_ms: Optional[float] = None

    def deliver(self, delivered_at: float):
        self.received += 1
        if self.received == self.total_packets:
            self.completion_ms = delivered_at


@dataclass(frozen=True)
class FreezeEvent:
    start: float
    duration: float


def stream_receiver(arrivals: Sequence[float], frame_period_ms: float, prebuffer_frames: int = 3) -> List[FreezeEvent]:
    """
    Playback of frames 0..n-1 arriving at `arrivals[n]`.

    Playback starts once the prebuffer is complete; frame n is shown at
    max(arrival_n, display_{n-1} + period) and any longer gap than one
    period is a freeze of (gap - period).
    """
    if len(arrivals) < prebuffer_frames:
        return []
    display = max(arrivals[:prebuffer_frames])
    freezes = []
    for arrival in arrivals[1:]:
        due = display + frame_period_ms
        shown = max(arrival, due)
        if shown > due:
            freezes.append(FreezeEvent(start=due, duration=shown - due))
        display = shown
    return freezes
