"""
Transports for encoded E2 frames. Both are reliable, ordered and
message-preserving.
"""
import socket
from collections import deque
from typing import Callable, Deque, Optional, Tuple

from e2.codec import HEADER, HEADER_SIZE, TruncatedPayloadError

Receiver = Callable[[bytes], None]


class Endpoint:
    def __init__(self, transport: "InProcessTransport", name: str):
        self.transport = transport
        self.name = name
        self.peer: Optional["Endpoint"] = None
        self.receiver: Optional[Receiver] = None
        self.sent = 0

    def bind(self, receiver: Receiver):
        self.receiver = receiver

    def send(self, frame: bytes):
        self.sent += 1
        self.transport._queue.append((self.peer, frame))


class InProcessTransport:
    """Single FIFO shared by every link; frames are delivered by pump()."""

    def __init__(self):
        self._queue: Deque[Tuple[Endpoint, bytes]] = deque()
        self.delivered = 0

    def link(self, a: str, b: str) -> Tuple[Endpoint, Endpoint]:
        left, right = Endpoint(self, a), Endpoint(self, b)
        left.peer, right.peer = right, left
        return left, right

    @property
    def in_flight(self) -> int:
        return len(self._queue)

    def pump(self) -> int:
        count = 0
        while self._queue:
            endpoint, frame = self._queue.popleft()
            if endpoint.receiver is None:
                raise RuntimeError(f"endpoint {endpoint.name} has no receiver")
            endpoint.receiver(frame)
            count += 1
        self.delivered += count
        return count


class StreamTransport:
    """Carries frames over a connected stream socket using the header length field."""

    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, frame: bytes):
        self.sock.sendall(frame)

    def _read_exact(self, size: int) -> bytes:
        chunks = []
        remaining = size
        while remaining:
            chunk = self.sock.recv(remaining)
            if not chunk:
                raise TruncatedPayloadError(f"stream closed with {remaining} bytes outstanding")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def receive(self) -> bytes:
        header = self._read_exact(HEADER_SIZE)
        _, _, _, length = HEADER.unpack(header)
        return header + self._read_exact(length)

    def close(self):
        self.sock.close()
