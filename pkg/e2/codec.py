"""
Binary codec for E2 messages.

Frame: magic 0x45 0x32 | version 0x01 | type u8 | payload length u32 | payload.
Integers are big-endian, floats IEEE-754 binary64 big-endian, strings carry a
u16 byte length followed by UTF-8, lists a u16 element count.
"""
import struct

from e2.messages import (
    MESSAGE_TYPES,
    ControlStatus,
    E2Message,
    E2SetupRequest,
    E2SetupResponse,
    HandoverCommand,
    MessageType,
    RanFunction,
    RicControlAck,
    RicControlRequest,
    RicIndication,
    RicSubscriptionRequest,
    RicSubscriptionResponse,
)
from simulation.radio import MeasurementReport

MAGIC = b"\x45\x32"
VERSION = 0x01
HEADER = struct.Struct(">2sBBI")
HEADER_SIZE = HEADER.size
MAX_STRING = 0xFFFF
MAX_COUNT = 0xFFFF


class CodecError(ValueError):
    pass


class EncodeError(CodecError):
    pass


class BadMagicError(CodecError):
    pass


class UnsupportedVersionError(CodecError):
    pass


class UnknownMessageTypeError(CodecError):
    pass


class LengthMismatchError(CodecError):
    pass


class TruncatedPayloadError(CodecError):
    pass


class _Writer:
    def __init__(self):
        self.parts = []

    def u8(self, value):
        self.parts.append(struct.pack(">B", value))

    def u16(self, value):
        self.parts.append(struct.pack(">H", value))

    def u32(self, value):
        self.parts.append(struct.pack(">I", value))

    def u64(self, value):
        self.parts.append(struct.pack(">Q", value))

    def f64(self, value):
        self.parts.append(struct.pack(">d", value))

    def string(self, value: str):
        raw = value.encode("utf-8")
        if len(raw) > MAX_STRING:
            raise EncodeError(f"string of {len(raw)} bytes exceeds {MAX_STRING}")
        self.u16(len(raw))
        self.parts.append(raw)

    def count(self, value: int):
        if value > MAX_COUNT:
            raise EncodeError(f"list of {value} elements exceeds {MAX_COUNT}")
        self.u16(value)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def _take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise TruncatedPayloadError(f"payload truncated at offset {self.offset}")
        (value,) = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return value

    def u8(self):
        return self._take(">B")

    def u16(self):
        return self._take(">H")

    def u32(self):
        return self._take(">I")

    def u64(self):
        return self._take(">Q")

    def f64(self):
        return self._take(">d")

    def string(self) -> str:
        size = self.u16()
        if self.offset + size > len(self.data):
            raise TruncatedPayloadError(f"string truncated at offset {self.offset}")
        raw = self.data[self.offset:self.offset + size]
        self.offset += size
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise CodecError(f"invalid UTF-8 string: {e}") from e

    def boolean(self) -> bool:
        value = self.u8()
        if value > 1:
            raise CodecError(f"invalid boolean byte {value}")
        return value == 1


def _write_report(w: _Writer, report: MeasurementReport):
    w.u32(report.ue)
    w.u64(report.t)
    w.u32(report.serving)
    w.count(len(report.entries))
    for cell, value in report.entries:
        w.u32(cell)
        w.f64(value)
    w.f64(report.sinr)
    w.u8(report.cqi)


def _read_report(r: _Reader) -> MeasurementReport:
    ue = r.u32()
    t = r.u64()
    serving = r.u32()
    entries = tuple((r.u32(), r.f64()) for _ in range(r.u16()))
    sinr = r.f64()
    cqi = r.u8()
    return MeasurementReport(ue=ue, t=t, serving=serving, entries=entries, sinr=sinr, cqi=cqi)


def _encode_payload(msg: E2Message) -> bytes:
    w = _Writer()
    if isinstance(msg, E2SetupRequest):
        w.u32(msg.node_id)
        w.count(len(msg.ran_functions))
        for function in msg.ran_functions:
            w.u16(function.id)
            w.string(function.name)
            w.string(function.description)
    elif isinstance(msg, E2SetupResponse):
        w.u32(msg.node_id)
        w.u8(int(msg.accepted))
    elif isinstance(msg, RicSubscriptionRequest):
        w.u32(msg.requestor_id)
        w.u32(msg.subscription_id)
        w.u16(msg.ran_function_id)
        w.u32(msg.report_period_ms)
    elif isinstance(msg, RicSubscriptionResponse):
        w.u32(msg.subscription_id)
        w.u8(int(msg.accepted))
    elif isinstance(msg, RicIndication):
        w.u32(msg.subscription_id)
        _write_report(w, msg.report)
    elif isinstance(msg, RicControlRequest):
        w.u32(msg.node_id)
        w.u32(msg.ue_id)
        w.u32(msg.control.target_cell)
        w.u32(msg.control.ttt_ms)
    elif isinstance(msg, RicControlAck):
        w.u8(int(msg.status))
    else:
        raise EncodeError(f"cannot encode {type(msg).__name__}")
    return w.getvalue()


def _decode_payload(kind: MessageType, r: _Reader) -> E2Message:
    if kind == MessageType.E2_SETUP_REQUEST:
        node_id = r.u32()
        functions = tuple(RanFunction(id=r.u16(), name=r.string(), description=r.string()) for _ in range(r.u16()))
        return E2SetupRequest(node_id=node_id, ran_functions=functions)
    if kind == MessageType.E2_SETUP_RESPONSE:
        return E2SetupResponse(node_id=r.u32(), accepted=r.boolean())
    if kind == MessageType.RIC_SUBSCRIPTION_REQUEST:
        return RicSubscriptionRequest(
            requestor_id=r.u32(), subscription_id=r.u32(), ran_function_id=r.u16(), report_period_ms=r.u32()
        )
    if kind == MessageType.RIC_SUBSCRIPTION_RESPONSE:
        return RicSubscriptionResponse(subscription_id=r.u32(), accepted=r.boolean())
    if kind == MessageType.RIC_INDICATION:
        return RicIndication(subscription_id=r.u32(), report=_read_report(r))
    if kind == MessageType.RIC_CONTROL_REQUEST:
        node_id, ue_id, target, ttt = r.u32(), r.u32(), r.u32(), r.u32()
        return RicControlRequest(node_id=node_id, ue_id=ue_id, control=HandoverCommand(target, ttt))
    status = r.u8()
    try:
        return RicControlAck(status=ControlStatus(status))
    except ValueError as e:
        raise CodecError(f"unknown control status {status}") from e


def encode(msg: E2Message) -> bytes:
    kind = MESSAGE_TYPES.get(type(msg))
    if kind is None:
        raise EncodeError(f"cannot encode {type(msg).__name__}")
    try:
        payload = _encode_payload(msg)
    except struct.error as e:
        raise EncodeError(f"field out of range in {type(msg).__name__}: {e}") from e
    try:
        header = HEADER.pack(MAGIC, VERSION, int(kind), len(payload))
    except struct.error as e:
        raise EncodeError(f"payload of {len(payload)} bytes does not fit the length field") from e
    return header + payload


def decode(data: bytes) -> E2Message:
    if len(data) < HEADER_SIZE:
        if data[:2] != MAGIC[:len(data[:2])]:
            raise BadMagicError("bad magic")
        raise TruncatedPayloadError(f"frame of {len(data)} bytes is shorter than the header")
    magic, version, kind, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic.hex()}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    try:
        message_type = MessageType(kind)
    except ValueError as e:
        raise UnknownMessageTypeError(f"unknown message type {kind}") from e
    payload = data[HEADER_SIZE:]
    if len(payload) < length:
        raise TruncatedPayloadError(f"payload has {len(payload)} of {length} bytes")
    if len(payload) > length:
        raise LengthMismatchError(f"frame carries {len(payload) - length} bytes beyond the declared length")
    reader = _Reader(payload)
    msg = _decode_payload(message_type, reader)
    if reader.offset != length:
        raise LengthMismatchError(f"declared length {length} but payload parsed to {reader.offset} bytes")
    return msg
