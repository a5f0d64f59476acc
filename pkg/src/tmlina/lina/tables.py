"""Packets, LINA tables and their document formats.

Config documents are JSON objects with ``destinations``, ``nat_table``,
``routes``, ``prefilter`` and ``acl`` arrays; traces are newline-delimited
JSON, one packet per line.  Parse errors carry the line number and the field
path of the offending value.
"""

from __future__ import annotations

import enum
import ipaddress
import json
import json.decoder
import json.scanner
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

__all__ = [
    "ParseError",
    "Header",
    "Packet",
    "RouteEntry",
    "PrefilterAction",
    "PrefilterEntry",
    "AclAction",
    "TrustMode",
    "AclRule",
    "Tables",
    "load_tables",
    "decode_document",
    "parse_tables",
    "parse_packet",
    "read_trace",
    "packet_to_record",
    "Counter",
]


class ParseError(ValueError):
    def __init__(self, message: str, *, line: int | None = None, field: str | None = None,
                 source: str | None = None):
        self.line, self.field, self.source, self.reason = line, field, source, message
        where = ":".join(str(p) for p in (source, line) if p is not None)
        prefix = f"{where}: " if where else ""
        at = f"{field}: " if field else ""
        super().__init__(f"{prefix}{at}{message}")


class _LinedDict(dict):
    line: int = 0


def _lined_loads(text: str):
    """json.loads that records the starting line of every object."""
    decoder = json.JSONDecoder()

    def parse_object(s_and_end, *args):
        s, end = s_and_end
        obj, new_end = json.decoder.JSONObject(s_and_end, *args)
        d = _LinedDict(obj)
        d.line = s.count("\n", 0, end) + 1
        return d, new_end

    decoder.parse_object = parse_object
    decoder.scan_once = json.scanner.py_make_scanner(decoder)
    return decoder.decode(text)


def _addr(value, where, line=None) -> ipaddress.IPv4Address:
    try:
        if not isinstance(value, str):
            raise ValueError
        return ipaddress.IPv4Address(value)
    except ValueError:
        raise ParseError(f"not an IPv4 address: {value!r}", line=line, field=where) from None


def _net(value, where, line=None) -> ipaddress.IPv4Network:
    try:
        if not isinstance(value, str):
            raise ValueError
        return ipaddress.IPv4Network(value, strict=False)
    except ValueError:
        raise ParseError(f"not an IPv4 prefix: {value!r}", line=line, field=where) from None


@dataclass(frozen=True)
class Header:
    source: ipaddress.IPv4Address
    destination: ipaddress.IPv4Address
    protocol: str = "ip"

    @classmethod
    def of(cls, source: str, destination: str, protocol: str = "ip") -> "Header":
        return cls(_addr(source, "src"), _addr(destination, "dst"), protocol)

    def to_record(self) -> dict:
        return {"src": str(self.source), "dst": str(self.destination), "proto": self.protocol}


@dataclass(frozen=True)
class Packet:
    id: str
    outer: Header
    inner: Header | None = None
    payload_fragments: tuple[bytes, ...] = ()
    encrypted: bool = False
    arrival_tick: int = 0


@dataclass(frozen=True)
class RouteEntry:
    match: ipaddress.IPv4Network
    new_destination: ipaddress.IPv4Address


class PrefilterAction(enum.Enum):
    FASTPATH = "fastpath"
    ANALYZE = "analyze"


@dataclass(frozen=True)
class PrefilterEntry:
    source_match: ipaddress.IPv4Network
    action: PrefilterAction


class AclAction(enum.Enum):
    TRUST = "trust"
    MONITOR = "monitor"
    ALLOW = "allow"
    BLOCK = "block"
    BLOCK_WITH_RESET = "block_reset"
    INTERACTIVE_BLOCK = "interactive_block"
    INTERACTIVE_BLOCK_WITH_RESET = "interactive_block_reset"
    DENY = "deny"


class TrustMode(enum.Enum):
    TRUSTED = "trusted"
    PERMITTED = "permitted"


# Accepted spellings beyond the canonical config words.
_ACL_ALIASES = {
    "block with reset": AclAction.BLOCK_WITH_RESET,
    "block_with_reset": AclAction.BLOCK_WITH_RESET,
    "interactive block": AclAction.INTERACTIVE_BLOCK,
    "interactive block with reset": AclAction.INTERACTIVE_BLOCK_WITH_RESET,
    "interactive_block_with_reset": AclAction.INTERACTIVE_BLOCK_WITH_RESET,
}


@dataclass(frozen=True)
class AclRule:
    source_match: ipaddress.IPv4Network
    action: AclAction
    trust_mode: TrustMode | None = None

    def __post_init__(self):
        if (self.action is AclAction.TRUST) != (self.trust_mode is not None):
            raise ValueError("trust_mode is required for trust rules and only for them")


@dataclass(frozen=True)
class Tables:
    destinations: tuple[ipaddress.IPv4Address, ...] = ()
    nat_table: tuple[ipaddress.IPv4Address, ...] = ()
    routes: tuple[RouteEntry, ...] = ()
    prefilter: tuple[PrefilterEntry, ...] = ()
    acl: tuple[AclRule, ...] = ()

    def __post_init__(self):
        if len(set(self.destinations)) != len(self.destinations):
            raise ValueError("destination list has duplicates")


def _line(obj, default=None):
    return getattr(obj, "line", default)


def _list(doc, key, line):
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise ParseError("expected an array", line=line, field=key)
    return value


def _obj(entry, where, line):
    if not isinstance(entry, dict):
        raise ParseError("expected an object", line=line, field=where)
    return _line(entry, line)


def parse_tables(doc: Any, *, line: int | None = None) -> Tables:
    """Build :class:`Tables` from an already decoded config document."""
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object", line=line)
    top = _line(doc, line)

    dests = []
    for i, d in enumerate(_list(doc, "destinations", top)):
        a = _addr(d, f"destinations[{i}]", top)
        if a in dests:
            raise ParseError(f"duplicate destination {d!r}", line=top, field=f"destinations[{i}]")
        dests.append(a)
    nat = [_addr(d, f"nat_table[{i}]", top) for i, d in enumerate(_list(doc, "nat_table", top))]

    routes = []
    for i, r in enumerate(_list(doc, "routes", top)):
        where = f"routes[{i}]"
        ln = _obj(r, where, top)
        routes.append(
            RouteEntry(_net(r.get("match"), f"{where}.match", ln),
                       _addr(r.get("new_destination"), f"{where}.new_destination", ln))
        )

    prefilter = []
    for i, p in enumerate(_list(doc, "prefilter", top)):
        where = f"prefilter[{i}]"
        ln = _obj(p, where, top)
        try:
            action = PrefilterAction(str(p.get("action", "")).lower())
        except ValueError:
            raise ParseError(f"unknown prefilter action {p.get('action')!r}",
                             line=ln, field=f"{where}.action") from None
        prefilter.append(PrefilterEntry(_net(p.get("source"), f"{where}.source", ln), action))

    acl = []
    for i, r in enumerate(_list(doc, "acl", top)):
        where = f"acl[{i}]"
        ln = _obj(r, where, top)
        word = str(r.get("action", "")).lower()
        try:
            action = _ACL_ALIASES.get(word) or AclAction(word)
        except ValueError:
            raise ParseError(f"unknown acl action {r.get('action')!r}",
                             line=ln, field=f"{where}.action") from None
        mode = r.get("trust_mode")
        if action is AclAction.TRUST:
            try:
                mode = TrustMode(str(mode).lower())
            except ValueError:
                raise ParseError(f"trust rule needs trust_mode trusted|permitted, got {mode!r}",
                                 line=ln, field=f"{where}.trust_mode") from None
        elif mode is not None:
            raise ParseError("trust_mode is only valid on trust rules", line=ln,
                             field=f"{where}.trust_mode")
        acl.append(AclRule(_net(r.get("source"), f"{where}.source", ln), action, mode))

    return Tables(tuple(dests), tuple(nat), tuple(routes), tuple(prefilter), tuple(acl))


def decode_document(text: str, *, source: str | None = None) -> Any:
    """Decode JSON text, remembering the line each object starts on."""
    try:
        return _lined_loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, source=source) from None


def load_tables(document: str | dict, *, source: str | None = None) -> Tables:
    """Parse a config document given as JSON text or as a decoded mapping."""
    if not isinstance(document, str):
        return parse_tables(document)
    doc = decode_document(document, source=source)
    try:
        return parse_tables(doc)
    except ParseError as exc:
        raise ParseError(exc.reason, line=exc.line, field=exc.field, source=source) from None


def _header(rec, where, line) -> Header:
    if not isinstance(rec, dict):
        raise ParseError("expected an object", line=line, field=where)
    proto = rec.get("proto", "ip")
    if not isinstance(proto, str):
        raise ParseError("proto must be text", line=line, field=f"{where}.proto")
    return Header(_addr(rec.get("src"), f"{where}.src", line),
                  _addr(rec.get("dst"), f"{where}.dst", line), proto)


def parse_packet(record: Any, *, line: int | None = None, arrival_tick: int = 0) -> Packet:
    if not isinstance(record, dict):
        raise ParseError("packet must be a JSON object", line=line)
    pid = record.get("id")
    if not isinstance(pid, (str, int)) or isinstance(pid, bool) or pid == "":
        raise ParseError("missing packet id", line=line, field="id")
    outer = _header(record.get("outer"), "outer", line)
    inner = record.get("inner")
    inner = None if inner is None else _header(inner, "inner", line)
    payload = record.get("payload", [])
    if not isinstance(payload, list) or not all(isinstance(p, str) for p in payload):
        raise ParseError("payload must be an array of strings", line=line, field="payload")
    encrypted = record.get("encrypted", False)
    if not isinstance(encrypted, bool):
        raise ParseError("encrypted must be true or false", line=line, field="encrypted")
    return Packet(str(pid), outer, inner, tuple(p.encode("utf-8") for p in payload),
                  encrypted, arrival_tick)


def read_trace(lines: Iterable[str], *, source: str | None = None) -> Iterator[Packet]:
    """Yield packets from NDJSON lines; blank lines are skipped."""
    seen = set()
    for n, text in enumerate(lines, 1):
        if not text.strip():
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=n, source=source) from None
        try:
            pkt = parse_packet(rec, line=n)
        except ParseError as exc:
            raise ParseError(exc.reason, line=n, field=exc.field, source=source) from None
        if pkt.id in seen:
            raise ParseError(f"duplicate packet id {pkt.id!r}", line=n, field="id", source=source)
        seen.add(pkt.id)
        yield pkt


def packet_to_record(p: Packet) -> dict:
    rec: dict[str, Any] = {"id": p.id, "outer": p.outer.to_record()}
    if p.inner is not None:
        rec["inner"] = p.inner.to_record()
    rec["payload"] = [f.decode("utf-8") for f in p.payload_fragments]
    rec["encrypted"] = p.encrypted
    return rec


@dataclass
class Counter:
    value: int = 0

    def increment(self) -> tuple[int, int]:
        old = self.value
        self.value += 1
        return old, self.value

