"""Meta-events, composite records and the log archive.

A watched event produces one :class:`MetaEvent` carrying its tick span and
any value changes the event reported.  Merge rules gather a packet's
meta-events into a :class:`CompositeRecord` once the packet's sequence is
complete.  :class:`LogManager` keeps both kinds of record in emission order.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .events import EventInstance

__all__ = [
    "Severity",
    "MergeRule",
    "MonitorConfig",
    "MetaEvent",
    "CompositeRecord",
    "LogManager",
    "Monitor",
    "severity_of",
    "observe",
    "merge",
    "append",
    "query",
    "parse_kinds",
    "parse_merge",
]

ALL_KINDS = tuple(f"E{i}" for i in range(1, 61))
_ALERT_KINDS = frozenset({"E29", "E40", "E60"})


class Severity:
    INFO = "info"
    WARNING = "warning"
    ALERT = "alert"


def severity_of(event: EventInstance) -> str:
    reason = event.attributes.get("reason")
    if event.kind in _ALERT_KINDS or reason == "implicit-deny":
        return Severity.ALERT
    if reason == "decrypt-error":
        return Severity.WARNING
    return Severity.INFO


def parse_kinds(text: str | Iterable[str]) -> frozenset[str]:
    """``"E3,E4"`` or an iterable of kind names; ``"all"`` gives every kind."""
    items = text.split(",") if isinstance(text, str) else list(text)
    items = [i.strip().upper() for i in items if i.strip()]
    if items == ["ALL"]:
        return frozenset(ALL_KINDS)
    bad = [i for i in items if i not in ALL_KINDS]
    if bad:
        raise ValueError(f"unknown event kind(s): {', '.join(bad)}")
    return frozenset(items)


@dataclass(frozen=True)
class MergeRule:
    name: str
    members: frozenset[str]

    def __post_init__(self):
        if not self.name:
            raise ValueError("merge rule needs a name")
        if not self.members:
            raise ValueError(f"merge rule {self.name!r} has no members")


def parse_merge(text: str) -> MergeRule:
    """``NAME=K1,K2,...``"""
    name, sep, kinds = text.partition("=")
    if not sep:
        raise ValueError(f"merge spec {text!r} is not NAME=K1,K2,...")
    return MergeRule(name.strip(), parse_kinds(kinds))


@dataclass(frozen=True)
class MonitorConfig:
    watched: frozenset[str] = frozenset(ALL_KINDS)
    merge_rules: tuple[MergeRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "watched", parse_kinds(self.watched)
                           if isinstance(self.watched, str) else frozenset(self.watched))
        object.__setattr__(self, "merge_rules", tuple(self.merge_rules))
        names = set()
        for rule in self.merge_rules:
            if rule.name in names:
                raise ValueError(f"duplicate merge rule {rule.name!r}")
            names.add(rule.name)
            extra = rule.members - self.watched
            if extra:
                raise ValueError(f"merge rule {rule.name!r} uses unwatched kinds "
                                 f"{', '.join(sorted(extra, key=_num))}")

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "MonitorConfig":
        """Build from a config file's ``monitor`` section."""
        watched = parse_kinds(doc.get("watch", "all"))
        rules = [MergeRule(n, parse_kinds(m)) for n, m in (doc.get("merge") or {}).items()]
        return cls(watched, tuple(rules))


def _num(kind: str) -> int:
    return int(kind[1:])


@dataclass(frozen=True)
class MetaEvent:
    id: str
    event_seq: int
    packet: str
    kind: str
    start: int
    end: int
    severity: str
    changes: Mapping[str, tuple[Any, Any]] = field(default_factory=dict)
    wall_time: float | None = None

    @property
    def period(self) -> int:
        return self.end - self.start

    def to_record(self) -> dict:
        rec = {
            "meta": self.id,
            "event_seq": self.event_seq,
            "packet": self.packet,
            "start": self.start,
            "end": self.end,
            "period": self.period,
            "severity": self.severity,
            "changes": {k: list(v) for k, v in self.changes.items()},
        }
        if self.wall_time is not None:
            rec["wall_time"] = self.wall_time
        return rec


@dataclass(frozen=True)
class CompositeRecord:
    name: str
    packet: str
    members: tuple[MetaEvent, ...]
    span_start: int
    span_end: int

    @property
    def period(self) -> int:
        return self.span_end - self.span_start

    def to_record(self) -> dict:
        return {
            "composite": self.name,
            "packet": self.packet,
            "members": [m.event_seq for m in self.members],
            "span": [self.span_start, self.span_end],
        }


Record = MetaEvent | CompositeRecord


def observe(event: EventInstance, config: MonitorConfig, *, wall_clock: bool = False
            ) -> MetaEvent | None:
    if event.kind not in config.watched:
        return None
    raw = event.attributes.get("changes") or {}
    changes = {name: (pair[0], pair[1]) for name, pair in raw.items()}
    return MetaEvent(
        id=f"M{_num(event.kind)}",
        event_seq=event.seq,
        packet=event.packet,
        kind=event.kind,
        start=event.start_tick,
        end=event.end_tick,
        severity=severity_of(event),
        changes=changes,
        wall_time=time.time() if wall_clock else None,
    )


def merge(metas: Sequence[MetaEvent], rule: MergeRule) -> CompositeRecord:
    if not metas:
        raise ValueError(f"merge rule {rule.name!r} got no meta-events")
    packets = {m.packet for m in metas}
    if len(packets) != 1:
        raise ValueError(f"merge rule {rule.name!r} got meta-events of packets {sorted(packets)}")
    stray = {m.kind for m in metas} - rule.members
    if stray:
        raise ValueError(f"merge rule {rule.name!r} does not cover {sorted(stray, key=_num)}")
    return CompositeRecord(rule.name, metas[0].packet, tuple(metas),
                           min(m.start for m in metas), max(m.end for m in metas))


class LogManager:
    """Append-only archive.  Writers are serialized; readers see a prefix."""

    def __init__(self):
        self._archive: list[Record] = []
        self._by_packet: dict[str, list[int]] = {}
        self._by_kind: dict[str, list[int]] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._archive)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records())

    def records(self) -> tuple[Record, ...]:
        with self._lock:
            return tuple(self._archive)

    def append(self, record: Record) -> "LogManager":
        if not isinstance(record, (MetaEvent, CompositeRecord)):
            raise TypeError(f"cannot archive {type(record).__name__}")
        with self._lock:
            pos = len(self._archive)
            self._archive.append(record)
            self._by_packet.setdefault(record.packet, []).append(pos)
            if isinstance(record, MetaEvent):
                self._by_kind.setdefault(record.kind, []).append(pos)
        return self

    def query(self, packet: str | None = None, kind: str | None = None,
              ticks: tuple[int, int] | None = None) -> list[Record]:
        """Records matching every given filter, in archive order.

        ``kind`` selects meta-events of that kind; ``ticks`` keeps records whose
        span overlaps the closed range.
        """
        with self._lock:
            archive = self._archive
            if packet is not None and kind is not None:
                kinds = set(self._by_kind.get(kind, ()))
                positions = [p for p in self._by_packet.get(packet, ()) if p in kinds]
            elif packet is not None:
                positions = list(self._by_packet.get(packet, ()))
            elif kind is not None:
                positions = list(self._by_kind.get(kind, ()))
            else:
                positions = range(len(archive))
            found = [archive[p] for p in positions]
        if ticks is not None:
            lo, hi = ticks
            found = [r for r in found if _span(r)[0] <= hi and _span(r)[1] >= lo]
        return found

    def dumps(self) -> str:
        return "".join(json.dumps(r.to_record()) + "\n" for r in self.records())


def _span(r: Record) -> tuple[int, int]:
    if isinstance(r, MetaEvent):
        return r.start, r.end
    return r.span_start, r.span_end


def append(manager: LogManager, record: Record) -> LogManager:
    return manager.append(record)


def query(manager: LogManager, **filters) -> list[Record]:
    return manager.query(**filters)


class Monitor:
    """Observes whole per-packet sequences and files the results."""

    def __init__(self, config: MonitorConfig = MonitorConfig(), log: LogManager | None = None,
                 *, wall_clock: bool = False):
        self.config = config
        self.log = log if log is not None else LogManager()
        self.wall_clock = wall_clock

    def observe_packet(self, events: Sequence[EventInstance]) -> list[Record]:
        metas = [m for m in (observe(e, self.config, wall_clock=self.wall_clock) for e in events)
                 if m is not None]
        out: list[Record] = list(metas)
        for rule in self.config.merge_rules:
            members = [m for m in metas if m.kind in rule.members]
            if members:
                out.append(merge(members, rule))
        for r in out:
            self.log.append(r)
        return out
