"""The sixty event kinds of the LINA dynamic model and their projection.

Each kind owns a region: a set of model elements.  An activation belongs to
the kind whose region holds its element; activations of elements outside
every region (storages, shared sinks) fall back to the arrow they arrived
by.  Consecutive activations of one packet that land in the same region form
one :class:`EventInstance`, spanning their first and last ticks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Mapping, Sequence

from .core import StaticModel
from .runtime import Activation

__all__ = [
    "EventKind",
    "EventInstance",
    "TERMINAL_KINDS",
    "LOOP_KINDS",
    "DROP_REASONS",
    "REGIONS",
    "SUB_EVENT_STEPS",
    "event_catalog",
    "catalog_index",
    "EventProjector",
    "event_record",
    "event_from_record",
]

_DESCRIPTIONS = [
    "A packet's arrival to LINA.",
    "The packet flows to the ingress interface.",
    "The packet's details are processed.",
    "The ingress interface's input counter is incremented.",
    "The payload is extracted and stored.",
    "The header is extracted.",
    "The destination is extracted.",
    "The destination flows to be compared.",
    "A destination form is retrieved from the destination table.",
    "The retrieved destination flows to be compared.",
    "The incoming destination and the retrieved destination are compared.",
    "A new destination is retrieved from the destination table.",
    "The incoming destination does not exist in the destination table.",
    "The incoming destination is found in the destination table.",
    "The payload is retrieved from data storage and flows to defragmentation.",
    "The payload is defragmented and stored.",
    "The packet flows to DAQ.",
    "The packet flows to VPN decrypt.",
    "The packet is decrypted and flows to Untranslate-NAT.",
    "A destination address is retrieved from the NAT table.",
    "The retrieved destination address flows to be compared.",
    "The incoming destination and the retrieved destination address are compared.",
    "A new destination address is retrieved from the NAT table.",
    "The incoming destination does not exist in the NAT table.",
    "A route is retrieved from the global route table.",
    "The retrieved route flows to be compared.",
    "The incoming destination and the retrieved route are compared.",
    "A new route is retrieved from the global route table.",
    "The incoming destination is not included in the global route table, and the packet is dropped.",
    "The incoming destination is found in the global route table.",
    "A new destination is set for the incoming packet.",
    "The packet flows to the prefilter policy.",
    "The outer header is extracted.",
    "The source is extracted.",
    "The source flows to be compared.",
    "A policy is retrieved from the prefilter policy table.",
    "The retrieved policy flows to be compared.",
    "The source and the policy are compared.",
    "A new policy is retrieved from the prefilter policy table.",
    "The source is not included in the prefilter policy table, and the packet is dropped.",
    "The source is found in the prefilter policy table with a fastpath policy.",
    "The packet flows to the flow update module.",
    "The source is found in the prefilter policy table with an analyze policy.",
    "The packet flows to L3/L4 ACL.",
    "The source is extracted.",
    "The source flows to be compared.",
    "A rule is retrieved from ACL.",
    "The retrieved rule flows to be compared.",
    "The source and the rule are compared.",
    "A new rule is retrieved from ACL.",
    "The source is found in ACL with a trust rule, and an action is performed on the packet.",
    "The packet flows to the flow update module using a trust action.",
    "The packet flows to DAQ using a permit action.",
    "The source is found in ACL with a monitor rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with an allow rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with a block rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with a block with reset rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with an interactive block rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with an interactive block with reset rule, and the packet flows to DAQ using a permit action.",
    "The source is found in ACL with a deny action, and the packet is dropped.",
]

TERMINAL_KINDS = frozenset(
    ["E17", "E29", "E40", "E42"] + [f"E{i}" for i in range(52, 61)]
)
LOOP_KINDS = frozenset(
    f"E{i}"
    for lo, hi in [(9, 12), (20, 23), (25, 28), (36, 39), (47, 50)]
    for i in range(lo, hi + 1)
)
# Drops that end a sequence without a terminal kind; the last event says why.
DROP_REASONS = frozenset({"implicit-deny", "decrypt-error"})


_PERMIT_ACTIONS = ("monitor", "allow", "block", "block_reset", "interactive_block",
                   "interactive_block_reset")


def _acl_region(action):
    return [
        f"acltable.{action}_found",
        f"acltable.{action}",
        f"acltable.release_{action}",
        f"acltable.to_daq_{action}",
        f"acltable.to_daq_{action}->daq.in",
    ]


REGIONS: dict[str, list[str]] = {
    "E1": ["asa.in", "lina.in"],
    "E2": ["ingress.in", "ingress.receive"],
    "E3": ["ingress.process"],
    "E4": ["counter.increment"],
    "E5": ["ingress.process->ingress.payload"],
    "E6": ["ingress.header"],
    "E7": ["ingress.read_header", "ingress.destination"],
    "E8": ["ingress.release_destination", "ingress.destination_out", "destlist.in",
           "destlist.receive"],
    "E9": ["destlist.fetch"],
    "E10": ["destlist.retrieved"],
    "E11": ["destlist.compare"],
    "E12": ["destlist.more", "destlist.fetch_next"],
    "E13": ["destlist.not_found"],
    "E14": ["destlist.found"],
    "E15": ["ingress.release_payload", "ingress.payload_out", "defrag.in", "defrag.receive"],
    "E16": ["defrag.defragment", "defrag.new_payload", "defrag.release", "defrag.out",
            "ingress.payload_in", "ingress.payload_receive",
            "ingress.payload_receive->ingress.payload"],
    "E17": ["destlist.release_daq", "destlist.to_daq", "destlist.to_daq->daq.in"],
    "E18": ["destlist.release_vpn", "destlist.to_vpn", "vpn.in", "vpn.receive", "vpn.decrypt"],
    "E19": ["vpn.release", "vpn.to_nat", "nat.in", "nat.receive"],
    "E20": ["nattable.fetch"],
    "E21": ["nattable.retrieved"],
    "E22": ["nattable.compare"],
    "E23": ["nattable.more", "nattable.fetch_next"],
    "E24": ["nattable.not_found"],
    "E25": ["egress.fetch"],
    "E26": ["egress.retrieved"],
    "E27": ["egress.compare"],
    "E28": ["egress.more", "egress.fetch_next"],
    "E29": ["egress.no_route", "egress.release_drop", "egress.to_drop", "drop.no_route"],
    "E30": ["egress.found"],
    "E31": ["egress.new_destination"],
    "E32": ["egress.release", "egress.to_prefilter", "nattable.release_prefilter",
            "nattable.to_prefilter", "prefilter.in", "prefilter.receive"],
    "E33": ["prefilter.process", "prefilter.outer_header"],
    "E34": ["prefilter.read_header", "prefilter.source"],
    "E35": ["prefilter.release_source", "prefilter.source_out", "pftable.in", "pftable.receive"],
    "E36": ["pftable.fetch"],
    "E37": ["pftable.retrieved"],
    "E38": ["pftable.compare"],
    "E39": ["pftable.more", "pftable.fetch_next"],
    "E40": ["pftable.no_policy", "pftable.release_drop", "pftable.to_drop", "drop.prefilter"],
    "E41": ["pftable.fastpath"],
    "E42": ["pftable.release_flow_update", "pftable.to_flow_update",
            "pftable.to_flow_update->flow_update.in"],
    "E43": ["pftable.analyze"],
    "E44": ["pftable.release_acl", "pftable.to_acl", "acl.in", "acl.receive"],
    "E45": ["acl.process", "acl.header", "acl.read_header", "acl.source"],
    "E46": ["acl.release_source", "acl.source_out", "acltable.in", "acltable.receive"],
    "E47": ["acltable.fetch"],
    "E48": ["acltable.retrieved"],
    "E49": ["acltable.compare"],
    "E50": ["acltable.more", "acltable.fetch_next"],
    "E51": ["acltable.trust_found", "acltable.trust"],
    "E52": ["acltable.release_trusted", "acltable.to_flow_update",
            "acltable.to_flow_update->flow_update.in"],
    "E53": ["acltable.release_permitted", "acltable.to_daq_permitted",
            "acltable.to_daq_permitted->daq.in"],
    **{f"E{54 + i}": _acl_region(a) for i, a in enumerate(_PERMIT_ACTIONS)},
    "E60": ["acltable.deny_found", "acltable.release_deny", "acltable.to_drop", "drop.deny"],
}

# Anchored steps deliberately left outside every region.
SUB_EVENT_STEPS = {
    28: "nat.process",
    29: "nat.header",
    30: "nat.process_header",
    31: "nat.destination",
    32: "nat.destination->nat.release_destination",
    39: "egress.in",
    40: "nattable.found",
}


# Anchors carried by arrows and tables rather than by activated stages.
_EXTRA_ANCHORS = {
    "E4": {5},
    "E9": {11},
    "E20": {34},
    "E21": {35},
    "E25": {41, 43},
    "E26": {44},
    "E31": {49},
    "E36": {56},
    "E47": {68},
}


@dataclass(frozen=True)
class EventKind:
    id: str
    number: int
    description: str
    region: frozenset[int]
    terminal: bool
    repeatable: bool


@dataclass(frozen=True)
class EventInstance:
    seq: int
    kind: str
    packet: str
    start_tick: int
    end_tick: int
    attributes: Mapping[str, Any] = field(default_factory=dict)


def _region_anchors(model: StaticModel, names: Iterable[str]) -> frozenset[int]:
    out = set()
    for n in names:
        e = model.element(n)
        if e.anchor is not None:
            out.add(e.anchor)
        # an arrow's anchor counts too, and so does the storage it feeds
        tgt = getattr(e, "target", None)
        if tgt is not None and model.element(tgt).anchor is not None:
            out.add(model.element(tgt).anchor)
    return frozenset(out)


@lru_cache(maxsize=None)
def _catalog() -> tuple[EventKind, ...]:
    from .lina.model import build_lina_model

    model = build_lina_model()
    kinds = []
    for n, text in enumerate(_DESCRIPTIONS, 1):
        kid = f"E{n}"
        region = set(_region_anchors(model, REGIONS[kid])) | _EXTRA_ANCHORS.get(kid, set())
        kinds.append(
            EventKind(kid, n, text, frozenset(region), kid in TERMINAL_KINDS, kid in LOOP_KINDS)
        )
    return tuple(kinds)


def event_catalog() -> list[EventKind]:
    """E1 through E60, in order."""
    return list(_catalog())


def catalog_index() -> dict[str, EventKind]:
    return {k.id: k for k in _catalog()}


class EventProjector:
    """Turns a packet's activations into its event sequence."""

    def __init__(self, model: StaticModel, regions: Mapping[str, Sequence[str]] = REGIONS):
        self.model = model
        self.kind_of: dict[int, str] = {}
        for kind, names in regions.items():
            for n in names:
                eid = model.id_of(n)
                if eid in self.kind_of:
                    raise ValueError(f"{n!r} is in both {self.kind_of[eid]} and {kind}")
                self.kind_of[eid] = kind

    def kind(self, activation: Activation) -> str | None:
        k = self.kind_of.get(activation.element)
        if k is None and activation.via is not None:
            k = self.kind_of.get(activation.via)
        return k

    def project(self, activations: Iterable[Activation], packet: str, first_seq: int = 0
                ) -> list[EventInstance]:
        runs: list[list] = []  # [kind, start, end, attrs]
        for act in activations:
            if act.origin != packet:
                continue
            k = self.kind(act)
            if k is None:
                if act.notes and runs:
                    runs[-1][3].update(act.notes)
                continue
            if runs and runs[-1][0] == k:
                runs[-1][2] = act.tick
                runs[-1][3].update(act.notes)
            else:
                runs.append([k, act.tick, act.tick, dict(act.notes)])
        return [
            EventInstance(first_seq + i, k, packet, s, e, attrs)
            for i, (k, s, e, attrs) in enumerate(runs)
        ]


def event_record(ev: EventInstance) -> dict:
    return {
        "seq": ev.seq,
        "kind": ev.kind,
        "packet": ev.packet,
        "start": ev.start_tick,
        "end": ev.end_tick,
        "attrs": dict(ev.attributes),
    }


def event_from_record(rec: Mapping[str, Any]) -> EventInstance:
    try:
        return EventInstance(
            int(rec["seq"]), str(rec["kind"]), str(rec["packet"]),
            int(rec["start"]), int(rec["end"]), dict(rec.get("attrs") or {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed event record: {exc}") from None


def dumps_event(ev: EventInstance) -> str:
    return json.dumps(event_record(ev), separators=(", ", ": "))
