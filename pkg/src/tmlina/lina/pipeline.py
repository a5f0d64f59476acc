"""Packet processing on the TM runtime.

:class:`Simulator` owns one engine loaded with the LINA model and the stage
handlers below.  Packets are processed one at a time; the logical clock, the
input counter and the event sequence numbers run on across packets.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping, Sequence

from ..core import StaticModel
from ..events import EventInstance, EventProjector
from ..runtime import DEFAULT_TICK_BUDGET, Engine, ExecutionError, HandlerResult, Thing
from .model import ACL_ACTIONS, INGRESS, SINKS, build_lina_model
from .ops import (
    DecryptError,
    Disposition,
    Dropped,
    ToDAQ,
    ToFlowUpdate,
    defragment,
    dest_matches,
    prefix_matches,
    vpn_decrypt,
)
from .tables import AclAction, Counter, Packet, PrefilterAction, Tables, TrustMode

__all__ = ["Simulator", "process_packet"]

_ACL_OUTCOME = {AclAction.TRUST: "acltable.trust_found", AclAction.DENY: "acltable.deny_found"}
_ACL_OUTCOME.update({AclAction(a): f"acltable.{a}_found" for a in ACL_ACTIONS})


class Simulator:
    """Runs packets through LINA against fixed ``tables``."""

    def __init__(self, tables: Tables, tick_budget: int = DEFAULT_TICK_BUDGET,
                 model: StaticModel | None = None):
        self.tables = tables
        self.model = model or build_lina_model()
        self.engine = Engine(self.model, tick_budget)
        self.counter = Counter()
        self.projector = EventProjector(self.model)
        self.next_seq = 0
        self.packets = 0
        self._register()

    # -- wiring -------------------------------------------------------------

    def _arrow(self, src: str, dst: str) -> int:
        return self.model.id_of(f"{src}->{dst}")

    def _on(self, stage: str, fn: Callable[[Mapping[str, Any]], HandlerResult | None]):
        self.engine.register_handler(stage, lambda attrs, view: fn(attrs))

    def _register(self):
        t = self.tables
        a = self._arrow

        # packet entry
        counter_trigger = a("ingress.process", "counter.increment")
        to_payload = a("ingress.process", "ingress.payload")

        def entry(attrs):
            pkt: Packet = attrs["packet"]
            return HandlerResult(
                choices=[counter_trigger],
                spawn=[(to_payload, {"packet": pkt.id, "payload": pkt.payload_fragments})],
            )

        def count(attrs):
            old, new = self.counter.increment()
            return HandlerResult(notes={"changes": {"counter": [old, new]}})

        self._on("ingress.process", entry)
        self._on("counter.increment", count)
        self._on("ingress.header", lambda attrs: HandlerResult(
            updates={"header": attrs["packet"].outer}))
        self._on("ingress.destination", lambda attrs: HandlerResult(
            updates={"destination": attrs["header"].destination},
            notes={"destination": str(attrs["header"].destination)}))

        # destination list
        self._scan("destlist", "destination list", "destlist.not_found",
                   lambda attrs: t.destinations,
                   lambda attrs, entry: dest_matches(attrs["destination"], entry),
                   lambda attrs, entry: "destlist.found")
        for outcome in ("destlist.not_found", "destlist.found"):
            self._on(outcome, self._payload_release(outcome))

        def defrag(attrs):
            joined = defragment(attrs["payload"])
            return HandlerResult(updates={"payload": (joined,)},
                                 notes={"payload_bytes": len(joined)})

        self._on("defrag.defragment", defrag)

        to_error = a("vpn.decrypt", "vpn.release_error")
        to_release = a("vpn.decrypt", "vpn.release")

        def decrypt(attrs):
            try:
                clear = vpn_decrypt(attrs["packet"])
            except DecryptError as exc:
                return HandlerResult(choices=[to_error],
                                     notes={"reason": "decrypt-error", "detail": str(exc)})
            return HandlerResult(updates={"packet": clear}, choices=[to_release])

        self._on("vpn.decrypt", decrypt)

        # untranslate NAT
        self._scan("nattable", "nat table", "nattable.not_found",
                   lambda attrs: t.nat_table,
                   lambda attrs, entry: dest_matches(attrs["destination"], entry),
                   lambda attrs, entry: "nattable.found")

        # egress interface
        self._scan("egress", "global route table", "egress.no_route",
                   lambda attrs: t.routes,
                   lambda attrs, entry: prefix_matches(attrs["destination"], entry.match),
                   lambda attrs, entry: "egress.found")
        new_dest_trigger = a("egress.found", "egress.new_destination")

        def route_found(attrs):
            route = t.routes[attrs["egress.index"]]
            return HandlerResult(
                updates={"original_destination": attrs["destination"],
                         "destination": route.new_destination},
                choices=[new_dest_trigger],
            )

        def new_destination(attrs):
            old, new = attrs["original_destination"], attrs["destination"]
            return HandlerResult(notes={"changes": {"destination": [str(old), str(new)]}})

        self._on("egress.found", route_found)
        self._on("egress.new_destination", new_destination)

        # prefilter policy, on the outer header
        self._on("prefilter.outer_header", lambda attrs: HandlerResult(
            updates={"outer": attrs["packet"].outer}))
        self._on("prefilter.source", lambda attrs: HandlerResult(
            updates={"source": attrs["outer"].source},
            notes={"source": str(attrs["outer"].source)}))
        self._scan("pftable", "prefilter policy table", "pftable.no_policy",
                   lambda attrs: t.prefilter,
                   lambda attrs, entry: prefix_matches(attrs["source"], entry.source_match),
                   lambda attrs, entry: ("pftable.fastpath"
                                         if entry.action is PrefilterAction.FASTPATH
                                         else "pftable.analyze"))

        # L3/L4 ACL
        self._on("acl.header", lambda attrs: HandlerResult(updates={"acl_header": attrs["packet"].outer}))
        self._on("acl.source", lambda attrs: HandlerResult(updates={"source": attrs["acl_header"].source}))
        self._scan("acltable", "access control list", "acltable.exhausted",
                   lambda attrs: t.acl,
                   lambda attrs, entry: prefix_matches(attrs["source"], entry.source_match),
                   lambda attrs, entry: _ACL_OUTCOME[entry.action],
                   exhausted_notes={"reason": "implicit-deny"})

        trusted = a("acltable.trust", "acltable.release_trusted")
        permitted = a("acltable.trust", "acltable.release_permitted")

        def trust(attrs):
            rule = t.acl[attrs["acltable.index"]]
            mode = rule.trust_mode
            return HandlerResult(choices=[trusted if mode is TrustMode.TRUSTED else permitted],
                                 notes={"trust_mode": mode.value})

        self._on("acltable.trust", trust)

    def _payload_release(self, stage: str):
        trig = self._arrow(stage, "ingress.release_payload")
        return lambda attrs: HandlerResult(choices=[trig])

    def _scan(self, prefix: str, table: str, empty: str,
              entries: Callable[[Mapping], Sequence],
              matches: Callable[[Mapping, Any], bool],
              outcome: Callable[[Mapping, Any], str],
              exhausted_notes: Mapping[str, Any] | None = None):
        """Fetch/compare/next handlers for one first-match table scan."""
        a = self._arrow
        key = f"{prefix}.index"
        fetch, compare, nxt = f"{prefix}.fetch", f"{prefix}.compare", f"{prefix}.fetch_next"
        fetch_hit = a(fetch, f"{prefix}.retrieved")
        fetch_empty = a(fetch, empty)
        to_more = a(compare, f"{prefix}.more")
        to_empty = a(compare, empty)
        extra = dict(exhausted_notes or {})
        outcomes: dict[str, int] = {}

        def on_fetch(attrs):
            if not entries(attrs):
                return HandlerResult(choices=[fetch_empty], notes={"table": table, **extra})
            return HandlerResult(updates={key: 0}, choices=[fetch_hit],
                                 notes={"table": table, "index": 0})

        def on_compare(attrs):
            rows = entries(attrs)
            i = attrs[key]
            if matches(attrs, rows[i]):
                target = outcome(attrs, rows[i])
                if target not in outcomes:
                    outcomes[target] = a(compare, target)
                return HandlerResult(choices=[outcomes[target]], notes={"matched": i})
            if i + 1 < len(rows):
                return HandlerResult(choices=[to_more])
            return HandlerResult(choices=[to_empty], notes={"scans": len(rows), **extra})

        def on_next(attrs):
            i = attrs[key] + 1
            return HandlerResult(updates={key: i}, notes={"index": i})

        self._on(fetch, on_fetch)
        self._on(compare, on_compare)
        self._on(nxt, on_next)

    # -- running ------------------------------------------------------------

    def process_packet(self, packet: Packet) -> tuple[Disposition, list[EventInstance]]:
        engine = self.engine
        start = len(engine.state.trace)
        engine.inject(INGRESS, Thing(packet.id, {"packet": packet}))
        trace = engine.run_to_quiescence()
        self.packets += 1
        events = self.projector.project(trace[start:], packet.id, self.next_seq)
        self.next_seq += len(events)

        where = engine.state.rested.get(packet.id)
        sink = self.model.element(where).name if where is not None else None
        if sink not in SINKS:
            raise ExecutionError(f"packet {packet.id!r} came to rest at {sink!r}, not at a sink")
        kind, anchor, reason = SINKS[sink]
        via = events[-1].kind
        if kind == "to_daq":
            return ToDAQ(via), events
        if kind == "to_flow_update":
            return ToFlowUpdate(via), events
        return Dropped(anchor, reason), events

    def run(self, packets) -> list[tuple[Packet, Disposition, list[EventInstance]]]:
        return [(p, *self.process_packet(p)) for p in packets]


def process_packet(packet: Packet, tables: Tables, state: Simulator | None = None
                   ) -> tuple[Disposition, list[EventInstance]]:
    """One-shot convenience; pass ``state`` to keep counter and clock across calls."""
    sim = state if state is not None else Simulator(tables)
    return sim.process_packet(packet)
