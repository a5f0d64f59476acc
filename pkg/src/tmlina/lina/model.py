"""The LINA static model: packet entry through the L3/L4 ACL.

Every numbered step of the walkthrough (anchors 1 to 80) is attached to one
stage, storage or arrow.  Element names are stable identifiers used by the
handlers in :mod:`tmlina.lina.pipeline` and by the event regions in
:mod:`tmlina.events`.

Each table scan follows the same shape inside one thimac::

    fetch (P) -> retrieved (C) -> compare (P) -+-> more (C) -> fetch_next (P) -> retrieved
                                               +-> outcome creates (C) ...

and an empty table short-cuts from ``fetch`` straight to the not-found outcome.
"""

from __future__ import annotations

from functools import lru_cache

from ..core import StaticModel, build_model

__all__ = ["build_lina_model", "lina_spec", "INGRESS", "SINKS", "ACL_ACTIONS"]

INGRESS = "asa.in"

# sink stage -> (disposition kind, drop anchor or None, reason)
SINKS = {
    "daq.in": ("to_daq", None, None),
    "flow_update.in": ("to_flow_update", None, None),
    "drop.no_route": ("dropped", 46, "no-route"),
    "drop.prefilter": ("dropped", 58, "prefilter-no-match"),
    "drop.deny": ("dropped", 80, "deny"),
    "drop.implicit_deny": ("dropped", None, "implicit-deny"),
    "drop.decrypt_error": ("dropped", None, "decrypt-error"),
}

# Block-family and monitor/allow rules: action -> processing-stage anchor.
ACL_ACTIONS = {
    "monitor": 74,
    "allow": 75,
    "block": 76,
    "block_reset": 77,
    "interactive_block": 78,
    "interactive_block_reset": 79,
}


class _Spec:
    def __init__(self, name):
        self.doc = {"name": name, "thimacs": [], "stages": [], "storages": [], "arrows": []}

    def thimac(self, name, parent=None):
        t = {"name": name}
        if parent:
            t["parent"] = parent
        self.doc["thimacs"].append(t)

    def stages(self, thimac, *rows):
        for row in rows:
            kind, name, *rest = row
            s = {"name": name, "thimac": thimac, "kind": kind}
            if rest and rest[0] is not None:
                s["anchor"] = rest[0]
            self.doc["stages"].append(s)

    def storage(self, thimac, name, anchor=None):
        s = {"name": name, "thimac": thimac}
        if anchor is not None:
            s["anchor"] = anchor
        self.doc["storages"].append(s)

    def flow(self, src, dst, anchor=None, kind="flow"):
        a = {"kind": kind, "from": src, "to": dst}
        if anchor is not None:
            a["anchor"] = anchor
        self.doc["arrows"].append(a)

    def chain(self, *names):
        for a, b in zip(names, names[1:]):
            self.flow(a, b)

    def trigger(self, src, dst, anchor=None):
        self.flow(src, dst, anchor, kind="trigger")


@lru_cache(maxsize=None)
def _spec() -> dict:
    s = _Spec("LINA")
    P, C, R, T, V = "process", "create", "release", "transfer", "receive"

    for name, parent in [
        ("ASA", None),
        ("LINA", "ASA"),
        ("ingress interface", "LINA"),
        ("input counter", "ingress interface"),
        ("destination list", "ingress interface"),
        ("defragmentation", "LINA"),
        ("VPN decrypt", "LINA"),
        ("untranslate-NAT", "LINA"),
        ("NAT table", "untranslate-NAT"),
        ("egress interface", "LINA"),
        ("prefilter policy", "LINA"),
        ("prefilter policy table", "prefilter policy"),
        ("L3/L4 ACL", "LINA"),
        ("access control list", "L3/L4 ACL"),
        ("DAQ", None),
        ("flow update", None),
        ("drop sinks", None),
    ]:
        s.thimac(name, parent)

    # -- packet entry -------------------------------------------------------
    s.stages("ASA", (T, "asa.in", 1))
    s.stages("LINA", (T, "lina.in", 2))
    s.stages(
        "ingress interface",
        (T, "ingress.in", 3),
        (V, "ingress.receive"),
        (P, "ingress.process", 4),
        (C, "ingress.header", 7),
        (P, "ingress.read_header"),
        (C, "ingress.destination", 9),
        (R, "ingress.release_destination"),
        (T, "ingress.destination_out", 10),
        (R, "ingress.release_payload", 19),
        (T, "ingress.payload_out"),
        (T, "ingress.payload_in"),
        (V, "ingress.payload_receive"),
    )
    s.storage("ingress interface", "ingress.payload", 8)
    s.stages("input counter", (P, "counter.increment", 6))

    s.stages(
        "destination list",
        (T, "destlist.in"),
        (V, "destlist.receive", 12),
        (P, "destlist.fetch", 13),
        (C, "destlist.retrieved"),
        (P, "destlist.compare", 14),
        (C, "destlist.more"),
        (P, "destlist.fetch_next", 15),
        (C, "destlist.not_found", 16),
        (C, "destlist.found", 24),
        (R, "destlist.release_daq", 25),
        (T, "destlist.to_daq", 26),
        (R, "destlist.release_vpn"),
        (T, "destlist.to_vpn"),
    )
    s.storage("destination list", "destlist.table", 11)

    s.stages(
        "defragmentation",
        (T, "defrag.in"),
        (V, "defrag.receive", 20),
        (P, "defrag.defragment", 21),
        (C, "defrag.new_payload", 22),
        (R, "defrag.release"),
        (T, "defrag.out", 23),
    )

    s.stages(
        "VPN decrypt",
        (T, "vpn.in"),
        (V, "vpn.receive"),
        (P, "vpn.decrypt", 17),
        (R, "vpn.release"),
        (T, "vpn.to_nat", 18),
        (R, "vpn.release_error"),
        (T, "vpn.to_drop"),
    )

    # -- untranslate NAT ----------------------------------------------------
    s.stages(
        "untranslate-NAT",
        (T, "nat.in"),
        (V, "nat.receive", 27),
        (P, "nat.process", 28),
        (C, "nat.header", 29),
        (P, "nat.process_header", 30),
        (C, "nat.destination", 31),
        (R, "nat.release_destination"),
        (T, "nat.destination_out"),
    )
    s.stages(
        "NAT table",
        (T, "nattable.in"),
        (V, "nattable.receive"),
        (P, "nattable.fetch", 33),
        (C, "nattable.retrieved"),
        (P, "nattable.compare", 36),
        (C, "nattable.more", 37),
        (P, "nattable.fetch_next"),
        (C, "nattable.not_found", 38),
        (C, "nattable.found", 40),
        (R, "nattable.release_prefilter"),
        (T, "nattable.to_prefilter"),
        (R, "nattable.release_egress"),
        (T, "nattable.to_egress"),
    )
    s.storage("NAT table", "nattable.table")

    # -- egress interface ---------------------------------------------------
    s.stages(
        "egress interface",
        (T, "egress.in", 39),
        (V, "egress.receive"),
        (P, "egress.fetch", 42),
        (C, "egress.retrieved"),
        (P, "egress.compare", 45),
        (C, "egress.more", 47),
        (P, "egress.fetch_next"),
        (C, "egress.no_route"),
        (R, "egress.release_drop"),
        (T, "egress.to_drop"),
        (C, "egress.found", 48),
        (C, "egress.new_destination"),
        (R, "egress.release", 50),
        (T, "egress.to_prefilter"),
    )
    s.storage("egress interface", "egress.routes", 41)

    # -- prefilter policy ---------------------------------------------------
    s.stages(
        "prefilter policy",
        (T, "prefilter.in", 51),
        (V, "prefilter.receive"),
        (P, "prefilter.process", 52),
        (C, "prefilter.outer_header", 53),
        (P, "prefilter.read_header"),
        (C, "prefilter.source", 54),
        (R, "prefilter.release_source"),
        (T, "prefilter.source_out"),
    )
    s.stages(
        "prefilter policy table",
        (T, "pftable.in"),
        (V, "pftable.receive"),
        (P, "pftable.fetch", 55),
        (C, "pftable.retrieved"),
        (P, "pftable.compare", 57),
        (C, "pftable.more"),
        (P, "pftable.fetch_next", 59),
        (C, "pftable.no_policy"),
        (R, "pftable.release_drop"),
        (T, "pftable.to_drop"),
        (C, "pftable.fastpath", 60),
        (R, "pftable.release_flow_update"),
        (T, "pftable.to_flow_update", 61),
        (C, "pftable.analyze", 62),
        (R, "pftable.release_acl"),
        (T, "pftable.to_acl", 63),
    )
    s.storage("prefilter policy table", "pftable.policies", 56)

    # -- L3/L4 ACL ----------------------------------------------------------
    s.stages(
        "L3/L4 ACL",
        (T, "acl.in"),
        (V, "acl.receive"),
        (P, "acl.process", 64),
        (C, "acl.header", 65),
        (P, "acl.read_header"),
        (C, "acl.source", 66),
        (R, "acl.release_source"),
        (T, "acl.source_out"),
    )
    rows = [
        (T, "acltable.in"),
        (V, "acltable.receive"),
        (P, "acltable.fetch", 67),
        (C, "acltable.retrieved"),
        (P, "acltable.compare", 69),
        (C, "acltable.more"),
        (P, "acltable.fetch_next", 70),
        (C, "acltable.exhausted"),
        (R, "acltable.release_implicit_deny"),
        (T, "acltable.to_implicit_deny"),
        (C, "acltable.trust_found"),
        (P, "acltable.trust", 71),
        (R, "acltable.release_permitted", 72),
        (T, "acltable.to_daq_permitted"),
        (R, "acltable.release_trusted", 73),
        (T, "acltable.to_flow_update"),
    ]
    for action, anchor in ACL_ACTIONS.items():
        rows += [
            (C, f"acltable.{action}_found"),
            (P, f"acltable.{action}", anchor),
            (R, f"acltable.release_{action}"),
            (T, f"acltable.to_daq_{action}"),
        ]
    rows += [
        (C, "acltable.deny_found"),
        (R, "acltable.release_deny"),
        (T, "acltable.to_drop"),
    ]
    s.stages("access control list", *rows)
    s.storage("access control list", "acltable.rules", 68)

    # -- boundaries ---------------------------------------------------------
    s.stages("DAQ", (T, "daq.in"))
    s.stages("flow update", (T, "flow_update.in"))
    s.stages(
        "drop sinks",
        (T, "drop.no_route", 46),
        (T, "drop.prefilter", 58),
        (T, "drop.deny", 80),
        (T, "drop.implicit_deny"),
        (T, "drop.decrypt_error"),
    )

    # -- arrows -------------------------------------------------------------
    s.chain("asa.in", "lina.in", "ingress.in", "ingress.receive", "ingress.process")
    s.trigger("ingress.process", "counter.increment", 5)
    s.flow("ingress.process", "ingress.payload")
    s.chain(
        "ingress.process",
        "ingress.header",
        "ingress.read_header",
        "ingress.destination",
        "ingress.release_destination",
        "ingress.destination_out",
        "destlist.in",
        "destlist.receive",
        "destlist.fetch",
        "destlist.retrieved",
        "destlist.compare",
        "destlist.more",
    )
    s.flow("destlist.more", "destlist.fetch_next")
    s.flow("destlist.fetch_next", "destlist.retrieved")
    s.flow("destlist.table", "destlist.fetch")
    s.flow("destlist.table", "destlist.fetch_next")
    s.flow("destlist.fetch", "destlist.not_found")
    s.flow("destlist.compare", "destlist.not_found")
    s.flow("destlist.compare", "destlist.found")

    # payload defragmentation, started from either outcome
    s.trigger("destlist.not_found", "ingress.release_payload")
    s.trigger("destlist.found", "ingress.release_payload")
    s.chain(
        "ingress.payload",
        "ingress.release_payload",
        "ingress.payload_out",
        "defrag.in",
        "defrag.receive",
        "defrag.defragment",
        "defrag.new_payload",
        "defrag.release",
        "defrag.out",
        "ingress.payload_in",
        "ingress.payload_receive",
        "ingress.payload",
    )

    s.chain("destlist.found", "destlist.release_daq", "destlist.to_daq", "daq.in")
    s.chain(
        "destlist.not_found",
        "destlist.release_vpn",
        "destlist.to_vpn",
        "vpn.in",
        "vpn.receive",
        "vpn.decrypt",
        "vpn.release",
        "vpn.to_nat",
        "nat.in",
        "nat.receive",
        "nat.process",
        "nat.header",
        "nat.process_header",
        "nat.destination",
    )
    s.chain("vpn.decrypt", "vpn.release_error", "vpn.to_drop", "drop.decrypt_error")

    s.flow("nat.destination", "nat.release_destination", 32)
    s.chain(
        "nat.release_destination",
        "nat.destination_out",
        "nattable.in",
        "nattable.receive",
        "nattable.fetch",
    )
    s.flow("nattable.fetch", "nattable.retrieved", 34)
    s.flow("nattable.retrieved", "nattable.compare", 35)
    s.chain("nattable.compare", "nattable.more", "nattable.fetch_next", "nattable.retrieved")
    s.flow("nattable.table", "nattable.fetch")
    s.flow("nattable.table", "nattable.fetch_next")
    s.flow("nattable.fetch", "nattable.not_found")
    s.flow("nattable.compare", "nattable.not_found")
    s.flow("nattable.compare", "nattable.found")
    s.chain(
        "nattable.not_found",
        "nattable.release_prefilter",
        "nattable.to_prefilter",
        "prefilter.in",
    )
    s.chain(
        "nattable.found",
        "nattable.release_egress",
        "nattable.to_egress",
        "egress.in",
        "egress.receive",
        "egress.fetch",
    )

    s.flow("egress.fetch", "egress.retrieved", 43)
    s.flow("egress.retrieved", "egress.compare", 44)
    s.chain("egress.compare", "egress.more", "egress.fetch_next", "egress.retrieved")
    s.flow("egress.routes", "egress.fetch")
    s.flow("egress.routes", "egress.fetch_next")
    s.flow("egress.fetch", "egress.no_route")
    s.flow("egress.compare", "egress.no_route")
    s.chain("egress.no_route", "egress.release_drop", "egress.to_drop", "drop.no_route")
    s.flow("egress.compare", "egress.found")
    s.trigger("egress.found", "egress.new_destination", 49)
    s.chain("egress.found", "egress.release", "egress.to_prefilter", "prefilter.in")

    s.chain(
        "prefilter.in",
        "prefilter.receive",
        "prefilter.process",
        "prefilter.outer_header",
        "prefilter.read_header",
        "prefilter.source",
        "prefilter.release_source",
        "prefilter.source_out",
        "pftable.in",
        "pftable.receive",
        "pftable.fetch",
        "pftable.retrieved",
        "pftable.compare",
        "pftable.more",
        "pftable.fetch_next",
        "pftable.retrieved",
    )
    s.flow("pftable.policies", "pftable.fetch")
    s.flow("pftable.policies", "pftable.fetch_next")
    s.flow("pftable.fetch", "pftable.no_policy")
    s.flow("pftable.compare", "pftable.no_policy")
    s.chain("pftable.no_policy", "pftable.release_drop", "pftable.to_drop", "drop.prefilter")
    s.flow("pftable.compare", "pftable.fastpath")
    s.chain(
        "pftable.fastpath",
        "pftable.release_flow_update",
        "pftable.to_flow_update",
        "flow_update.in",
    )
    s.flow("pftable.compare", "pftable.analyze")
    s.chain(
        "pftable.analyze",
        "pftable.release_acl",
        "pftable.to_acl",
        "acl.in",
        "acl.receive",
        "acl.process",
        "acl.header",
        "acl.read_header",
        "acl.source",
        "acl.release_source",
        "acl.source_out",
        "acltable.in",
        "acltable.receive",
        "acltable.fetch",
        "acltable.retrieved",
        "acltable.compare",
        "acltable.more",
        "acltable.fetch_next",
        "acltable.retrieved",
    )
    s.flow("acltable.rules", "acltable.fetch")
    s.flow("acltable.rules", "acltable.fetch_next")
    s.flow("acltable.fetch", "acltable.exhausted")
    s.flow("acltable.compare", "acltable.exhausted")
    s.chain(
        "acltable.exhausted",
        "acltable.release_implicit_deny",
        "acltable.to_implicit_deny",
        "drop.implicit_deny",
    )
    s.chain("acltable.compare", "acltable.trust_found", "acltable.trust")
    s.chain("acltable.trust", "acltable.release_trusted", "acltable.to_flow_update", "flow_update.in")
    s.chain("acltable.trust", "acltable.release_permitted", "acltable.to_daq_permitted", "daq.in")
    for action in ACL_ACTIONS:
        s.chain(
            "acltable.compare",
            f"acltable.{action}_found",
            f"acltable.{action}",
            f"acltable.release_{action}",
            f"acltable.to_daq_{action}",
            "daq.in",
        )
    s.chain("acltable.compare", "acltable.deny_found", "acltable.release_deny",
            "acltable.to_drop", "drop.deny")
    return s.doc


def lina_spec() -> dict:
    """A fresh copy of the declarative LINA model description."""
    import copy

    return copy.deepcopy(_spec())


@lru_cache(maxsize=None)
def build_lina_model() -> StaticModel:
    return build_model(_spec())
