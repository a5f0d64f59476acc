"""Table lookups and packet transformations used by the LINA stages.

All lookups are sequential first-match scans.  Destination list and NAT
table compare addresses for equality; routes, prefilter policies and ACL
rules match on CIDR containment.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, replace
from typing import Sequence

from .tables import (
    AclAction,
    AclRule,
    Counter,
    Header,
    Packet,
    PrefilterAction,
    PrefilterEntry,
    RouteEntry,
    TrustMode,
)

__all__ = [
    "Found",
    "NotFound",
    "NewDestination",
    "NoRoute",
    "PrefilterVerdict",
    "AclMatch",
    "NoMatch",
    "Dropped",
    "ToDAQ",
    "ToFlowUpdate",
    "Disposition",
    "DecryptError",
    "EntryOutcome",
    "packet_entry",
    "lookup_destination",
    "defragment",
    "vpn_decrypt",
    "untranslate_nat",
    "egress_lookup",
    "prefilter_eval",
    "acl_eval",
    "acl_disposition",
    "dest_matches",
    "prefix_matches",
]

Address = ipaddress.IPv4Address


@dataclass(frozen=True)
class Found:
    index: int


@dataclass(frozen=True)
class NotFound:
    scans: int


@dataclass(frozen=True)
class NewDestination:
    address: Address
    index: int


@dataclass(frozen=True)
class NoRoute:
    scans: int


@dataclass(frozen=True)
class PrefilterVerdict:
    """Outcome of the prefilter scan; ``action`` is None when nothing matched."""

    action: PrefilterAction | None
    index: int | None


@dataclass(frozen=True)
class AclMatch:
    index: int
    action: AclAction
    trust_mode: TrustMode | None = None


@dataclass(frozen=True)
class NoMatch:
    scans: int


@dataclass(frozen=True)
class Dropped:
    at: int | None
    reason: str


@dataclass(frozen=True)
class ToDAQ:
    via: str


@dataclass(frozen=True)
class ToFlowUpdate:
    via: str


Disposition = Dropped | ToDAQ | ToFlowUpdate


class DecryptError(ValueError):
    pass


def dest_matches(dest: Address, entry: Address) -> bool:
    return dest == entry


def prefix_matches(addr: Address, prefix: ipaddress.IPv4Network) -> bool:
    return addr in prefix


@dataclass(frozen=True)
class EntryOutcome:
    counter: tuple[int, int]
    payload: tuple[bytes, ...]
    header: Header
    destination: Address


def packet_entry(packet: Packet, counter: Counter, payload_store: list | None = None) -> EntryOutcome:
    """Count the packet, store its payload and pull out header and destination."""
    old_new = counter.increment()
    if payload_store is not None:
        payload_store.append((packet.id, packet.payload_fragments))
    return EntryOutcome(old_new, packet.payload_fragments, packet.outer, packet.outer.destination)


def lookup_destination(dest: Address, destinations: Sequence[Address]) -> Found | NotFound:
    for i, entry in enumerate(destinations):
        if dest_matches(dest, entry):
            return Found(i)
    return NotFound(len(destinations))


def defragment(fragments: Sequence[bytes]) -> bytes:
    """Join fragments in order and delete space bytes."""
    return b"".join(fragments).replace(b" ", b"")


def vpn_decrypt(packet: Packet) -> Packet:
    """Stub decryption: clears the flag and exposes the declared inner header."""
    if not packet.encrypted:
        return packet
    if packet.inner is None:
        raise DecryptError(f"packet {packet.id!r} is encrypted but declares no inner header")
    return replace(packet, encrypted=False)


def untranslate_nat(dest: Address, nat_table: Sequence[Address]) -> Found | NotFound:
    for i, entry in enumerate(nat_table):
        if dest_matches(dest, entry):
            return Found(i)
    return NotFound(len(nat_table))


def egress_lookup(dest: Address, routes: Sequence[RouteEntry]) -> NewDestination | NoRoute:
    for i, route in enumerate(routes):
        if prefix_matches(dest, route.match):
            return NewDestination(route.new_destination, i)
    return NoRoute(len(routes))


def prefilter_eval(source: Address, table: Sequence[PrefilterEntry]) -> PrefilterVerdict:
    for i, entry in enumerate(table):
        if prefix_matches(source, entry.source_match):
            return PrefilterVerdict(entry.action, i)
    return PrefilterVerdict(None, None)


def acl_eval(source: Address, acl: Sequence[AclRule]) -> AclMatch | NoMatch:
    for i, rule in enumerate(acl):
        if prefix_matches(source, rule.source_match):
            return AclMatch(i, rule.action, rule.trust_mode)
    return NoMatch(len(acl))


_ACL_EVENT = {
    AclAction.MONITOR: "E54",
    AclAction.ALLOW: "E55",
    AclAction.BLOCK: "E56",
    AclAction.BLOCK_WITH_RESET: "E57",
    AclAction.INTERACTIVE_BLOCK: "E58",
    AclAction.INTERACTIVE_BLOCK_WITH_RESET: "E59",
}


def acl_disposition(result: AclMatch | NoMatch) -> Disposition:
    """Where a packet goes once the ACL scan has produced ``result``."""
    if isinstance(result, NoMatch):
        return Dropped(None, "implicit-deny")
    if result.action is AclAction.TRUST:
        if result.trust_mode is TrustMode.TRUSTED:
            return ToFlowUpdate("E52")
        return ToDAQ("E53")
    if result.action is AclAction.DENY:
        return Dropped(80, "deny")
    return ToDAQ(_ACL_EVENT[result.action])
