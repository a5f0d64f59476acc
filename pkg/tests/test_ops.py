import ipaddress

import pytest
from hypothesis import given, strategies as st

from gen import addresses, prefixes
from tmlina.lina.ops import (
    AclMatch,
    DecryptError,
    Dropped,
    Found,
    NewDestination,
    NoMatch,
    NoRoute,
    NotFound,
    PrefilterVerdict,
    ToDAQ,
    ToFlowUpdate,
    acl_disposition,
    acl_eval,
    defragment,
    egress_lookup,
    lookup_destination,
    packet_entry,
    prefilter_eval,
    untranslate_nat,
    vpn_decrypt,
)
from tmlina.lina.tables import (
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

A = ipaddress.IPv4Address
N = ipaddress.IPv4Network


def test_lookup_destination_examples():
    assert lookup_destination(A("10.0.0.5"), [A("10.0.0.5")]) == Found(0)
    assert lookup_destination(A("10.0.0.5"), []) == NotFound(0)
    assert lookup_destination(A("10.0.0.5"), [A("10.0.0.6"), A("10.0.0.7")]) == NotFound(2)


@given(addresses, st.lists(addresses, max_size=8))
def test_lookups_return_the_first_match(dest, table):
    table = [A(t) for t in table]
    d = A(dest)
    brute = next((i for i, t in enumerate(table) if t == d), None)
    for fn in (lookup_destination, untranslate_nat):
        got = fn(d, table)
        assert got == (Found(brute) if brute is not None else NotFound(len(table)))


def test_defragment_examples():
    assert defragment([b"ab", b"cd"]) == b"abcd"
    assert defragment([b"a b", b" c"]) == b"abc"
    assert defragment([]) == b""


@given(st.lists(st.binary(max_size=6), max_size=4))
def test_defragment_is_idempotent(frags):
    once = defragment(frags)
    assert defragment([once]) == once
    assert b" " not in once


def packet(**kw):
    return Packet("p", Header.of("10.0.0.1", "10.0.0.2"), **kw)


def test_vpn_decrypt():
    inner = Header.of("10.1.0.1", "10.1.0.2", "tcp")
    p = vpn_decrypt(packet(encrypted=True, inner=inner))
    assert p.encrypted is False and p.inner == inner
    plain = packet()
    assert vpn_decrypt(plain) is plain
    with pytest.raises(DecryptError):
        vpn_decrypt(packet(encrypted=True))


def test_egress_examples():
    routes = [RouteEntry(N("10.1.0.0/16"), A("10.1.0.1"))]
    assert egress_lookup(A("10.1.2.3"), routes) == NewDestination(A("10.1.0.1"), 0)
    assert egress_lookup(A("10.1.2.3"), []) == NoRoute(0)


@given(addresses, st.lists(st.tuples(prefixes, addresses), max_size=6))
def test_egress_first_containing_prefix_wins(dest, rows):
    routes = [RouteEntry(N(p, strict=False), A(a)) for p, a in rows]
    d = A(dest)
    brute = next((i for i, r in enumerate(routes) if d in r.match), None)
    got = egress_lookup(d, routes)
    if brute is None:
        assert got == NoRoute(len(routes))
    else:
        assert got == NewDestination(routes[brute].new_destination, brute)


def test_prefilter_examples():
    table = [PrefilterEntry(N("10.1.0.0/16"), PrefilterAction.FASTPATH),
             PrefilterEntry(N("10.0.0.0/8"), PrefilterAction.ANALYZE)]
    assert prefilter_eval(A("10.1.9.9"), table) == PrefilterVerdict(PrefilterAction.FASTPATH, 0)
    assert prefilter_eval(A("10.2.9.9"), table) == PrefilterVerdict(PrefilterAction.ANALYZE, 1)
    assert prefilter_eval(A("10.2.9.9"), []) == PrefilterVerdict(None, None)


def test_acl_dispositions():
    rules = [AclRule(N("10.2.1.0/24"), AclAction.TRUST, TrustMode.TRUSTED),
             AclRule(N("10.2.2.0/24"), AclAction.TRUST, TrustMode.PERMITTED),
             AclRule(N("10.2.3.0/24"), AclAction.MONITOR),
             AclRule(N("10.2.4.0/24"), AclAction.DENY)]
    assert acl_eval(A("10.2.3.3"), rules) == AclMatch(2, AclAction.MONITOR)
    assert acl_disposition(acl_eval(A("10.2.1.1"), rules)) == ToFlowUpdate("E52")
    assert acl_disposition(acl_eval(A("10.2.2.1"), rules)) == ToDAQ("E53")
    assert acl_disposition(acl_eval(A("10.2.3.1"), rules)) == ToDAQ("E54")
    assert acl_disposition(acl_eval(A("10.2.4.1"), rules)) == Dropped(80, "deny")
    assert acl_eval(A("10.9.9.9"), rules) == NoMatch(4)
    assert acl_disposition(NoMatch(4)) == Dropped(None, "implicit-deny")


def test_block_family_goes_to_daq():
    for kind, action in zip(range(55, 60), list(AclAction)[2:7]):
        assert acl_disposition(AclMatch(0, action)) == ToDAQ(f"E{kind}")


def test_packet_entry_counts_and_stores():
    c, store = Counter(), []
    out = packet_entry(packet(payload_fragments=(b"x",)), c, store)
    assert out.counter == (0, 1)
    assert store == [("p", (b"x",))]
    assert out.destination == A("10.0.0.2")
    empty = packet_entry(packet(), c)
    assert empty.counter == (1, 2) and empty.payload == ()


def test_thousand_packets_count_to_thousand():
    c = Counter()
    for _ in range(1000):
        packet_entry(packet(), c)
    assert c.value == 1000
