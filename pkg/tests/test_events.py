import json

import pytest

from tmlina.core import anchor_lookup
from tmlina.events import (
    LOOP_KINDS,
    REGIONS,
    SUB_EVENT_STEPS,
    TERMINAL_KINDS,
    EventInstance,
    EventProjector,
    catalog_index,
    event_catalog,
    event_from_record,
    event_record,
)
from tmlina.runtime import Activation


def test_catalog_shape():
    cat = event_catalog()
    assert [k.id for k in cat] == [f"E{i}" for i in range(1, 61)]
    assert {k.id for k in cat if k.repeatable} == LOOP_KINDS
    assert {k.id for k in cat if k.terminal} == TERMINAL_KINDS
    assert catalog_index()["E42"].terminal
    assert catalog_index()["E12"].repeatable


def test_e29_text():
    assert catalog_index()["E29"].description.endswith(
        "not included in the global route table, and the packet is dropped.")


def test_e1_region_covers_anchor_1():
    assert 1 in catalog_index()["E1"].region


def test_every_anchor_is_an_event_region_or_a_listed_sub_step(lina):
    covered = set().union(*(k.region for k in event_catalog()))
    for label in range(1, 81):
        if label not in covered and label not in SUB_EVENT_STEPS:
            pytest.fail(f"anchor {label} is in no region and not listed as a sub-event step")
    assert not covered & set(SUB_EVENT_STEPS)
    for label, name in SUB_EVENT_STEPS.items():
        assert lina.element(anchor_lookup(lina, label)).name == name


def test_regions_are_disjoint(lina):
    EventProjector(lina)  # raises on overlap
    names = [n for ns in REGIONS.values() for n in ns]
    assert len(names) == len(set(names))


def test_projection_merges_runs_and_skips_sub_steps(lina):
    p = EventProjector(lina)
    a = lina.id_of
    acts = [
        Activation(0, a("asa.in"), "x", "x"),
        Activation(1, a("lina.in"), "x", "x", notes={"k": 1}),
        Activation(2, a("nat.process"), "x", "x"),   # sub-step: no event
        Activation(3, a("ingress.in"), "y", "y"),    # other packet
        Activation(4, a("ingress.in"), "x", "x"),
    ]
    evs = p.project(acts, "x", first_seq=10)
    assert [(e.seq, e.kind, e.start_tick, e.end_tick) for e in evs] == [
        (10, "E1", 0, 1), (11, "E2", 4, 4)]
    assert evs[0].attributes == {"k": 1}


def test_storage_activation_takes_the_kind_of_its_arrow(lina):
    p = EventProjector(lina)
    store = lina.id_of("ingress.payload")
    spawn = Activation(0, store, "x#1", "x", via=lina.id_of("ingress.process->ingress.payload"))
    back = Activation(1, store, "x#1", "x", via=lina.id_of("ingress.payload_receive->ingress.payload"))
    assert (p.kind(spawn), p.kind(back)) == ("E5", "E16")


def test_record_round_trip():
    ev = EventInstance(3, "E4", "p", 5, 6, {"changes": {"counter": [0, 1]}})
    rec = event_record(ev)
    assert list(rec) == ["seq", "kind", "packet", "start", "end", "attrs"]
    assert event_from_record(json.loads(json.dumps(rec))) == ev
    with pytest.raises(ValueError):
        event_from_record({"seq": 1})
