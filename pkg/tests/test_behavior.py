import pytest
from hypothesis import given, settings, strategies as st

from gen import configs, packets
from tmlina.behavior import Accepted, Rejected, check_chronology
from tmlina.events import TERMINAL_KINDS, EventInstance
from tmlina.lina import Simulator, load_tables, parse_packet

FOR_SELF = "E1 E2 E3 E4 E5 E6 E7 E8 E9 E10 E11 E14 E15 E16 E17".split()


def seq(kinds, packet="p", last_attrs=None):
    evs = [EventInstance(i, k, packet, i, i) for i, k in enumerate(kinds)]
    if last_attrs and evs:
        evs[-1] = EventInstance(evs[-1].seq, evs[-1].kind, packet, evs[-1].start_tick,
                                evs[-1].end_tick, last_attrs)
    return evs


def test_for_self_sequence_is_accepted(automaton):
    assert check_chronology(seq(FOR_SELF), automaton) == Accepted()


def test_swapped_defragmentation_is_rejected(automaton):
    bad = FOR_SELF.copy()
    bad[12], bad[13] = bad[13], bad[12]
    assert check_chronology(seq(bad), automaton) == Rejected(12)


def test_two_terminals_are_rejected(automaton):
    assert not check_chronology(seq(FOR_SELF + ["E42"]), automaton)


def test_empty_and_truncated(automaton):
    assert check_chronology([], automaton) == Rejected(0)
    assert check_chronology(seq(FOR_SELF[:-1]), automaton) == Rejected(len(FOR_SELF) - 1)


def test_mixed_packets_are_a_usage_error(automaton):
    with pytest.raises(ValueError):
        check_chronology(seq(["E1"], "a") + seq(["E2"], "b"), automaton)


def test_guarded_acceptance_needs_a_reason(automaton):
    drop = "E1 E2 E3 E4 E5 E6 E7 E8 E9 E13 E15 E16 E18".split()
    assert not check_chronology(seq(drop), automaton)
    assert check_chronology(seq(drop, last_attrs={"reason": "decrypt-error"}), automaton)
    assert not check_chronology(seq(drop, last_attrs={"reason": "bored"}), automaton)


def test_accepting_states_end_on_terminal_kinds(automaton):
    into = {}
    for (_, kind), dst in automaton.transitions.items():
        into.setdefault(dst, set()).add(kind)
    for state in automaton.accepting:
        assert into[state] <= TERMINAL_KINDS
    # one accepting state per terminal kind
    assert len(automaton.accepting) == len(TERMINAL_KINDS)
    assert set(automaton.alphabet()) == {f"E{i}" for i in range(1, 61)}


def test_is_deterministic(automaton):
    keys = list(automaton.transitions)
    assert len(keys) == len(set(keys))


def test_dot_export(automaton):
    text = automaton.to_dot()
    assert text.startswith('digraph "chronology"')
    assert text.count("->") == len(automaton.transitions) + 1


@settings(max_examples=120, deadline=None)
@given(configs, st.lists(packets(), min_size=1, max_size=3))
def test_emitted_sequences_are_accepted(automaton, config, records):
    sim = Simulator(load_tables(config))
    for i, r in enumerate(records):
        r = dict(r, id=f"p{i}")
        _, events = sim.process_packet(parse_packet(r))
        assert check_chronology(events, automaton), [e.kind for e in events]
