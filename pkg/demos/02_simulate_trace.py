"""Push a handful of packets through LINA and read the event sequences.

Run: python demos/02_simulate_trace.py
"""

import json
from pathlib import Path

from tmlina import check_chronology, derive_automaton, event_catalog
from tmlina.lina import Simulator, load_tables, parse_packet

DATA = Path(__file__).parent / "data"

tables = load_tables(json.loads((DATA / "tables.json").read_text()))
records = [json.loads(line) for line in (DATA / "coverage_trace.jsonl").read_text().splitlines()]
describe = {k.id: k.description for k in event_catalog()}

sim = Simulator(tables)
automaton = derive_automaton(sim.model, event_catalog())
print(f"chronology automaton: {automaton.states} states, {len(automaton.transitions)} transitions\n")

for rec in records[:4]:
    disposition, events = sim.process_packet(parse_packet(rec))
    verdict = "accepted" if check_chronology(events, automaton) else "REJECTED"
    print(f"packet {rec['id']}: {disposition} ({len(events)} events, chronology {verdict})")
    for ev in events[-3:]:
        print(f"   ...{ev.kind:<4} t{ev.start_tick}-{ev.end_tick}  {describe[ev.kind]}")
    print()

# The remaining packets, summarized by where they ended up.
endings = {}
for rec in records[4:]:
    disposition, events = sim.process_packet(parse_packet(rec))
    endings.setdefault(events[-1].kind, []).append(rec["id"])
for kind, ids in sorted(endings.items(), key=lambda kv: int(kv[0][1:])):
    print(f"{kind:<4} {', '.join(ids)}")
print("\ninput counter:", sim.counter.value)
