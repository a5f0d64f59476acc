"""Watch a few event kinds, merge the ingress work into one record, and query the log.

Run: python demos/03_monitoring.py
"""

import json
from pathlib import Path

from tmlina.lina import Simulator, load_tables, parse_packet
from tmlina.monitor import CompositeRecord, Monitor, MonitorConfig, parse_kinds, parse_merge

DATA = Path(__file__).parent / "data"

tables = load_tables(json.loads((DATA / "tables.json").read_text()))
records = [json.loads(line) for line in (DATA / "coverage_trace.jsonl").read_text().splitlines()]

config = MonitorConfig(
    watched=parse_kinds("E3,E4,E5,E6,E18,E29,E40,E49,E60"),
    merge_rules=(parse_merge("ingress=E3,E4,E5,E6"),),
)
monitor = Monitor(config)
sim = Simulator(tables)
for rec in records:
    _, events = sim.process_packet(parse_packet(rec))
    monitor.observe_packet(events)

log = monitor.log
print(f"{len(log)} records archived")

alerts = [r for r in log if not isinstance(r, CompositeRecord) and r.severity != "info"]
print("\nalerts and warnings:")
for m in alerts:
    print(f"  {m.severity:<7} {m.id:<4} packet {m.packet:<14} t{m.start}-{m.end}")

print("\ncounter changes seen by M4:")
for m in log.query(kind="E4")[:3]:
    print(f"  packet {m.packet}: {dict(m.changes)}")

print("\ningress composites overlapping ticks 0-200:")
for c in log.query(ticks=(0, 200)):
    if isinstance(c, CompositeRecord):
        print(f"  {c.packet}: span {c.span_start}-{c.span_end}, {len(c.members)} members")
