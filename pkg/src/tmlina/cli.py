"""``tmlina`` command line.

Exit status: 0 on success, 1 when a model or chronology check fails, 2 when
an input cannot be read or parsed.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from collections import Counter as Tally
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .behavior import check_chronology, derive_automaton
from .core import export_dot, validate_model
from .events import event_catalog, event_from_record, event_record
from .lina.model import build_lina_model
from .lina.ops import Dropped, ToDAQ
from .lina.pipeline import Simulator
from .lina.tables import ParseError, Tables, decode_document, parse_tables, read_trace
from .monitor import Monitor, MonitorConfig, parse_kinds, parse_merge
from .runtime import DEFAULT_TICK_BUDGET, ExecutionError

__all__ = ["main", "build_parser", "RunSummary"]

OK, FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunSummary:
    packets: int = 0
    dispositions: dict[str, int] = field(
        default_factory=lambda: {"dropped": 0, "to_daq": 0, "to_flow_update": 0})
    events: Tally = field(default_factory=Tally)
    counter_final: int = 0

    def add(self, disposition, events):
        self.packets += 1
        if isinstance(disposition, Dropped):
            self.dispositions["dropped"] += 1
        elif isinstance(disposition, ToDAQ):
            self.dispositions["to_daq"] += 1
        else:
            self.dispositions["to_flow_update"] += 1
        self.events.update(e.kind for e in events)

    def render(self) -> str:
        d = self.dispositions
        lines = [
            f"packets: {self.packets}",
            f"dropped: {d['dropped']}  to_daq: {d['to_daq']}  to_flow_update: {d['to_flow_update']}",
            f"events: {sum(self.events.values())} across {len(self.events)} kinds",
            f"input counter: {self.counter_final}",
        ]
        for kind in sorted(self.events, key=lambda k: int(k[1:])):
            lines.append(f"  {kind:<4} {self.events[kind]}")
        return "\n".join(lines)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_config(path: str) -> tuple[Tables, dict]:
    doc = decode_document(_read_text(path), source=path)
    try:
        tables = parse_tables(doc)
    except ParseError as exc:
        raise ParseError(exc.reason, line=exc.line, field=exc.field, source=path) from None
    monitor = doc.get("monitor") if isinstance(doc, dict) else None
    if monitor is not None and not isinstance(monitor, dict):
        raise ParseError("monitor section must be an object", field="monitor", source=path)
    return tables, monitor or {}


def _write(path: str, text: str):
    try:
        if path == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from None


def _monitor_config(args, section: dict) -> MonitorConfig:
    try:
        if args.watch is None and not args.merge:
            return MonitorConfig.from_document(section)
        watched = parse_kinds(args.watch) if args.watch else parse_kinds("all")
        rules = tuple(parse_merge(m) for m in args.merge or ())
        return MonitorConfig(watched, rules)
    except ValueError as exc:
        raise InputError(f"monitor settings: {exc}") from None


def cmd_simulate(args) -> int:
    tables, section = _load_config(args.config)
    config = _monitor_config(args, section)
    packets = list(read_trace(_read_text(args.trace).splitlines(), source=args.trace))

    sim = Simulator(tables, tick_budget=args.tick_budget)
    automaton = derive_automaton(sim.model, event_catalog())
    monitor = Monitor(config)
    summary = RunSummary()
    events_out = io.StringIO()
    failures = []
    for pkt in packets:
        try:
            disposition, events = sim.process_packet(pkt)
        except ExecutionError as exc:
            print(f"error: packet {pkt.id}: {exc}", file=sys.stderr)
            return FAILED
        verdict = check_chronology(events, automaton)
        if not verdict:
            failures.append((pkt.id, verdict.index))
        summary.add(disposition, events)
        for ev in events:
            events_out.write(json.dumps(event_record(ev)) + "\n")
        monitor.observe_packet(events)
    summary.counter_final = sim.counter.value

    if failures:
        for pid, index in failures:
            print(f"conformance failure: packet {pid} rejected at index {index}", file=sys.stderr)
        return FAILED

    if args.events:
        _write(args.events, events_out.getvalue())
    if args.monitor:
        _write(args.monitor, monitor.log.dumps())
    if args.summary:
        print(summary.render())
    else:
        d = summary.dispositions
        print(f"{summary.packets} packets: {d['to_daq']} to DAQ, "
              f"{d['to_flow_update']} to flow update, {d['dropped']} dropped")
    return OK


def cmd_validate(args) -> int:
    model = build_lina_model()
    violations = validate_model(model)
    print(f"model: {len(violations)} violations")
    for v in violations:
        print(f"  {v.rule}: {v.message}")
    if args.config:
        tables, section = _load_config(args.config)
        try:
            MonitorConfig.from_document(section)
        except ValueError as exc:
            raise ParseError(str(exc), field="monitor", source=args.config) from None
        print(f"config: {len(tables.destinations)} destinations, {len(tables.nat_table)} NAT "
              f"entries, {len(tables.routes)} routes, {len(tables.prefilter)} prefilter "
              f"policies, {len(tables.acl)} ACL rules")
    return FAILED if violations else OK


def cmd_export_dot(args) -> int:
    model = build_lina_model()
    if args.automaton:
        text = derive_automaton(model, event_catalog()).to_dot()
    else:
        text = export_dot(model)
    _write(args.output, text)
    if args.output != "-":
        print(f"wrote {args.output}")
    return OK


def cmd_events(args) -> int:
    for kind in event_catalog():
        flag = "terminal" if kind.terminal else "loop" if kind.repeatable else "-"
        print(f"{kind.id:<4} {flag:<8} {kind.description}")
    return OK


def cmd_check(args) -> int:
    text = _read_text(args.events_log)
    groups: dict[str, list] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            ev = event_from_record(json.loads(line))
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise ParseError(str(exc), line=n, source=args.events_log) from None
        groups.setdefault(ev.packet, []).append(ev)
    automaton = derive_automaton(build_lina_model(), event_catalog())
    status = OK
    for pid, seq in groups.items():
        verdict = check_chronology(seq, automaton)
        if not verdict:
            status = FAILED
            at = seq[verdict.index].kind if verdict.index < len(seq) else "end of sequence"
            print(f"packet {pid}: rejected at index {verdict.index} ({at})")
    if status == OK:
        print(f"{len(groups)} packets accepted")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmlina",
                                     description="LINA packet pipeline on a thinging-machine runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a packet trace through LINA")
    sim.add_argument("--config", required=True, help="tables document (JSON)")
    sim.add_argument("--trace", required=True, help="packet trace (NDJSON)")
    sim.add_argument("--events", help="write the event log here")
    sim.add_argument("--monitor", help="write the monitor log here")
    sim.add_argument("--watch", help="comma-separated event kinds to watch, or 'all'")
    sim.add_argument("--merge", action="append", metavar="NAME=K1,K2,...",
                     help="merge rule; may be repeated")
    sim.add_argument("--summary", action="store_true", help="print per-kind totals")
    sim.add_argument("--tick-budget", type=int, default=DEFAULT_TICK_BUDGET,
                     help="activations allowed per thing (default %(default)s)")
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="check the built-in model and optionally a config")
    val.add_argument("--config")
    val.set_defaults(func=cmd_validate)

    dot = sub.add_parser("export-dot", help="write the model (or automaton) as DOT")
    dot.add_argument("output", nargs="?", default="-")
    dot.add_argument("--automaton", action="store_true", help="export the chronology automaton")
    dot.set_defaults(func=cmd_export_dot)

    ev = sub.add_parser("events", help="list the event catalog")
    ev.set_defaults(func=cmd_events)

    chk = sub.add_parser("check", help="check an event log against the chronology")
    chk.add_argument("events_log")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tick_budget", 1) <= 0:
        print("error: --tick-budget must be positive", file=sys.stderr)
        return BAD_INPUT
    try:
        return args.func(args)
    except (ParseError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
