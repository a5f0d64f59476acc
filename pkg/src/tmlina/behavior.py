"""Chronology automaton derived from the static model.

The derivation replays the runtime's scheduling abstractly.  A configuration
holds the side-lane queue, the main thing's pending position and the last
event kind emitted.  Every activation either emits a new kind (its region
differs from the last one) or is silent, and each branch stage fans out to
all of its flows.  Subset construction over these configurations yields a
deterministic automaton over event kinds.

Acceptance has two forms.  A run that reaches quiescence right after a
terminal kind is accepted outright.  A run that reaches quiescence on a
non-terminal kind (implicit deny, decrypt error) is accepted only when the
last event states its drop reason; the kind sequence alone cannot tell such a
drop from a truncated prefix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import ActionKind, ArrowKind, StaticModel, Storage
from .events import DROP_REASONS, EventInstance, EventKind, EventProjector, REGIONS

__all__ = [
    "BehaviorAutomaton",
    "Accepted",
    "Rejected",
    "derive_automaton",
    "check_chronology",
]

_SPAWNERS = frozenset({ActionKind.PROCESS, ActionKind.CREATE})
_MAX_CONFIGS = 200_000


@dataclass(frozen=True)
class Accepted:
    def __bool__(self):
        return True


@dataclass(frozen=True)
class Rejected:
    index: int

    def __bool__(self):
        return False


@dataclass(frozen=True)
class BehaviorAutomaton:
    states: int
    initial: int
    transitions: Mapping[tuple[int, str], int]
    accepting: frozenset[int]
    guarded: frozenset[int]

    def step(self, state: int | None, kind: str) -> int | None:
        if state is None:
            return None
        return self.transitions.get((state, kind))

    def run(self, kinds: Iterable[str]) -> tuple[int | None, int]:
        """Final state (None once stuck) and the number of kinds consumed."""
        state, n = self.initial, 0
        for kind in kinds:
            nxt = self.step(state, kind)
            if nxt is None:
                return None, n
            state, n = nxt, n + 1
        return state, n

    def accepts(self, kinds: Sequence[str], reason: str | None = None) -> bool:
        state, n = self.run(kinds)
        if state is None or n != len(kinds):
            return False
        return state in self.accepting or (state in self.guarded and reason in DROP_REASONS)

    def alphabet(self) -> list[str]:
        return sorted({k for _, k in self.transitions}, key=lambda k: int(k[1:]))

    def to_dot(self, name: str = "chronology") -> str:
        lines = [f'digraph "{name}" {{', "  rankdir=LR;", '  start [shape=point];']
        for s in range(self.states):
            shape = "doublecircle" if s in self.accepting else "circle"
            style = ", style=dashed" if s in self.guarded else ""
            lines.append(f"  q{s} [shape={shape}{style}];")
        lines.append(f"  start -> q{self.initial};")
        for (src, kind), dst in sorted(self.transitions.items(),
                                       key=lambda kv: (kv[0][0], int(kv[0][1][1:]))):
            lines.append(f'  q{src} -> q{dst} [label="{kind}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# configuration: (side queue of (element, via), main (element, via) | None, main rest, last)
_Config = tuple


class _Abstract:
    def __init__(self, model: StaticModel, projector: EventProjector):
        self.model = model
        self.kind_of = projector.kind
        self.flows = {}
        self.triggers = {}
        for e in (*model.stages, *model.storages):
            self.flows[e.id] = model.outgoing(e.id, ArrowKind.FLOW)
            self.triggers[e.id] = model.outgoing(e.id, ArrowKind.TRIGGER)

    def _kind(self, element, via):
        return self.kind_of(_Act(element, via))

    def successors(self, cfg: _Config):
        side, main, rest, last = cfg
        if side:
            (element, via), side, lane = side[0], side[1:], "side"
        elif main is not None:
            (element, via), main, lane = main, None, "main"
        else:
            return
        kind = self._kind(element, via)
        label = kind if kind is not None and kind != last else None
        new_last = kind if kind is not None else last
        model = self.model
        e = model.element(element)

        if isinstance(e, Storage):
            yield label, (side, main, element if lane == "main" else rest, new_last)
            return

        born = []
        spawner = e.kind in _SPAWNERS
        if spawner:
            born += [(a.target, a.id) for a in self.triggers[element]]
        flows = self.flows[element]
        moves = [a for a in flows if not isinstance(model.element(a.target), Storage)]
        if spawner and moves:
            born += [(a.target, a.id) for a in flows if isinstance(model.element(a.target), Storage)]
        if not moves:
            moves = list(flows)
        side = side + tuple(born)

        if not moves:
            yield label, (side, main, element if lane == "main" else rest, new_last)
            return
        for a in moves:
            pos = (a.target, a.id)
            if lane == "main":
                yield label, (side, pos, rest, new_last)
            else:
                yield label, (side + (pos,), main, rest, new_last)


@dataclass(frozen=True)
class _Act:
    element: int
    via: int | None


def _entry(model: StaticModel) -> int:
    incoming = {a.target for a in model.arrows}
    starts = [s.id for s in model.stages
              if s.kind is ActionKind.TRANSFER and s.id not in incoming
              and model.outgoing(s.id)]
    if len(starts) != 1:
        raise ValueError(f"model needs exactly one entry transfer stage, found {len(starts)}")
    return starts[0]


def derive_automaton(model: StaticModel, catalog: Sequence[EventKind],
                     regions: Mapping[str, Sequence[str]] = REGIONS,
                     entry: int | str | None = None) -> BehaviorAutomaton:
    """Deterministic chronology automaton for one packet's event sequence."""
    terminal = {k.id for k in catalog if k.terminal}
    known = {k.id for k in catalog}
    projector = EventProjector(model, {k: v for k, v in regions.items() if k in known})
    ab = _Abstract(model, projector)
    start_el = model.element(entry).id if entry is not None else _entry(model)
    sinks = {s.id for s in model.stages
             if s.kind is ActionKind.TRANSFER and not model.outgoing(s.id)}

    seen_configs = 0

    def closure(configs):
        nonlocal seen_configs
        out, todo, moves = set(configs), deque(configs), {}
        while todo:
            cfg = todo.popleft()
            for label, nxt in ab.successors(cfg):
                if label is None:
                    if nxt not in out:
                        out.add(nxt)
                        todo.append(nxt)
                        seen_configs += 1
                        if seen_configs > _MAX_CONFIGS:
                            raise ValueError("model state space too large to derive an automaton")
                else:
                    moves.setdefault(label, set()).add(nxt)
        return frozenset(out), moves

    init = ((), (start_el, None), None, None)
    index: dict[frozenset, int] = {}
    pending: dict[int, dict] = {}
    transitions: dict[tuple[int, str], int] = {}
    accepting, guarded = set(), set()
    queue = deque()

    def intern(configs, last):
        closed, moves = closure(configs)
        if closed in index:
            return index[closed]
        sid = len(index)
        index[closed] = sid
        pending[sid] = moves
        done = [c for c in closed if not c[0] and c[1] is None]
        if done and any(c[2] in sinks for c in done):
            if last in terminal:
                accepting.add(sid)
            elif last is not None:
                guarded.add(sid)
        queue.append(sid)
        return sid

    initial = intern([init], None)
    while queue:
        sid = queue.popleft()
        for label in sorted(pending[sid], key=lambda k: int(k[1:])):
            transitions[(sid, label)] = intern(pending[sid][label], label)
        del pending[sid]

    return BehaviorAutomaton(len(index), initial, transitions, frozenset(accepting),
                             frozenset(guarded))


def check_chronology(seq: Sequence[EventInstance], automaton: BehaviorAutomaton
                     ) -> Accepted | Rejected:
    """Accepted iff ``seq`` is a complete admissible sequence for one packet."""
    packets = {ev.packet for ev in seq}
    if len(packets) > 1:
        raise ValueError(f"sequence mixes packets {sorted(packets)}")
    if not seq:
        return Rejected(0)
    state = automaton.initial
    for i, ev in enumerate(seq):
        state = automaton.step(state, ev.kind)
        if state is None:
            return Rejected(i)
    if state in automaton.accepting:
        return Accepted()
    if state in automaton.guarded and seq[-1].attributes.get("reason") in DROP_REASONS:
        return Accepted()
    return Rejected(len(seq))
