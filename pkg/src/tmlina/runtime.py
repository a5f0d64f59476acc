"""Deterministic execution of things flowing through a static model.

Scheduling rules:

* One activation per tick; the clock equals the length of the trace.
* Two FIFO lanes.  Injected things travel in the main lane.  Things set in
  motion by a trigger or spawned into a storage travel in the side lane, and
  the side lane is always drained first, so a triggered flow runs to rest
  before the thing that fired it moves on.
* Receive, Release and Transfer stages pass things through.  Process and
  Create stages may carry a handler that updates the thing, fires triggers,
  spawns child things, and picks the outgoing flow.
* A thing comes to rest when it flows into a storage or reaches a stage with
  no outgoing flow arrow.  Storage outflows of a stage that has other moves
  are only used by spawning; otherwise the thing itself is stored.
* A trigger whose target stage is fed by a storage releases the oldest stored
  thing of the same origin into that stage; any other trigger gives birth to a
  token carrying a snapshot of the firing thing's attributes.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .core import ActionKind, Arrow, ArrowKind, Stage, StaticModel, Storage

__all__ = [
    "Thing",
    "Activation",
    "HandlerResult",
    "ExecutionState",
    "Engine",
    "ConfigurationError",
    "ExecutionError",
    "LivelockError",
    "DEFAULT_TICK_BUDGET",
]

log = logging.getLogger(__name__)

DEFAULT_TICK_BUDGET = 10_000
_HANDLED = frozenset({ActionKind.PROCESS, ActionKind.CREATE})
_ENTRY = frozenset({ActionKind.TRANSFER, ActionKind.RECEIVE})


class ConfigurationError(ValueError):
    pass


class ExecutionError(RuntimeError):
    pass


class LivelockError(ExecutionError):
    pass


@dataclass
class Thing:
    id: str
    attributes: dict[str, Any] = field(default_factory=dict)
    location: int | None = None
    origin: str | None = None
    lane: str = "main"
    routes: list[int] = field(default_factory=list)
    steps: int = 0

    def __post_init__(self):
        if self.origin is None:
            self.origin = self.id


@dataclass(frozen=True)
class Activation:
    tick: int
    element: int
    thing: str
    origin: str
    via: int | None = None
    notes: Mapping[str, Any] = field(default_factory=dict)


@dataclass
class HandlerResult:
    """What a Process/Create handler asks the engine to do.

    ``choices`` lists arrow ids in the order they should take effect.  Trigger
    arrows fire; a flow arrow leaving the current stage is the thing's next
    move; any other flow arrow is remembered as a route for a later branch.
    ``spawn`` lists ``(arrow_id, attributes)`` pairs, each creating a child
    thing sent along that arrow (typically into a storage).
    """

    updates: dict[str, Any] = field(default_factory=dict)
    choices: list[int] = field(default_factory=list)
    spawn: list[tuple[int, dict[str, Any]]] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)


Handler = Callable[[Mapping[str, Any], "StateView"], "HandlerResult | None"]


@dataclass
class ExecutionState:
    clock: int = 0
    things: dict[str, Thing] = field(default_factory=dict)
    storage: dict[int, list[str]] = field(default_factory=dict)
    trace: list[Activation] = field(default_factory=list)
    rested: dict[str, int] = field(default_factory=dict)


class StateView:
    """Read-only window on the execution state handed to handlers."""

    def __init__(self, engine: "Engine", thing: Thing):
        self._engine = engine
        self.thing = thing

    @property
    def clock(self) -> int:
        return self._engine.state.clock

    def stored(self, storage: int | str) -> list[Mapping[str, Any]]:
        sid = self._engine.model.element(storage).id
        things = self._engine.state.things
        return [things[t].attributes for t in self._engine.state.storage.get(sid, ())]


class Engine:
    """Executes a :class:`StaticModel`; one engine per simulation run."""

    def __init__(self, model: StaticModel, tick_budget: int = DEFAULT_TICK_BUDGET):
        if tick_budget <= 0:
            raise ConfigurationError("tick budget must be positive")
        self.model = model
        self.tick_budget = tick_budget
        self.handlers: dict[int, Handler] = {}
        self.state = ExecutionState()
        self._main: deque = deque()
        self._side: deque = deque()
        self._children: dict[str, int] = {}
        # cached adjacency: element id -> flow arrows out / storage feeding in
        self._flows = {
            e.id: tuple(a for a in model.outgoing(e.id, ArrowKind.FLOW))
            for e in (*model.stages, *model.storages)
        }
        self._feeds = {}
        for a in model.arrows:
            if a.kind is ArrowKind.FLOW and isinstance(model.element(a.source), Storage):
                self._feeds.setdefault(a.target, a)

    def register_handler(self, stage: int | str, handler: Handler) -> "Engine":
        e = self.model.element(stage)
        if not isinstance(e, Stage) or e.kind not in _HANDLED:
            kind = e.kind.value if isinstance(e, Stage) else "storage"
            raise ConfigurationError(f"cannot attach a handler to {kind} stage {e.name!r}")
        if e.id in self.handlers:
            raise ConfigurationError(f"stage {e.name!r} already has a handler")
        self.handlers[e.id] = handler
        return self

    def inject(self, stage: int | str, thing: Thing) -> ExecutionState:
        """Place ``thing`` at an entry stage; it activates there on a later tick."""
        try:
            e = self.model.element(stage)
        except KeyError as exc:
            raise ConfigurationError(str(exc)) from None
        if not isinstance(e, Stage) or e.kind not in _ENTRY:
            raise ConfigurationError(f"things enter only at transfer or receive stages, not {e.name!r}")
        if thing.id in self.state.things:
            raise ConfigurationError(f"duplicate thing id {thing.id!r}")
        thing.lane = "main"
        self.state.things[thing.id] = thing
        self._main.append((thing.id, e.id, None))
        return self.state

    # -- scheduling ---------------------------------------------------------

    def _enqueue(self, thing: Thing, element: int, via: int | None):
        lane = self._side if thing.lane == "side" else self._main
        lane.append((thing.id, element, via))

    def _child(self, parent: Thing, attributes: dict) -> Thing:
        n = self._children.get(parent.origin, 0) + 1
        while f"{parent.origin}#{n}" in self.state.things:
            n += 1
        self._children[parent.origin] = n
        child = Thing(f"{parent.origin}#{n}", dict(attributes), origin=parent.origin, lane="side")
        self.state.things[child.id] = child
        return child

    def run_to_quiescence(self) -> list[Activation]:
        """Advance until nothing can move; returns the complete trace."""
        state = self.state
        while self._side or self._main:
            tid, element, via = (self._side or self._main).popleft()
            thing = state.things[tid]
            thing.steps += 1
            if thing.steps > self.tick_budget:
                raise LivelockError(
                    f"thing {tid!r} exceeded {self.tick_budget} activations without coming to rest"
                )
            thing.location = element
            self._activate(thing, element, via)
        return state.trace

    def _record(self, thing: Thing, element: int, via, notes):
        state = self.state
        state.trace.append(Activation(state.clock, element, thing.id, thing.origin, via, notes or {}))
        state.clock += 1

    def _rest(self, thing: Thing, element: int):
        if thing.id in self.state.rested:
            raise ExecutionError(f"thing {thing.id!r} came to rest twice")
        self.state.rested[thing.id] = element

    def _activate(self, thing: Thing, element: int, via: int | None):
        model = self.model
        e = model.element(element)
        if isinstance(e, Storage):
            self._record(thing, element, via, None)
            self.state.storage.setdefault(element, []).append(thing.id)
            self._rest(thing, element)
            return

        result = None
        handler = self.handlers.get(element)
        if handler is not None:
            result = handler(thing.attributes, StateView(self, thing))
        notes = result.notes if result is not None else None
        self._record(thing, element, via, notes)

        outgoing = self._flows[element]
        step = None
        if result is not None:
            thing.attributes.update(result.updates)
            for aid in result.choices:
                arrow = model.element(aid)
                if arrow.kind is ArrowKind.TRIGGER:
                    if arrow.source != element:
                        raise ExecutionError(f"stage {e.name!r} fired foreign trigger {arrow.name!r}")
                    self._fire(thing, arrow)
                elif arrow.source == element:
                    step = arrow
                else:
                    thing.routes.append(aid)
            for aid, attrs in result.spawn:
                arrow = model.element(aid)
                if arrow.source != element:
                    raise ExecutionError(f"stage {e.name!r} spawned along foreign arrow {arrow.name!r}")
                child = self._child(thing, attrs)
                self._enqueue(child, arrow.target, arrow.id)

        if step is None:
            moves = [a for a in outgoing if not isinstance(model.element(a.target), Storage)]
            if not moves:
                # only storage outflows left: the thing itself goes into storage
                moves = list(outgoing)
            if not moves:
                self._rest(thing, element)
                return
            if len(moves) == 1:
                step = moves[0]
            else:
                wanted = [a for a in moves if a.id in thing.routes]
                if len(wanted) != 1:
                    raise ExecutionError(f"no flow choice for {thing.id!r} at branch {e.name!r}")
                step = wanted[0]
                thing.routes.remove(step.id)
        self._enqueue(thing, step.target, step.id)

    def _fire(self, thing: Thing, arrow: Arrow):
        feed = self._feeds.get(arrow.target)
        if feed is not None:
            held = self.state.storage.get(feed.source, [])
            for i, tid in enumerate(held):
                if self.state.things[tid].origin == thing.origin:
                    del held[i]
                    released = self.state.things[tid]
                    self.state.rested.pop(tid, None)
                    released.lane = "side"
                    self._enqueue(released, arrow.target, arrow.id)
                    return
            raise ExecutionError(
                f"trigger {arrow.name!r} found nothing of {thing.origin!r} in storage"
            )
        token = self._child(thing, thing.attributes)
        self._enqueue(token, arrow.target, arrow.id)
