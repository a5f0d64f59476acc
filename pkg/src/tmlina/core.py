"""Thinging-machine metamodel: thimacs, five-action stages, storages, arrows.

A model is declared as a plain mapping (usually loaded from JSON) that names
every element; :func:`build_model` resolves names to dense integer ids in
declaration order and returns an immutable :class:`StaticModel`.

>>> m = build_model({"thimacs": [{"name": "m"}],
...                  "stages": [{"name": "in", "thimac": "m", "kind": "receive"},
...                             {"name": "out", "thimac": "m", "kind": "release"}],
...                  "arrows": [{"from": "in", "to": "out"}]})
>>> validate_model(m)
[]
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Mapping

__all__ = [
    "ActionKind",
    "ArrowKind",
    "Thimac",
    "Stage",
    "Storage",
    "Arrow",
    "StaticModel",
    "Violation",
    "ModelError",
    "AnchorNotFound",
    "InvalidModel",
    "build_model",
    "load_model_spec",
    "validate_model",
    "anchor_lookup",
    "export_dot",
]


class ActionKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"


class ArrowKind(enum.Enum):
    FLOW = "flow"
    TRIGGER = "trigger"


class ModelError(ValueError):
    """Raised when a model declaration cannot be turned into a model."""


class AnchorNotFound(KeyError):
    pass


class InvalidModel(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations)
        super().__init__(f"model has {len(self.violations)} violation(s):\n{lines}")


@dataclass(frozen=True)
class Thimac:
    id: int
    name: str
    parent: int | None = None


@dataclass(frozen=True)
class Stage:
    id: int
    name: str
    owner: int
    kind: ActionKind
    anchor: int | None = None


@dataclass(frozen=True)
class Storage:
    id: int
    name: str
    owner: int
    anchor: int | None = None


@dataclass(frozen=True)
class Arrow:
    id: int
    name: str
    kind: ArrowKind
    source: int
    target: int
    anchor: int | None = None


@dataclass(frozen=True)
class Violation:
    rule: str
    element: int | None
    message: str

    def __str__(self):
        where = "" if self.element is None else f" [#{self.element}]"
        return f"{self.rule}{where}: {self.message}"


@dataclass(frozen=True)
class StaticModel:
    name: str = ""
    thimacs: tuple[Thimac, ...] = ()
    stages: tuple[Stage, ...] = ()
    storages: tuple[Storage, ...] = ()
    arrows: tuple[Arrow, ...] = ()

    @cached_property
    def _by_id(self) -> dict[int, Any]:
        items = (*self.thimacs, *self.stages, *self.storages, *self.arrows)
        return {e.id: e for e in items}

    @cached_property
    def _by_name(self) -> dict[str, int]:
        out = {}
        for e in (*self.thimacs, *self.stages, *self.storages, *self.arrows):
            out.setdefault(e.name, e.id)
        return out

    @cached_property
    def _outgoing(self) -> dict[int, tuple[Arrow, ...]]:
        out: dict[int, list[Arrow]] = {}
        for a in self.arrows:
            out.setdefault(a.source, []).append(a)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def _incoming(self) -> dict[int, tuple[Arrow, ...]]:
        out: dict[int, list[Arrow]] = {}
        for a in self.arrows:
            out.setdefault(a.target, []).append(a)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def anchors(self) -> dict[int, int]:
        """Anchor label -> element id (first holder wins on duplicates)."""
        out: dict[int, int] = {}
        for e in (*self.stages, *self.storages, *self.arrows):
            if e.anchor is not None:
                out.setdefault(e.anchor, e.id)
        return out

    def element(self, ref: int | str):
        """Look up any element by id or by name."""
        if isinstance(ref, str):
            try:
                ref = self._by_name[ref]
            except KeyError:
                raise KeyError(f"no element named {ref!r}") from None
        try:
            return self._by_id[ref]
        except KeyError:
            raise KeyError(f"no element with id {ref}") from None

    def id_of(self, name: str) -> int:
        return self.element(name).id

    def has(self, ref: int | str) -> bool:
        if isinstance(ref, str):
            return ref in self._by_name
        return ref in self._by_id

    def outgoing(self, ref: int | str, kind: ArrowKind | None = None) -> tuple[Arrow, ...]:
        arrows = self._outgoing.get(self.element(ref).id, ())
        if kind is None:
            return arrows
        return tuple(a for a in arrows if a.kind is kind)

    def incoming(self, ref: int | str, kind: ArrowKind | None = None) -> tuple[Arrow, ...]:
        arrows = self._incoming.get(self.element(ref).id, ())
        if kind is None:
            return arrows
        return tuple(a for a in arrows if a.kind is kind)

    def owner_of(self, ref: int | str) -> int | None:
        e = self.element(ref)
        return getattr(e, "owner", None)

    def thimac_path(self, thimac_id: int) -> list[str]:
        """Names from the root thimac down to ``thimac_id``."""
        path, seen = [], set()
        cur: int | None = thimac_id
        while cur is not None and cur not in seen:
            seen.add(cur)
            t = self._by_id[cur]
            path.append(t.name)
            cur = t.parent
        return path[::-1]

    def to_spec(self) -> dict:
        """Declarative form accepted by :func:`build_model`."""
        name = lambda i: self._by_id[i].name  # noqa: E731

        def anchored(d, e):
            if e.anchor is not None:
                d["anchor"] = e.anchor
            return d

        return {
            "name": self.name,
            "thimacs": [
                {"name": t.name, **({"parent": name(t.parent)} if t.parent is not None else {})}
                for t in self.thimacs
            ],
            "stages": [
                anchored({"name": s.name, "thimac": name(s.owner), "kind": s.kind.value}, s)
                for s in self.stages
            ],
            "storages": [
                anchored({"name": s.name, "thimac": name(s.owner)}, s) for s in self.storages
            ],
            "arrows": [
                anchored(
                    {
                        "name": a.name,
                        "kind": a.kind.value,
                        "from": name(a.source),
                        "to": name(a.target),
                    },
                    a,
                )
                for a in self.arrows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_spec(), indent=2) + "\n"


def _enum(cls, value, where):
    try:
        return cls(str(value).lower())
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ModelError(f"{where}: unknown kind {value!r} (expected one of {allowed})") from None


def _anchor(value, where):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{where}: anchor must be an integer, got {value!r}")
    return value


def build_model(spec: Mapping[str, Any]) -> StaticModel:
    """Build a :class:`StaticModel` from a declarative description.

    Ids are dense integers shared by all element types, assigned in the order
    thimacs, stages, storages, arrows, each in declaration order.
    """
    names: dict[str, int] = {}
    anchors: dict[int, str] = {}
    next_id = 0

    def claim(name, where):
        nonlocal next_id
        if not isinstance(name, str) or not name:
            raise ModelError(f"{where}: missing name")
        if name in names:
            raise ModelError(f"{where}: duplicate name {name!r}")
        names[name] = next_id
        next_id += 1
        return names[name]

    def claim_anchor(label, name, where):
        label = _anchor(label, where)
        if label is not None:
            if label in anchors:
                raise ModelError(
                    f"{where}: anchor {label} already used by {anchors[label]!r}"
                )
            anchors[label] = name
        return label

    raw_thimacs = list(spec.get("thimacs", ()))
    thimac_ids = [claim(t.get("name"), f"thimacs[{i}]") for i, t in enumerate(raw_thimacs)]
    thimacs = []
    for i, (t, tid) in enumerate(zip(raw_thimacs, thimac_ids)):
        parent = t.get("parent")
        if parent is not None:
            if parent not in names or names[parent] not in thimac_ids:
                raise ModelError(f"thimacs[{i}]: unknown parent thimac {parent!r}")
            parent = names[parent]
        thimacs.append(Thimac(tid, t["name"], parent))
    thimac_set = set(thimac_ids)

    def owner(ref, where):
        if ref not in names or names[ref] not in thimac_set:
            raise ModelError(f"{where}: unknown thimac {ref!r}")
        return names[ref]

    stages = []
    for i, s in enumerate(spec.get("stages", ())):
        where = f"stages[{i}]"
        sid = claim(s.get("name"), where)
        stages.append(
            Stage(
                sid,
                s["name"],
                owner(s.get("thimac"), where),
                _enum(ActionKind, s.get("kind"), where),
                claim_anchor(s.get("anchor"), s["name"], where),
            )
        )

    storages = []
    for i, s in enumerate(spec.get("storages", ())):
        where = f"storages[{i}]"
        sid = claim(s.get("name"), where)
        storages.append(
            Storage(sid, s["name"], owner(s.get("thimac"), where),
                    claim_anchor(s.get("anchor"), s["name"], where))
        )

    endpoint_ids = {s.id for s in stages} | {s.id for s in storages}
    arrows = []
    for i, a in enumerate(spec.get("arrows", ())):
        where = f"arrows[{i}]"
        ends = []
        for key in ("from", "to"):
            ref = a.get(key)
            if ref not in names or names[ref] not in endpoint_ids:
                raise ModelError(f"{where}: {key!r} refers to unknown stage or storage {ref!r}")
            ends.append(names[ref])
        name = a.get("name") or f"{a['from']}->{a['to']}"
        aid = claim(name, where)
        arrows.append(
            Arrow(
                aid,
                name,
                _enum(ArrowKind, a.get("kind", "flow"), where),
                ends[0],
                ends[1],
                claim_anchor(a.get("anchor"), name, where),
            )
        )

    return StaticModel(
        name=str(spec.get("name", "")),
        thimacs=tuple(thimacs),
        stages=tuple(stages),
        storages=tuple(storages),
        arrows=tuple(arrows),
    )


def load_model_spec(path) -> StaticModel:
    with open(path, encoding="utf-8") as fh:
        return build_model(json.load(fh))


# Legal flow adjacency.  "storage" stands for any Storage endpoint.
_A = ActionKind
LEGAL_FLOWS = frozenset(
    {
        (_A.TRANSFER, _A.RECEIVE),
        (_A.RELEASE, _A.TRANSFER),
        (_A.TRANSFER, _A.TRANSFER),
        (_A.RECEIVE, _A.PROCESS),
        (_A.RECEIVE, _A.RELEASE),
        (_A.PROCESS, _A.RELEASE),
        (_A.PROCESS, _A.CREATE),
        (_A.CREATE, _A.PROCESS),
        (_A.CREATE, _A.RELEASE),
        (_A.CREATE, "storage"),
        (_A.PROCESS, "storage"),
        (_A.RECEIVE, "storage"),
        ("storage", _A.RELEASE),
        ("storage", _A.PROCESS),
    }
)
TRIGGER_SOURCES = frozenset({_A.PROCESS, _A.CREATE})


def _kind_of(e):
    if isinstance(e, Stage):
        return e.kind
    if isinstance(e, Storage):
        return "storage"
    return None


def _label(k):
    return k if isinstance(k, str) else k.value


def validate_model(model: StaticModel) -> list[Violation]:
    """Return every well-formedness violation; an empty list means valid."""
    out: list[Violation] = []
    by_id = model._by_id

    # thimac forest
    for t in model.thimacs:
        seen = {t.id}
        cur = t.parent
        while cur is not None:
            parent = by_id.get(cur)
            if not isinstance(parent, Thimac):
                out.append(Violation("thimac-parent", t.id, f"{t.name!r} has unknown parent {cur}"))
                break
            if cur in seen:
                out.append(Violation("thimac-cycle", t.id, f"{t.name!r} is in a parent cycle"))
                break
            seen.add(cur)
            cur = parent.parent

    for e in (*model.stages, *model.storages):
        if not isinstance(by_id.get(e.owner), Thimac):
            out.append(Violation("owner", e.id, f"{e.name!r} has unknown owner {e.owner}"))

    seen_anchor: dict[int, int] = {}
    for e in (*model.stages, *model.storages, *model.arrows):
        if e.anchor is None:
            continue
        if e.anchor in seen_anchor:
            out.append(
                Violation("anchor-unique", e.id, f"anchor {e.anchor} repeats #{seen_anchor[e.anchor]}")
            )
        else:
            seen_anchor[e.anchor] = e.id

    crossing: set[int] = set()
    for a in model.arrows:
        src, dst = by_id.get(a.source), by_id.get(a.target)
        ks, kd = _kind_of(src), _kind_of(dst)
        if ks is None or kd is None:
            out.append(Violation("endpoint", a.id, f"arrow {a.name!r} has a dangling endpoint"))
            continue
        if a.kind is ArrowKind.TRIGGER:
            if ks not in TRIGGER_SOURCES:
                out.append(
                    Violation("trigger-source", a.id,
                              f"trigger {a.name!r} starts at a {_label(ks)} stage")
                )
            if kd == "storage":
                out.append(Violation("trigger-target", a.id, f"trigger {a.name!r} targets a storage"))
            continue
        if (ks, kd) not in LEGAL_FLOWS:
            out.append(
                Violation("adjacency", a.id,
                          f"flow {a.name!r}: {_label(ks)} -> {_label(kd)} is not a legal step")
            )
            continue
        if src.owner != dst.owner:
            crossing.add(src.id)
            crossing.add(dst.id)
        elif ks is ActionKind.TRANSFER and kd is ActionKind.TRANSFER:
            out.append(
                Violation("adjacency", a.id,
                          f"flow {a.name!r}: transfer -> transfer must cross a thimac boundary")
            )

    for s in model.stages:
        if s.kind is ActionKind.TRANSFER and s.id not in crossing:
            out.append(
                Violation("transfer-dangling", s.id,
                          f"transfer {s.name!r} has no flow crossing a thimac boundary")
            )
    return out


def anchor_lookup(model: StaticModel, label: int) -> int:
    """Id of the stage, storage or arrow carrying anchor ``label``."""
    try:
        return model.anchors[label]
    except KeyError:
        raise AnchorNotFound(f"no element carries anchor {label}") from None


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(model: StaticModel) -> str:
    """Render ``model`` as Graphviz DOT text.

    Thimacs become nested clusters, stages are boxes labelled with their action
    and anchor, storages are cylinders and trigger arrows are dashed.  Refuses
    (:class:`InvalidModel`) to draw a model that does not validate.
    """
    violations = validate_model(model)
    if violations:
        raise InvalidModel(violations)

    children: dict[int | None, list[Thimac]] = {}
    for t in model.thimacs:
        children.setdefault(t.parent, []).append(t)
    members: dict[int, list] = {}
    for e in (*model.stages, *model.storages):
        members.setdefault(e.owner, []).append(e)

    lines = [f"digraph {_quote(model.name or 'tm')} {{", "  compound=true;", "  node [fontsize=10];"]

    def node(e, indent):
        tag = f" ({e.anchor})" if e.anchor is not None else ""
        if isinstance(e, Stage):
            head, shape = f"{e.kind.value.capitalize()}{tag}", "box"
        else:
            head, shape = f"Storage{tag}", "cylinder"
        # quote the parts separately so the DOT line break survives escaping
        label = _quote(head)[:-1] + "\\n" + _quote(e.name)[1:]
        lines.append(f"{indent}n{e.id} [label={label}, shape={shape}];")

    def cluster(t, depth):
        indent = "  " * depth
        lines.append(f"{indent}subgraph cluster_{t.id} {{")
        lines.append(f"{indent}  label={_quote(t.name)};")
        for e in members.get(t.id, ()):
            node(e, indent + "  ")
        for c in children.get(t.id, ()):
            cluster(c, depth + 1)
        lines.append(f"{indent}}}")

    for root in children.get(None, ()):
        cluster(root, 1)
    for a in model.arrows:
        attrs = []
        if a.anchor is not None:
            attrs.append(f"label={_quote(f'({a.anchor})')}")
        if a.kind is ArrowKind.TRIGGER:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  n{a.source} -> n{a.target}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def iter_elements(model: StaticModel) -> Iterable:
    yield from model.thimacs
    yield from model.stages
    yield from model.storages
    yield from model.arrows
