"""Plant flowsheet digraphs.

A flowsheet file is line oriented, whitespace delimited, with ``#`` comments::

    unit   <id> <name...>
    stream <id> <name...>
    edge   <from> <to>
    var    <tag> <node> measured|manipulated
    loop   <cv_tag> <mv_tag>

Node records precede edges and variable records precede loops.  Edges must
join a unit and a stream (either direction); the graph must be weakly
connected.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .errors import FlowsheetError


class NodeKind(enum.Enum):
    UNIT = "unit"
    STREAM = "stream"


class Role(enum.Enum):
    MEASURED = "measured"
    MANIPULATED = "manipulated"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    name: str


@dataclass(frozen=True)
class Variable:
    tag: str
    node: str
    role: Role


@dataclass(frozen=True)
class ControlLoop:
    cv: str
    mv: str


@dataclass(frozen=True)
class FlowsheetGraph:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[str, str], ...]
    variables: tuple[Variable, ...] = ()
    loops: tuple[ControlLoop, ...] = ()

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def variable_map(self) -> dict[str, Variable]:
        return {v.tag: v for v in self.variables}

    @cached_property
    def units(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind is NodeKind.UNIT)

    @cached_property
    def streams(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.kind is NodeKind.STREAM)

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        out = defaultdict(list)
        for a, b in self.edges:
            out[a].append(b)
        return {n.id: tuple(out[n.id]) for n in self.nodes}

    @cached_property
    def predecessors(self) -> dict[str, tuple[str, ...]]:
        inc = defaultdict(list)
        for a, b in self.edges:
            inc[b].append(a)
        return {n.id: tuple(inc[n.id]) for n in self.nodes}

    @cached_property
    def node_variables(self) -> dict[str, tuple[str, ...]]:
        on = defaultdict(list)
        for v in self.variables:
            on[v.node].append(v.tag)
        return {n.id: tuple(on[n.id]) for n in self.nodes}

    def is_unit(self, node_id: str) -> bool:
        return self.node_map[node_id].kind is NodeKind.UNIT

    def neighbors(self, node_id: str) -> tuple[str, ...]:
        """Nodes adjacent to ``node_id`` by an edge in either direction."""
        seen = dict.fromkeys(self.successors[node_id] + self.predecessors[node_id])
        return tuple(seen)

    def degree(self, node_id: str) -> int:
        return len(self.successors[node_id]) + len(self.predecessors[node_id])

    def is_weakly_connected(self, subset: Iterable[str] | None = None) -> bool:
        nodes = set(self.node_map) if subset is None else set(subset)
        if not nodes:
            return False
        start = next(iter(sorted(nodes)))
        stack, seen = [start], {start}
        while stack:
            cur = stack.pop()
            for nb in self.neighbors(cur):
                if nb in nodes and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return seen == nodes

    def validate(self) -> "FlowsheetGraph":
        _validate(self, {})
        return self


def _validate(g: FlowsheetGraph, where: dict) -> None:
    """Check graph invariants; ``where`` maps records to source line numbers."""
    if not g.units:
        raise FlowsheetError("flowsheet defines no unit nodes")
    seen = {}
    for n in g.nodes:
        if not n.id or any(c.isspace() for c in n.id):
            raise FlowsheetError(f"invalid node id {n.id!r}", where.get(("node", n.id)))
        if n.id in seen:
            raise FlowsheetError(f"duplicate node id {n.id!r}", where.get(("dupnode", n.id)))
        seen[n.id] = n
    for i, (a, b) in enumerate(g.edges):
        ln = where.get(("edge", i))
        for end in (a, b):
            if end not in seen:
                raise FlowsheetError(f"edge references unknown node {end!r}", ln)
        if seen[a].kind is seen[b].kind:
            kind = seen[a].kind.value
            raise FlowsheetError(f"edge {a}->{b} joins two {kind} nodes", ln)
    tags = set()
    for v in g.variables:
        ln = where.get(("var", v.tag))
        if v.tag in tags:
            raise FlowsheetError(f"duplicate variable tag {v.tag!r}", where.get(("dupvar", v.tag)))
        tags.add(v.tag)
        if v.node not in seen:
            raise FlowsheetError(f"variable {v.tag!r} attached to unknown node {v.node!r}", ln)
    vmap = g.variable_map
    for i, lp in enumerate(g.loops):
        ln = where.get(("loop", i))
        for tag, role in ((lp.cv, Role.MEASURED), (lp.mv, Role.MANIPULATED)):
            if tag not in vmap:
                raise FlowsheetError(f"loop references unknown tag {tag!r}", ln)
            if vmap[tag].role is not role:
                raise FlowsheetError(f"loop tag {tag!r} must be {role.value}", ln)
    if not g.is_weakly_connected():
        raise FlowsheetError("flowsheet graph is not weakly connected")


def parse_flowsheet(text: str) -> FlowsheetGraph:
    nodes, edges, variables, loops = [], [], [], []
    where: dict = {}
    node_ids = set()
    tags = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tok = line.split()
        if not tok:
            continue
        rec = tok[0].lower()
        if rec in ("unit", "stream"):
            if edges:
                raise FlowsheetError("node record after edge records", lineno)
            if len(tok) < 2:
                raise FlowsheetError(f"malformed {rec} record", lineno)
            nid = tok[1]
            if nid in node_ids:
                raise FlowsheetError(f"duplicate node id {nid!r}", lineno)
            node_ids.add(nid)
            name = " ".join(tok[2:]) or nid
            nodes.append(Node(nid, NodeKind(rec), name))
            where[("node", nid)] = lineno
        elif rec == "edge":
            if len(tok) != 3:
                raise FlowsheetError("malformed edge record, expected 'edge <from> <to>'", lineno)
            where[("edge", len(edges))] = lineno
            edges.append((tok[1], tok[2]))
        elif rec == "var":
            if loops:
                raise FlowsheetError("variable record after loop records", lineno)
            if len(tok) != 4 or tok[3].lower() not in ("measured", "manipulated"):
                raise FlowsheetError(
                    "malformed var record, expected 'var <tag> <node> measured|manipulated'", lineno
                )
            if tok[1] in tags:
                raise FlowsheetError(f"duplicate variable tag {tok[1]!r}", lineno)
            tags.add(tok[1])
            where[("var", tok[1])] = lineno
            variables.append(Variable(tok[1], tok[2], Role(tok[3].lower())))
        elif rec == "loop":
            if len(tok) != 3:
                raise FlowsheetError("malformed loop record, expected 'loop <cv> <mv>'", lineno)
            where[("loop", len(loops))] = lineno
            loops.append(ControlLoop(tok[1], tok[2]))
        else:
            raise FlowsheetError(f"unknown record type {tok[0]!r}", lineno)
    g = FlowsheetGraph(tuple(nodes), tuple(edges), tuple(variables), tuple(loops))
    _validate(g, where)
    return g


def format_flowsheet(g: FlowsheetGraph) -> str:
    """Serialize ``g`` in the format read by :func:`parse_flowsheet`."""
    lines = [f"{n.kind.value} {n.id} {n.name}" for n in g.nodes]
    lines += [f"edge {a} {b}" for a, b in g.edges]
    lines += [f"var {v.tag} {v.node} {v.role.value}" for v in g.variables]
    lines += [f"loop {lp.cv} {lp.mv}" for lp in g.loops]
    return "\n".join(lines) + "\n"


def load_flowsheet(path) -> FlowsheetGraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FlowsheetError(f"cannot read flowsheet {str(path)!r}: {exc.strerror}") from exc
    return parse_flowsheet(text)


def tep_flowsheet_path() -> Path:
    """Path of the bundled Tennessee Eastman flowsheet."""
    return Path(__file__).with_name("data") / "tep.flowsheet"


def load_tep_flowsheet() -> FlowsheetGraph:
    return load_flowsheet(tep_flowsheet_path())


@dataclass(frozen=True)
class Subgraph:
    id: int
    nodes: frozenset[str]

    def units(self, g: FlowsheetGraph) -> tuple[str, ...]:
        return tuple(u for u in g.units if u in self.nodes)


@dataclass(frozen=True)
class Partition:
    subgraphs: tuple[Subgraph, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.subgraphs)

    def __iter__(self):
        return iter(self.subgraphs)

    def get(self, sid: int) -> Subgraph:
        for s in self.subgraphs:
            if s.id == sid:
                return s
        raise KeyError(sid)


def initial_subgraphs(g: FlowsheetGraph, exclusive_streams: bool = False) -> Partition:
    """One subgraph per unit: the unit plus every stream touching it.

    Streams between two units land in both subgraphs.  With
    ``exclusive_streams`` each stream joins only the unit it feeds, or its
    producer when it feeds nothing.
    """
    if not exclusive_streams:
        subs = [
            Subgraph(i, frozenset((u,) + g.neighbors(u)))
            for i, u in enumerate(g.units)
        ]
        return Partition(tuple(subs))
    order = {u: i for i, u in enumerate(g.units)}
    owner = {}
    for s in g.streams:
        consumers = [n for n in g.successors[s] if g.is_unit(n)]
        producers = [n for n in g.predecessors[s] if g.is_unit(n)]
        # first listed unit wins when a stream has several consumers
        pick = consumers or producers
        owner[s] = min(pick, key=order.__getitem__)
    subs = []
    for i, u in enumerate(g.units):
        members = {u} | {s for s, o in owner.items() if o == u}
        subs.append(Subgraph(i, frozenset(members)))
    return Partition(tuple(subs))


def measurement_count(nodes: Iterable[str] | Subgraph, g: FlowsheetGraph) -> int:
    """Number of variable tags (measured and manipulated) on ``nodes``."""
    if isinstance(nodes, Subgraph):
        nodes = nodes.nodes
    total = 0
    per_node = g.node_variables
    for n in nodes:
        if n not in per_node:
            raise KeyError(f"node {n!r} is not in the flowsheet")
        total += len(per_node[n])
    return total
