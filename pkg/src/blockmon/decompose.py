"""MAR-based flowsheet decomposition into monitoring blocks.

Phase one merges unit-centred subgraphs whose measurement allocation ratio
(share of the plant's counted variables) falls below ``delta``.  Phase two
pulls the manipulated variable of each control loop into the block that
holds its controlled variable.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError
from .flowsheet import (
    ControlLoop,
    FlowsheetGraph,
    Partition,
    Subgraph,
    initial_subgraphs,
    measurement_count,
)

log = logging.getLogger(__name__)

__all__ = [
    "DecompositionConfig",
    "MonitoringBlock",
    "Partition",
    "Subgraph",
    "blocks_from_partition",
    "blocks_to_json",
    "control_refine",
    "decompose",
    "load_blocks",
    "mar",
    "mar_decompose",
    "mar_values",
    "merge_pass",
    "natural_key",
    "save_blocks",
]


@dataclass(frozen=True)
class DecompositionConfig:
    delta: float = 0.15
    exclusive_streams: bool = False
    control_aware: bool = False
    undirected_neighbors: bool = False
    move_mv: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class MonitoringBlock:
    name: str
    variables: tuple[str, ...]
    units: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.variables:
            raise InputError(f"monitoring block {self.name!r} has no variables")
        if len(set(self.variables)) != len(self.variables):
            raise InputError(f"monitoring block {self.name!r} repeats a variable")

    def __contains__(self, tag):
        return tag in self.variables


def natural_key(tag: str):
    """Sort key placing XMEAS(2) before XMEAS(10)."""
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", tag)]


def mar_values(p: Partition, g: FlowsheetGraph) -> dict[int, float]:
    """MAR of every subgraph in ``p``, keyed by subgraph id."""
    counts = {s.id: measurement_count(s, g) for s in p}
    total = sum(counts.values())
    if total == 0:
        ids = [s.id for s in p]
        raise InputError(f"partition {ids} carries no measurements; MAR undefined")
    return {sid: c / total for sid, c in counts.items()}


def mar(s: Subgraph, p: Partition, g: FlowsheetGraph) -> float:
    return mar_values(p, g)[s.id]


def _neighbors(s: Subgraph, p: Partition, g: FlowsheetGraph, undirected: bool) -> list[int]:
    found = set()
    for node in s.nodes:
        if g.is_unit(node):
            continue
        targets = [n for n in g.successors[node] if g.is_unit(n)]
        if undirected:
            targets += [n for n in g.predecessors[node] if g.is_unit(n)]
        for other in p:
            if other.id != s.id and any(u in other.nodes for u in targets):
                found.add(other.id)
    return sorted(found)


def merge_pass(
    p: Partition,
    g: FlowsheetGraph,
    delta: float,
    undirected_neighbors: bool = False,
    stranded: list | None = None,
) -> tuple[Partition, int]:
    """One sweep of the merging pool; each subgraph merges at most once.

    Pool members are visited in ascending MAR (ties: lower id) and paired
    with their lowest-MAR neighbour.  A member whose chosen partner already
    merged in this sweep waits for the next one.  Ids of pool members with
    no neighbour at all are appended to ``stranded`` when given.
    """
    mars = mar_values(p, g)
    pool = sorted((s for s in p if mars[s.id] < delta), key=lambda s: (mars[s.id], s.id))
    merged: set[int] = set()
    unions: dict[int, Subgraph] = {}
    for s in pool:
        if s.id in merged:
            continue
        nbrs = _neighbors(s, p, g, undirected_neighbors)
        if not nbrs:
            log.debug("subgraph %d has no downstream neighbour; left unmerged", s.id)
            if stranded is not None:
                stranded.append(s.id)
            continue
        best = min(nbrs, key=lambda j: (mars[j], j))
        if best in merged:
            continue
        other = p.get(best)
        new_id = min(s.id, best)
        unions[new_id] = Subgraph(new_id, s.nodes | other.nodes)
        merged.update((s.id, best))
    if not unions:
        return p, 0
    out = [unions.get(s.id, s) for s in p if s.id not in merged or s.id in unions]
    out.sort(key=lambda s: s.id)
    return Partition(tuple(out)), len(unions)


def mar_decompose(g: FlowsheetGraph, cfg: DecompositionConfig | None = None) -> Partition:
    cfg = cfg or DecompositionConfig()
    p = initial_subgraphs(g, exclusive_streams=cfg.exclusive_streams)
    while True:
        p, n = merge_pass(p, g, cfg.delta, cfg.undirected_neighbors)
        if n == 0:
            return p


def _block_names(p: Partition, g: FlowsheetGraph) -> list[str]:
    names = ["/".join(g.node_map[u].name for u in s.units(g)) for s in p]
    if len(set(names)) != len(names):
        names = ["/".join(s.units(g)) for s in p]
    return names


def blocks_from_partition(p: Partition, g: FlowsheetGraph) -> list[MonitoringBlock]:
    blocks = []
    for s, name in zip(p, _block_names(p, g)):
        tags = [t for n in s.nodes for t in g.node_variables[n]]
        if not tags:
            raise InputError(f"subgraph {s.id} ({name}) carries no variables")
        blocks.append(MonitoringBlock(name, tuple(sorted(tags, key=natural_key)), s.units(g)))
    return blocks


def control_refine(
    blocks: list[MonitoringBlock], loops: list[ControlLoop] | tuple, move_mv: bool = False
) -> list[MonitoringBlock]:
    """Place each loop's MV alongside its CV.

    By default the MV is copied into the first block holding the CV and
    keeps its original membership.  ``move_mv`` removes it from the blocks
    it came from instead.
    """
    current = [list(b.variables) for b in blocks]
    for lp in loops:
        with_cv = [i for i, vs in enumerate(current) if lp.cv in vs]
        with_mv = [i for i, vs in enumerate(current) if lp.mv in vs]
        if not with_cv:
            raise InputError(f"controlled variable {lp.cv!r} is in no block")
        if not with_mv:
            raise InputError(f"manipulated variable {lp.mv!r} is in no block")
        if set(with_cv) & set(with_mv):
            continue
        current[with_cv[0]].append(lp.mv)
        if move_mv:
            for i in with_mv:
                current[i].remove(lp.mv)
    out = []
    for b, vs in zip(blocks, current):
        if not vs:
            raise InputError(f"moving manipulated variables emptied block {b.name!r}")
        out.append(MonitoringBlock(b.name, tuple(sorted(vs, key=natural_key)), b.units))
    return out


def decompose(g: FlowsheetGraph, cfg: DecompositionConfig | None = None) -> list[MonitoringBlock]:
    """Phase one, then (if ``cfg.control_aware``) phase two."""
    cfg = cfg or DecompositionConfig()
    blocks = blocks_from_partition(mar_decompose(g, cfg), g)
    if cfg.control_aware:
        blocks = control_refine(blocks, g.loops, move_mv=cfg.move_mv)
    return blocks


def blocks_to_json(blocks) -> list[dict]:
    return [
        {"name": b.name, "units": list(b.units), "variables": list(b.variables)}
        for b in blocks
    ]


def save_blocks(blocks, path) -> None:
    Path(path).write_text(json.dumps(blocks_to_json(blocks), indent=2) + "\n", encoding="utf-8")


def load_blocks(path) -> list[MonitoringBlock]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read blocks file {str(path)!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"blocks file {str(path)!r} is not valid JSON: {exc}") from exc
    try:
        return [MonitoringBlock(d["name"], tuple(d["variables"]), tuple(d.get("units", ())))
                for d in doc]
    except (KeyError, TypeError) as exc:
        raise InputError(f"blocks file {str(path)!r} has an unexpected layout") from exc
