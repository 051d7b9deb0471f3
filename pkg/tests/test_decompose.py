import json

import pytest

from blockmon.decompose import (
    DecompositionConfig,
    MonitoringBlock,
    blocks_from_partition,
    blocks_to_json,
    control_refine,
    decompose,
    load_blocks,
    mar,
    mar_decompose,
    mar_values,
    merge_pass,
    save_blocks,
)
from blockmon.errors import InputError
from blockmon.flowsheet import ControlLoop, Partition, Subgraph, initial_subgraphs, parse_flowsheet


def flowsheet(units, streams, edges, counts):
    """Build a graph with ``counts[node]`` measured variables on each node."""
    lines = [f"unit {u} {u}" for u in units] + [f"stream {s} {s}" for s in streams]
    lines += [f"edge {a} {b}" for a, b in edges]
    for node, k in counts.items():
        lines += [f"var {node}_{i} {node} measured" for i in range(k)]
    return parse_flowsheet("\n".join(lines) + "\n")


def test_mar_direct_ratio():
    g = flowsheet(["A", "B", "C"], ["S1", "S2"], [("A", "S1"), ("S1", "B"), ("B", "S2"), ("S2", "C")],
                  {"A": 3, "B": 5, "C": 2})
    p = initial_subgraphs(g)
    assert [mar(s, p, g) for s in p] == pytest.approx([0.3, 0.5, 0.2], abs=1e-15)


def test_mar_single_subgraph_is_one():
    g = flowsheet(["A"], ["S"], [("A", "S")], {"A": 2, "S": 1})
    p = initial_subgraphs(g)
    assert mar(p.subgraphs[0], p, g) == 1.0


def test_mar_zero_total_is_config_error():
    g = flowsheet(["A"], ["S"], [("A", "S")], {})
    with pytest.raises(InputError, match="no measurements"):
        mar_values(initial_subgraphs(g), g)


class TestMergePass:
    def chain(self, up, down):
        return flowsheet(["U1", "U2"], ["S1"], [("U1", "S1"), ("S1", "U2")], {"U1": up, "U2": down})

    def test_chain_merges_into_one(self):
        # MARs 0.1 and 0.9: the pool is {S(U1)}, whose stream S1 feeds U2
        g = self.chain(1, 9)
        p, n = merge_pass(initial_subgraphs(g), g, 0.15)
        assert n == 1
        assert [set(s.nodes) for s in p] == [{"U1", "U2", "S1"}]
        assert len(mar_decompose(g, DecompositionConfig(0.15))) == 1

    def test_delta_below_all_mars_is_noop(self):
        g = self.chain(1, 9)
        p0 = initial_subgraphs(g)
        p, n = merge_pass(p0, g, 0.05)
        assert n == 0 and p == p0
        assert mar_decompose(g, DecompositionConfig(0.05)) == p0

    def test_once_per_pass(self):
        # U1 (0.05) and U2 (0.10) both feed U3; only U1 merges this pass
        g = flowsheet(["U1", "U2", "U3"], ["S1", "S2"],
                      [("U1", "S1"), ("S1", "U3"), ("U2", "S2"), ("S2", "U3")],
                      {"U1": 1, "U2": 2, "U3": 17})
        p, n = merge_pass(initial_subgraphs(g), g, 0.15)
        assert n == 1
        assert [set(s.nodes) for s in p] == [{"U1", "S1", "U3", "S2"}, {"U2", "S2"}]
        p2, n2 = merge_pass(p, g, 0.15)
        assert n2 == 1 and len(p2) == 1

    def test_downstream_only_subgraph_is_stranded(self):
        g = self.chain(9, 1)
        stranded = []
        p, n = merge_pass(initial_subgraphs(g), g, 0.15, stranded=stranded)
        assert n == 0 and stranded == [1]
        p, n = merge_pass(initial_subgraphs(g), g, 0.15, undirected_neighbors=True)
        assert n == 1 and len(p) == 1

    def test_tie_breaks_on_lowest_id(self):
        # U2 and U3 both receive from U1 with equal MAR; U2 (lower id) wins
        g = flowsheet(["U1", "U2", "U3"], ["S1", "S2"],
                      [("U1", "S1"), ("S1", "U2"), ("U1", "S2"), ("S2", "U3")],
                      {"U1": 1, "U2": 10, "U3": 10})
        p, n = merge_pass(initial_subgraphs(g), g, 0.15)
        assert n == 1
        assert p.subgraphs[0].nodes >= {"U1", "U2"}
        assert "U3" not in p.subgraphs[0].nodes


class TestTep:
    def test_initial_mars(self, tep_graph):
        p = initial_subgraphs(tep_graph)
        got = [round(v * 62) for v in mar_values(p, tep_graph).values()]
        assert got == [14, 12, 2, 5, 10, 3, 16]

    def test_four_blocks(self, tep_graph):
        p = mar_decompose(tep_graph, DecompositionConfig(0.15))
        units = [set(s.units(tep_graph)) for s in p]
        assert units == [{"MIX", "COMP"}, {"REAC"}, {"COND", "SEP", "SPL"}, {"STRIP"}]

    def test_blocks_cover_all_52(self, tep_graph):
        blocks = decompose(tep_graph, DecompositionConfig(0.15))
        assert len(blocks) == 4
        assert set().union(*(b.variables for b in blocks)) == set(tep_graph.variable_map)

    def test_shared_stream_variables_in_both_blocks(self, tep_graph):
        blocks = {b.name: b for b in decompose(tep_graph, DecompositionConfig(0.15))}
        # S6 joins the mixer and reactor; S10 joins the separator and stripper
        assert "XMEAS(23)" in blocks["Mixer/Compressor"] and "XMEAS(23)" in blocks["Reactor"]
        assert "XMV(7)" in blocks["Condenser/Separator/Splitter"] and "XMV(7)" in blocks["Stripper"]

    def test_control_aware_moves_condenser_cooling_water_to_stripper(self, tep_graph):
        plain = {b.name: b for b in decompose(tep_graph, DecompositionConfig(0.15))}
        aware = {b.name: b for b in decompose(tep_graph, DecompositionConfig(0.15, control_aware=True))}
        assert "XMV(11)" not in plain["Stripper"]
        assert "XMV(11)" in aware["Stripper"]
        assert "XMV(11)" in aware["Condenser/Separator/Splitter"]
        # the A and C feed (stream 4) joins the reactor block
        assert "XMV(4)" in aware["Reactor"]
        added = sum(len(aware[k].variables) - len(plain[k].variables) for k in plain)
        assert added == 2

    def test_small_delta_keeps_initial_partition(self, tep_graph):
        assert len(decompose(tep_graph, DecompositionConfig(0.001))) == 7


class TestControlRefine:
    blocks = [MonitoringBlock("A", ("c1", "c2", "m1")), MonitoringBlock("B", ("m2", "x"))]

    def test_colocated_pair_unchanged(self):
        assert control_refine(self.blocks, [ControlLoop("c1", "m1")]) == self.blocks

    def test_mv_copied_to_cv_block(self):
        out = control_refine(self.blocks, [ControlLoop("c2", "m2")])
        assert "m2" in out[0] and "m2" in out[1]

    def test_move_mode_removes_from_origin(self):
        out = control_refine(self.blocks, [ControlLoop("c2", "m2")], move_mv=True)
        assert "m2" in out[0] and "m2" not in out[1]

    def test_absent_tag(self):
        with pytest.raises(InputError, match="q"):
            control_refine(self.blocks, [ControlLoop("q", "m1")])
        with pytest.raises(InputError, match="z"):
            control_refine(self.blocks, [ControlLoop("c1", "z")])

    def test_move_that_empties_block_is_error(self):
        blocks = [MonitoringBlock("A", ("c",)), MonitoringBlock("B", ("m",))]
        with pytest.raises(InputError, match="emptied"):
            control_refine(blocks, [ControlLoop("c", "m")], move_mv=True)


def test_blocks_from_partition_orders_tags():
    g = parse_flowsheet("unit U1 Drum\nstream S1 s\nedge U1 S1\n"
                        "var XMEAS(10) S1 measured\nvar XMEAS(2) S1 measured\n"
                        "var XMV(1) U1 manipulated\n")
    (b,) = blocks_from_partition(initial_subgraphs(g), g)
    assert b.name == "Drum"
    assert b.variables == ("XMEAS(2)", "XMEAS(10)", "XMV(1)")


def test_blocks_from_partition_rejects_empty_subgraph():
    g = flowsheet(["U1", "U2"], ["S1"], [("U1", "S1"), ("S1", "U2")], {"U1": 2})
    p = Partition((Subgraph(0, frozenset({"U1"})), Subgraph(1, frozenset({"U2"}))))
    with pytest.raises(InputError, match="subgraph 1"):
        blocks_from_partition(p, g)


def test_delta_out_of_range():
    for d in (0.0, 1.0, -0.1):
        with pytest.raises(InputError):
            DecompositionConfig(d)


def test_blocks_json_roundtrip(tmp_path, tep_graph):
    blocks = decompose(tep_graph, DecompositionConfig(0.15, control_aware=True))
    path = tmp_path / "blocks.json"
    save_blocks(blocks, path)
    doc = json.loads(path.read_text())
    assert [sorted(d) for d in doc] == [["name", "units", "variables"]] * 4
    assert doc == blocks_to_json(blocks)
    assert load_blocks(path) == blocks
