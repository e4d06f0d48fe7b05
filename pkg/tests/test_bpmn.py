from __future__ import annotations

import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demo2bpmn.bpmn import (
    BpmnGraph,
    InvalidGraphError,
    Message,
    MessageFlow,
    Pool,
    SequenceFlow,
    abstract_task,
    catch_event,
    end_event,
    event_gateway,
    send_task,
    start_event,
    to_dot,
    validate_bpmn,
)
from demo2bpmn.bpmn_xml import (
    DanglingReferenceError,
    UnsupportedElementError,
    XmlSyntaxError,
    from_xml,
    to_xml,
)
from helpers import random_graph


def two_pool_graph():
    """Minimal valid collaboration: left sends one message to right."""
    message = Message("m1", "ping")
    left = Pool(id="pool_left", name="left")
    left.nodes = [start_event("l_start"), send_task("l_send", "m1", "ping"), end_event("l_end")]
    left.sequence_flows = [
        SequenceFlow("l_f1", "l_start", "l_send"),
        SequenceFlow("l_f2", "l_send", "l_end"),
    ]
    right = Pool(id="pool_right", name="right")
    right.nodes = [
        start_event("r_start", message="m1"),
        abstract_task("r_work", "work"),
        end_event("r_end"),
    ]
    right.sequence_flows = [
        SequenceFlow("r_f1", "r_start", "r_work"),
        SequenceFlow("r_f2", "r_work", "r_end"),
    ]
    return BpmnGraph(
        pools=[left, right],
        messages=[message],
        message_flows=[MessageFlow("mf1", "l_send", "r_start", "m1")],
    )


class TestValidator:
    def test_minimal_graph_is_valid(self):
        assert validate_bpmn(two_pool_graph()) == []

    def test_generated_blocks_are_valid(self, basic_block, standard_block, complete_block):
        for graph in (basic_block, standard_block, complete_block):
            assert validate_bpmn(graph) == []

    def test_duplicate_id(self):
        graph = two_pool_graph()
        graph.pools[0].nodes.append(abstract_task("l_send"))
        assert [d.rule for d in validate_bpmn(graph)] == ["ID_UNIQ"]

    def test_sequence_flow_must_stay_in_its_pool(self):
        graph = two_pool_graph()
        graph.pools[0].sequence_flows.append(SequenceFlow("bad", "l_send", "r_work"))
        assert "SEQ_SCOPE" in [d.rule for d in validate_bpmn(graph)]

    def test_intra_pool_message_flow(self):
        graph = two_pool_graph()
        graph.message_flows.append(MessageFlow("bad", "l_start", "l_send", "m1"))
        assert [d.rule for d in validate_bpmn(graph)] == ["MSG_CROSS"]

    def test_undeclared_message(self):
        graph = two_pool_graph()
        graph.message_flows[0].message = "ghost"
        assert "MSG_CROSS" in [d.rule for d in validate_bpmn(graph)]

    def test_start_event_with_incoming_flow(self):
        graph = two_pool_graph()
        graph.pools[0].sequence_flows.append(SequenceFlow("back", "l_send", "l_start"))
        assert [d.rule for d in validate_bpmn(graph)] == ["START_IN"]

    def test_end_event_with_outgoing_flow(self):
        graph = two_pool_graph()
        graph.pools[0].sequence_flows.append(SequenceFlow("on", "l_end", "l_send"))
        assert [d.rule for d in validate_bpmn(graph)] == ["END_OUT"]

    def test_unreachable_node(self):
        graph = two_pool_graph()
        graph.pools[0].nodes.append(abstract_task("l_orphan"))
        rules = [d.rule for d in validate_bpmn(graph)]
        assert "REACH" in rules and "COREACH" in rules

    def test_node_without_path_to_an_end(self):
        graph = two_pool_graph()
        graph.pools[0].nodes.append(abstract_task("l_sink"))
        graph.pools[0].sequence_flows.append(SequenceFlow("into", "l_send", "l_sink"))
        assert [d.rule for d in validate_bpmn(graph)] == ["COREACH"]

    def test_event_gateway_must_feed_catching_elements(self):
        graph = two_pool_graph()
        pool = graph.pools[0]
        pool.nodes.extend([event_gateway("l_ebg"), catch_event("l_catch", "m1")])
        pool.sequence_flows.extend(
            [
                SequenceFlow("e1", "l_start", "l_ebg"),
                SequenceFlow("e2", "l_ebg", "l_catch"),
                SequenceFlow("e3", "l_ebg", "l_send"),
                SequenceFlow("e4", "l_catch", "l_end"),
            ]
        )
        assert "EBG_TARGETS" in [d.rule for d in validate_bpmn(graph)]


DOT_EDGE = re.compile(r'^\s+"[^"]+" -> "[^"]+"( \[[^\]]*\])?;$')
DOT_NODE = re.compile(r'^\s+"[^"]+" \[[^\]]*\];$')


class TestDot:
    def test_empty_graph(self):
        text = to_dot(BpmnGraph())
        assert text.startswith("digraph")
        assert text.rstrip().endswith("}")

    def test_basic_block_counts(self, basic_block):
        text = to_dot(basic_block)
        assert text.count("subgraph") == 2
        solid = [l for l in text.splitlines() if "->" in l and "dashed" not in l]
        dashed = [l for l in text.splitlines() if "dashed" in l]
        assert len(solid) == 9
        assert len(dashed) == 4

    def test_lines_follow_the_dot_grammar(self, standard_block):
        lines = to_dot(standard_block).splitlines()
        assert lines[0] == "digraph collaboration {"
        assert lines[-1] == "}"
        body = lines[1:-1]
        for line in body:
            stripped = line.strip()
            if stripped in ("}",) or stripped.startswith(("subgraph", "label=", "rankdir")):
                continue
            assert DOT_EDGE.match(line) or DOT_NODE.match(line), line


class TestXml:
    def test_empty_graph_has_no_collaboration(self):
        text = to_xml(BpmnGraph())
        assert "<definitions" in text
        assert "collaboration" not in text

    def test_basic_block_counts(self, basic_block):
        text = to_xml(basic_block)
        assert text.count("<participant") == 2
        assert text.count("<messageFlow") == 4

    def test_serializer_is_byte_stable(self, standard_block):
        assert to_xml(standard_block) == to_xml(standard_block)

    def test_round_trip_on_generated_blocks(self, basic_block, standard_block, complete_block):
        for graph in (basic_block, standard_block, complete_block):
            assert from_xml(to_xml(graph)) == graph

    def test_layout_section_is_optional_and_skipped_on_parse(self, basic_block):
        plain = to_xml(basic_block)
        with_layout = to_xml(basic_block, include_layout=True)
        assert "BPMNDiagram" not in plain
        assert "BPMNDiagram" in with_layout
        assert from_xml(with_layout) == basic_block

    def test_invalid_graph_is_rejected(self):
        graph = two_pool_graph()
        graph.message_flows.append(MessageFlow("bad", "l_start", "l_send", "m1"))
        with pytest.raises(InvalidGraphError):
            to_xml(graph)

    def test_truncated_document(self, basic_block):
        text = to_xml(basic_block)
        with pytest.raises(XmlSyntaxError):
            from_xml(text[: len(text) // 2])

    def test_unsupported_element_is_named(self):
        doc = to_xml(two_pool_graph()).replace(
            '<task id="r_work" name="work"/>', '<userTask id="r_work" name="work"/>'
        )
        with pytest.raises(UnsupportedElementError) as err:
            from_xml(doc)
        assert "userTask" in str(err.value)

    def test_dangling_reference(self):
        doc = to_xml(two_pool_graph()).replace('targetRef="r_start"', 'targetRef="ghost"')
        with pytest.raises(DanglingReferenceError):
            from_xml(doc)

    def test_unknown_attributes_are_tolerated(self):
        doc = to_xml(two_pool_graph()).replace(
            "<task id=", '<task custom:weight="3" id='
        ).replace(
            "<definitions", '<definitions xmlns:custom="urn:x"', 1
        )
        assert from_xml(doc) == two_pool_graph()

    @given(st.integers(min_value=0, max_value=10 ** 9))
    @settings(max_examples=80, deadline=None)
    def test_random_graph_round_trip(self, seed):
        graph = random_graph(random.Random(seed))
        assert validate_bpmn(graph) == []
        assert from_xml(to_xml(graph)) == graph
