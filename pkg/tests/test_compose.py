from __future__ import annotations

import pytest

from demo2bpmn.bpmn import NodeKind, validate_bpmn
from demo2bpmn.compose import (
    AnchorMissingError,
    InvalidModelError,
    compose,
    compose_each,
    insertion_points,
)
from demo2bpmn.ctp import CtpState, PatternLevel
from demo2bpmn.expand import ExpandOptions, expand_transaction
from demo2bpmn.model import (
    CardinalityRange,
    DemoModel,
    ResponseLink,
    TransactionKind,
    parse_model,
    serialize_model,
)

LEVELS = list(PatternLevel)


def model_with_card(card: CardinalityRange, event=CtpState.PROMISED) -> DemoModel:
    return DemoModel(
        (
            TransactionKind("TK01", "parent", "CA00", "A01"),
            TransactionKind("TK02", "child", "A01", "A02"),
        ),
        (ResponseLink("TK01", event, "TK02", card),),
    )


def splits_with_guard(graph, guard):
    hits = []
    for pool in graph.pools:
        for node in pool.nodes:
            if node.kind is not NodeKind.GATEWAY:
                continue
            guards = [f.guard for f in pool.sequence_flows if f.source == node.id]
            if guard in guards:
                hits.append((node, guards))
    return hits


class TestInsertionPoints:
    def test_poligyn_both_links_anchor_at_the_promise_task(self, poligyn_model):
        block = expand_transaction(poligyn_model.kind("TK01"), ExpandOptions(PatternLevel.BASIC))
        points = insertion_points(poligyn_model, block)
        assert [p.link.child_tk for p in points] == ["TK02", "TK03"]
        assert {p.anchor.id for p in points} == {"TK01_pm_send"}
        assert all(p.parent_tk == "TK01" for p in points)

    def test_event_absent_at_basic_level(self):
        model = model_with_card(CardinalityRange(1, 1), event=CtpState.DECLINED)
        block = expand_transaction(model.kind("TK01"), ExpandOptions(PatternLevel.BASIC))
        with pytest.raises(AnchorMissingError):
            insertion_points(model, block)

    def test_no_links(self):
        model = DemoModel((TransactionKind("TK01", "only", "CA00", "A01"),))
        block = expand_transaction(model.kind("TK01"), ExpandOptions(PatternLevel.BASIC))
        assert insertion_points(model, block) == []


class TestCompose:
    @pytest.mark.parametrize("level", LEVELS)
    def test_pool_count_is_one_plus_transaction_kinds(self, poligyn_model, level):
        graph = compose(poligyn_model, ExpandOptions(level))
        assert len(graph.pools) == 1 + len(poligyn_model.transaction_kinds)

    @pytest.mark.parametrize("level", LEVELS)
    def test_composed_graph_is_valid(self, poligyn_model, level):
        graph = compose(poligyn_model, ExpandOptions(level))
        assert validate_bpmn(graph) == []

    def test_poligyn_basic_message_flow_count(self, poligyn_model):
        graph = compose(poligyn_model, ExpandOptions(PatternLevel.BASIC))
        assert len(graph.message_flows) == 12

    def test_single_transaction_compose_equals_expand(self):
        model = DemoModel((TransactionKind("TK01", "only", "CA00", "A01"),))
        opts = ExpandOptions(PatternLevel.STANDARD)
        assert compose(model, opts) == expand_transaction(model.kind("TK01"), opts)

    def test_compose_of_reserialized_model_is_identical(self, poligyn_model):
        reparsed = parse_model(serialize_model(poligyn_model)).model
        opts = ExpandOptions(PatternLevel.BASIC)
        assert compose(poligyn_model, opts) == compose(reparsed, opts)

    def test_optional_child_is_guarded_by_one_split_with_a_skip_edge(self, poligyn_model):
        graph = compose(poligyn_model, ExpandOptions(PatternLevel.BASIC))
        skips = splits_with_guard(graph, "skip")
        assert len(skips) == 1
        node, guards = skips[0]
        assert node.id == "TK02_opt_split"
        assert sorted(guards) == ["init TK02", "skip"]
        pool = graph.pool_of(node.id)
        init_edge = next(f for f in pool.sequence_flows if f.guard == "init TK02")
        assert init_edge.target == "TK02_rq_send"

    def test_repeatable_child_sits_in_one_loop(self, poligyn_model):
        graph = compose(poligyn_model, ExpandOptions(PatternLevel.BASIC))
        loops = splits_with_guard(graph, "another")
        assert len(loops) == 1
        node, _guards = loops[0]
        assert node.id == "TK03_loop_gate"
        pool = graph.pool_of(node.id)
        back = next(f for f in pool.sequence_flows if f.guard == "another")
        assert back.target == "TK03_loop_merge"

    def test_children_chain_in_link_order(self, poligyn_model):
        graph = compose(poligyn_model, ExpandOptions(PatternLevel.BASIC))
        pool = graph.pool_of("TK01_pm_send")
        flows = {f.source: f.target for f in pool.sequence_flows if f.guard is None}
        assert flows["TK01_pm_send"] == "TK02_opt_split"
        join_out = flows["TK02_opt_join"]
        assert join_out == "TK03_loop_merge"

    def test_standard_child_fragment_keeps_the_parent_alive(self, poligyn_model):
        # The child's quit/stop endings must rejoin the parent flow: the
        # initiator fragment's terminal paths converge on one exit merge.
        graph = compose(poligyn_model, ExpandOptions(PatternLevel.STANDARD))
        pool = graph.pool_of("TK02_exit_merge")
        incoming = [f.source for f in pool.sequence_flows if f.target == "TK02_exit_merge"]
        assert sorted(incoming) == ["TK02_ac_send", "TK02_qt_send", "TK02_st_catch"]
        assert validate_bpmn(graph) == []


class TestCardinalityStructures:
    def test_one_to_one_is_a_bare_splice(self):
        graph = compose(model_with_card(CardinalityRange(1, 1)), ExpandOptions(PatternLevel.BASIC))
        assert splits_with_guard(graph, "skip") == []
        assert splits_with_guard(graph, "another") == []
        pool = graph.pool_of("TK01_pm_send")
        flows = {f.source: f.target for f in pool.sequence_flows}
        assert flows["TK01_pm_send"] == "TK02_rq_send"
        assert flows["TK02_ac_send"] == "TK01_da_send"

    def test_zero_to_many_gets_skip_and_loop(self):
        graph = compose(model_with_card(CardinalityRange(0, None)), ExpandOptions(PatternLevel.BASIC))
        assert len(splits_with_guard(graph, "skip")) == 1
        assert len(splits_with_guard(graph, "another")) == 1

    def test_numeric_bounds_become_guard_annotations(self):
        graph = compose(model_with_card(CardinalityRange(2, 4)), ExpandOptions(PatternLevel.BASIC))
        pool = graph.pool_of("TK01_pm_send")
        guards = {f.guard for f in pool.sequence_flows if f.guard}
        assert "another [max=4]" in guards
        assert "done [min=2]" in guards


class TestErrors:
    def test_invalid_model_is_rejected(self):
        model = DemoModel(
            (
                TransactionKind("TK01", "a", "CA00", "A01"),
                TransactionKind("TK02", "b", "A01", "A02"),
            ),
            (
                ResponseLink("TK01", CtpState.PROMISED, "TK02", CardinalityRange(1, 1)),
                ResponseLink("TK02", CtpState.PROMISED, "TK01", CardinalityRange(1, 1)),
            ),
        )
        with pytest.raises(InvalidModelError):
            compose(model, ExpandOptions(PatternLevel.BASIC))

    def test_anchor_missing_propagates(self):
        model = model_with_card(CardinalityRange(1, 1), event=CtpState.REJECTED)
        with pytest.raises(AnchorMissingError):
            compose(model, ExpandOptions(PatternLevel.BASIC))

    def test_initiator_role_must_match_the_anchor_party(self):
        model = DemoModel(
            (
                TransactionKind("TK01", "a", "CA00", "A01"),
                TransactionKind("TK02", "b", "B99", "A02"),
            ),
            (ResponseLink("TK01", CtpState.PROMISED, "TK02", CardinalityRange(1, 1)),),
        )
        with pytest.raises(InvalidModelError, match="initiat"):
            compose(model, ExpandOptions(PatternLevel.BASIC))

    def test_multi_root_needs_compose_each(self):
        model = DemoModel(
            (
                TransactionKind("TK01", "a", "CA00", "A01"),
                TransactionKind("TK02", "b", "CA00", "A02"),
            ),
        )
        with pytest.raises(InvalidModelError):
            compose(model, ExpandOptions(PatternLevel.BASIC))
        compiled = compose_each(model, ExpandOptions(PatternLevel.BASIC))
        assert [root for root, _g in compiled] == ["TK01", "TK02"]
        assert all(validate_bpmn(g) == [] for _r, g in compiled)


class TestRequestedEventAnchor:
    def test_child_hangs_off_the_initiator_when_the_event_is_requested(self):
        # The request event is caused by the parent's initiator, so that
        # party hosts the child fragment.
        model = DemoModel(
            (
                TransactionKind("TK01", "a", "CA00", "A01"),
                TransactionKind("TK02", "b", "CA00", "A02"),
            ),
            (ResponseLink("TK01", CtpState.REQUESTED, "TK02", CardinalityRange(1, 1)),),
        )
        graph = compose(model, ExpandOptions(PatternLevel.BASIC))
        assert graph.pool_of("TK02_rq_send").id == "pool_CA00"
        assert validate_bpmn(graph) == []
