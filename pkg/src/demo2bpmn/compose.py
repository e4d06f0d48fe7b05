"""Composition of building blocks along the transaction tree.

Each response link splices the child's initiator-side fragment into the pool
of the party that performs the parent event's act (for an event like
``pm`` that is the parent's executor), directly after that act's send task.
The child's executor pool joins the collaboration as a separate pool, so a
single tree yields one pool per transaction kind plus the root initiator.

Cardinalities shape the splice: ``0..1`` wraps the fragment in an exclusive
split with a skip edge, a repeatable upper bound wraps it in a loop whose
back edge is guarded ``another``, and numeric bounds beyond those are
carried as guard annotations for the simulator to enforce.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bpmn import (
    BpmnGraph,
    FlowNode,
    NodeKind,
    Pool,
    SequenceFlow,
    TaskVariant,
    exclusive_gateway,
)
from .ctp import ActKind, CtpState, Party, performer_of
from .diagnostics import Diagnostic
from .expand import ExpandOptions, expand_transaction
from .model import DemoModel, ResponseLink, TransactionKind, roots, validate_model

__all__ = [
    "AnchorMissingError",
    "InsertionPoint",
    "InvalidModelError",
    "compose",
    "compose_each",
    "insertion_points",
]


class InvalidModelError(Exception):
    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class AnchorMissingError(Exception):
    """The parent event's act has no send task at the chosen pattern level."""


# The act whose send task realizes each linkable parent event.
_EVENT_ACT: dict[CtpState, ActKind] = {
    CtpState.REQUESTED: ActKind.REQUEST,
    CtpState.PROMISED: ActKind.PROMISE,
    CtpState.DECLARED: ActKind.DECLARE,
    CtpState.ACCEPTED: ActKind.ACCEPT,
    CtpState.DECLINED: ActKind.DECLINE,
    CtpState.REJECTED: ActKind.REJECT,
}


@dataclass(frozen=True)
class InsertionPoint:
    parent_tk: str
    anchor: FlowNode
    link: ResponseLink


def _block_transaction_ids(graph: BpmnGraph) -> set[str]:
    ids = set()
    for message in graph.messages:
        if "(" in message.name and message.name.endswith(")"):
            ids.add(message.name.split("(", 1)[1][:-1])
    return ids


def _find_anchor(graph: BpmnGraph, tk_id: str, event: CtpState) -> FlowNode:
    act = _EVENT_ACT[event]
    suffix = f"{tk_id}_{act.code.replace('-', '')}_send"
    for pool in graph.pools:
        for node in pool.nodes:
            if node.id.endswith(suffix) and node.task_variant is TaskVariant.SEND:
                return node
    raise AnchorMissingError(
        f"no send task for event {event.value} of {tk_id}; "
        f"act {act.code} is absent at this pattern level"
    )


def insertion_points(model: DemoModel, parent_block: BpmnGraph) -> list[InsertionPoint]:
    """One insertion point per response link of the block's transaction kind."""
    ids = _block_transaction_ids(parent_block)
    if len(ids) != 1:
        raise ValueError(f"expected a single-transaction block, found acts of {sorted(ids)}")
    parent_id = ids.pop()
    points = []
    for link in model.links_of(parent_id):
        anchor = _find_anchor(parent_block, parent_id, link.parent_event)
        points.append(InsertionPoint(parent_id, anchor, link))
    return points


def compose(model: DemoModel, opts: ExpandOptions) -> BpmnGraph:
    """Compose the whole model (which must have exactly one root)."""
    diagnostics = validate_model(model)
    if diagnostics:
        raise InvalidModelError("model is invalid", diagnostics)
    root_kinds = roots(model)
    if len(root_kinds) != 1:
        raise InvalidModelError(
            f"expected exactly one root transaction kind, found {len(root_kinds)}"
        )
    return _compose_subtree(model, root_kinds[0], opts)


def compose_each(model: DemoModel, opts: ExpandOptions) -> list[tuple[str, BpmnGraph]]:
    """Compose every root of a multi-root model separately."""
    diagnostics = validate_model(model)
    if diagnostics:
        raise InvalidModelError("model is invalid", diagnostics)
    return [(tk.id, _compose_subtree(model, tk, opts)) for tk in roots(model)]


def _compose_subtree(model: DemoModel, tk: TransactionKind, opts: ExpandOptions) -> BpmnGraph:
    graph = expand_transaction(tk, opts)
    cursor: FlowNode | None = None
    for link in model.links_of(tk.id):
        child = model.kind(link.child_tk)
        child_graph = _compose_subtree(model, child, opts)
        cursor = _splice(graph, tk, link, child, child_graph, cursor, opts)
    return graph


def _splice(
    graph: BpmnGraph,
    parent: TransactionKind,
    link: ResponseLink,
    child: TransactionKind,
    child_graph: BpmnGraph,
    cursor: FlowNode | None,
    opts: ExpandOptions,
) -> FlowNode:
    """Inline the child's initiator fragment after the link's anchor.

    Returns the new fragment exit, which becomes the cursor for the next
    sibling link at the same anchor.
    """
    anchor = _find_anchor(graph, parent.id, link.parent_event)
    host_pool = graph.pool_of(anchor.id)
    initiating_party = performer_of(_EVENT_ACT[link.parent_event])
    expected_role = (
        parent.initiator_role if initiating_party is Party.INITIATOR else parent.executor_role
    )
    if child.initiator_role != expected_role:
        raise InvalidModelError(
            f"{child.id} is initiated by {expected_role} (the {parent.id} "
            f"{initiating_party.value}) but declares initiator {child.initiator_role}"
        )

    child_init_pool = None
    other_pools = []
    for pool in child_graph.pools:
        if pool.id == f"pool_{child.initiator_role}":
            child_init_pool = pool
        else:
            other_pools.append(pool)
    if child_init_pool is None:  # pragma: no cover - expand always creates it
        raise InvalidModelError(f"no initiator pool for {child.id}")

    entry, exit_node, nodes, flows = _strip_fragment(child_init_pool, child.id)
    entry, exit_node = _wrap_fragment(child.id, link, entry, exit_node, nodes, flows)

    splice_from = cursor or anchor
    old_flow = next(f for f in host_pool.sequence_flows if f.source == splice_from.id)
    host_pool.nodes.extend(nodes)
    host_pool.sequence_flows.extend(flows)
    host_pool.sequence_flows.append(SequenceFlow(f"{child.id}_sf_in", splice_from.id, entry.id))
    old_flow.source = exit_node.id

    graph.pools.extend(other_pools)
    graph.messages.extend(child_graph.messages)
    graph.message_flows.extend(child_graph.message_flows)
    return exit_node


def _strip_fragment(
    pool: Pool, child_id: str
) -> tuple[FlowNode, FlowNode, list[FlowNode], list[SequenceFlow]]:
    """Drop the fragment's start and end events; terminal paths converge on
    a single exit so the parent continues whatever way the child concluded."""
    start_ids = {n.id for n in pool.nodes if n.kind is NodeKind.START_EVENT}
    end_ids = {n.id for n in pool.nodes if n.kind is NodeKind.END_EVENT}
    nodes = [n for n in pool.nodes if n.id not in start_ids | end_ids]
    flows = [f for f in pool.sequence_flows if f.source not in start_ids and f.target not in end_ids]

    entry_targets = [f.target for f in pool.sequence_flows if f.source in start_ids]
    exit_sources = [f.source for f in pool.sequence_flows if f.target in end_ids]
    by_id = {n.id: n for n in nodes}
    entry = by_id[entry_targets[0]]

    if len(exit_sources) == 1:
        return entry, by_id[exit_sources[0]], nodes, flows
    exit_merge = exclusive_gateway(f"{child_id}_exit_merge")
    nodes.append(exit_merge)
    for i, source in enumerate(exit_sources, start=1):
        flows.append(SequenceFlow(f"{child_id}_sf_exit{i}", source, exit_merge.id))
    return entry, exit_merge, nodes, flows


def _wrap_fragment(
    child_id: str,
    link: ResponseLink,
    entry: FlowNode,
    exit_node: FlowNode,
    nodes: list[FlowNode],
    flows: list[SequenceFlow],
) -> tuple[FlowNode, FlowNode]:
    """Apply the link's cardinality around the fragment."""
    card = link.cardinality

    if card.repeatable:
        loop_merge = exclusive_gateway(f"{child_id}_loop_merge")
        loop_gate = exclusive_gateway(f"{child_id}_loop_gate", f"more {child_id}?")
        nodes.extend((loop_merge, loop_gate))
        another = "another" if card.high is None else f"another [max={card.high}]"
        done = "done" if card.low <= 1 else f"done [min={card.low}]"
        flows.append(SequenceFlow(f"{child_id}_sf_loop_in", loop_merge.id, entry.id))
        flows.append(SequenceFlow(f"{child_id}_sf_loop_ret", exit_node.id, loop_gate.id))
        flows.append(SequenceFlow(f"{child_id}_sf_loop_back", loop_gate.id, loop_merge.id, another))
        entry, exit_node = loop_merge, loop_gate
        exit_guard = done
    else:
        exit_guard = None

    if card.optional:
        split = exclusive_gateway(f"{child_id}_opt_split", f"initiate {child_id}?")
        join = exclusive_gateway(f"{child_id}_opt_join")
        nodes.extend((split, join))
        flows.append(SequenceFlow(f"{child_id}_sf_opt_init", split.id, entry.id, f"init {child_id}"))
        flows.append(SequenceFlow(f"{child_id}_sf_opt_skip", split.id, join.id, "skip"))
        flows.append(SequenceFlow(f"{child_id}_sf_opt_done", exit_node.id, join.id, exit_guard))
        return split, join

    if exit_guard:
        # Keep the guarded exit edge inside the wrapper so the loop gateway
        # has an explicit "done" branch no matter what follows the splice.
        tail = exclusive_gateway(f"{child_id}_loop_exit")
        nodes.append(tail)
        flows.append(SequenceFlow(f"{child_id}_sf_loop_exit", exit_node.id, tail.id, exit_guard))
        return entry, tail
    return entry, exit_node
