"""In-memory BPMN collaboration graphs and their well-formedness rules.

Only a small element subset is modeled: start / intermediate catch / end
events, abstract / send / receive tasks, exclusive / event-based / parallel
gateways, sequence flows, message flows, pools, lanes, and messages. Graphs
are treated as immutable once built; the generators construct them in one
pass and never mutate shared instances afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, unique

from .diagnostics import Diagnostic

__all__ = [
    "BpmnGraph",
    "EndResult",
    "FlowNode",
    "GatewayVariant",
    "InvalidGraphError",
    "Lane",
    "Message",
    "MessageFlow",
    "NodeKind",
    "Pool",
    "SequenceFlow",
    "StartTrigger",
    "TaskVariant",
    "abstract_task",
    "catch_event",
    "end_event",
    "event_gateway",
    "exclusive_gateway",
    "parallel_gateway",
    "receive_task",
    "send_task",
    "start_event",
    "to_dot",
    "validate_bpmn",
]


@unique
class NodeKind(Enum):
    START_EVENT = "start_event"
    INTERMEDIATE_CATCH_EVENT = "intermediate_catch_event"
    END_EVENT = "end_event"
    TASK = "task"
    GATEWAY = "gateway"


@unique
class StartTrigger(Enum):
    NONE = "none"
    MESSAGE = "message"


@unique
class EndResult(Enum):
    NONE = "none"
    TERMINATE = "terminate"


@unique
class TaskVariant(Enum):
    ABSTRACT = "abstract"
    SEND = "send"
    RECEIVE = "receive"


@unique
class GatewayVariant(Enum):
    EXCLUSIVE = "exclusive"
    EVENT_BASED = "event_based"
    PARALLEL = "parallel"


@dataclass
class FlowNode:
    id: str
    kind: NodeKind
    name: str = ""
    trigger: StartTrigger = StartTrigger.NONE
    result: EndResult = EndResult.NONE
    task_variant: TaskVariant | None = None
    gateway_variant: GatewayVariant | None = None
    message: str | None = None  # message id for message starts, catches, send/receive

    @property
    def is_event(self) -> bool:
        return self.kind in (
            NodeKind.START_EVENT,
            NodeKind.INTERMEDIATE_CATCH_EVENT,
            NodeKind.END_EVENT,
        )


def start_event(node_id: str, name: str = "", message: str | None = None) -> FlowNode:
    trigger = StartTrigger.MESSAGE if message else StartTrigger.NONE
    return FlowNode(node_id, NodeKind.START_EVENT, name, trigger=trigger, message=message)


def catch_event(node_id: str, message: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.INTERMEDIATE_CATCH_EVENT, name, message=message)


def end_event(node_id: str, name: str = "", terminate: bool = False) -> FlowNode:
    result = EndResult.TERMINATE if terminate else EndResult.NONE
    return FlowNode(node_id, NodeKind.END_EVENT, name, result=result)


def abstract_task(node_id: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.ABSTRACT)


def send_task(node_id: str, message: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.SEND, message=message)


def receive_task(node_id: str, message: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.RECEIVE, message=message)


def exclusive_gateway(node_id: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.GATEWAY, name, gateway_variant=GatewayVariant.EXCLUSIVE)


def event_gateway(node_id: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.GATEWAY, name, gateway_variant=GatewayVariant.EVENT_BASED)


def parallel_gateway(node_id: str, name: str = "") -> FlowNode:
    return FlowNode(node_id, NodeKind.GATEWAY, name, gateway_variant=GatewayVariant.PARALLEL)


@dataclass
class SequenceFlow:
    id: str
    source: str
    target: str
    guard: str | None = None


@dataclass
class MessageFlow:
    id: str
    source: str
    target: str
    message: str


@dataclass
class Message:
    id: str
    name: str


@dataclass
class Lane:
    id: str
    name: str
    node_ids: tuple[str, ...] = ()


@dataclass
class Pool:
    id: str
    name: str
    lanes: list[Lane] = field(default_factory=list)
    nodes: list[FlowNode] = field(default_factory=list)
    sequence_flows: list[SequenceFlow] = field(default_factory=list)

    def node(self, node_id: str) -> FlowNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(f"no node {node_id!r} in pool {self.id}")


@dataclass
class BpmnGraph:
    pools: list[Pool] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    message_flows: list[MessageFlow] = field(default_factory=list)

    def node_index(self) -> dict[str, tuple[Pool, FlowNode]]:
        index: dict[str, tuple[Pool, FlowNode]] = {}
        for pool in self.pools:
            for node in pool.nodes:
                index[node.id] = (pool, node)
        return index

    def node(self, node_id: str) -> FlowNode:
        for pool in self.pools:
            for node in pool.nodes:
                if node.id == node_id:
                    return node
        raise KeyError(f"no node {node_id!r}")

    def pool_of(self, node_id: str) -> Pool:
        for pool in self.pools:
            for node in pool.nodes:
                if node.id == node_id:
                    return pool
        raise KeyError(f"no node {node_id!r}")

    def message(self, message_id: str) -> Message:
        for message in self.messages:
            if message.id == message_id:
                return message
        raise KeyError(f"no message {message_id!r}")


class InvalidGraphError(Exception):
    """Raised when an operation requires a graph that fails validation."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def validate_bpmn(graph: BpmnGraph) -> list[Diagnostic]:
    """Well-formedness check; empty result means the graph is valid.

    Rule ids: ID_UNIQ (duplicate element ids), SEQ_SCOPE (sequence flow not
    connecting two nodes of one pool), MSG_CROSS (message flow not crossing
    pools or naming an undeclared message), START_IN, END_OUT, REACH (node
    unreachable from every start event of its pool), COREACH (node with no
    path to any end event), EBG_TARGETS (event-based gateway feeding
    something other than a catch event or receive task).
    """
    diagnostics: list[Diagnostic] = []

    seen_ids: set[str] = set()
    all_ids = [m.id for m in graph.messages]
    all_ids.extend(f.id for f in graph.message_flows)
    for pool in graph.pools:
        all_ids.append(pool.id)
        all_ids.extend(l.id for l in pool.lanes)
        all_ids.extend(n.id for n in pool.nodes)
        all_ids.extend(f.id for f in pool.sequence_flows)
    for element_id in all_ids:
        if element_id in seen_ids:
            diagnostics.append(Diagnostic("ID_UNIQ", f"duplicate id {element_id}", element_id))
        seen_ids.add(element_id)

    index = graph.node_index()
    message_ids = {m.id for m in graph.messages}

    for pool in graph.pools:
        node_ids = {n.id for n in pool.nodes}
        for flow in pool.sequence_flows:
            for end in (flow.source, flow.target):
                if end not in node_ids:
                    diagnostics.append(
                        Diagnostic("SEQ_SCOPE", f"sequence flow endpoint {end} is not a node of pool {pool.id}", flow.id)
                    )

    for flow in graph.message_flows:
        src = index.get(flow.source)
        dst = index.get(flow.target)
        if src is None or dst is None:
            missing = flow.source if src is None else flow.target
            diagnostics.append(
                Diagnostic("MSG_CROSS", f"message flow endpoint {missing} does not exist", flow.id)
            )
            continue
        if src[0].id == dst[0].id:
            diagnostics.append(
                Diagnostic("MSG_CROSS", f"message flow stays inside pool {src[0].id}", flow.id)
            )
        if flow.message not in message_ids:
            diagnostics.append(
                Diagnostic("MSG_CROSS", f"message flow names undeclared message {flow.message}", flow.id)
            )

    for pool in graph.pools:
        incoming: dict[str, list[SequenceFlow]] = {n.id: [] for n in pool.nodes}
        outgoing: dict[str, list[SequenceFlow]] = {n.id: [] for n in pool.nodes}
        for flow in pool.sequence_flows:
            if flow.source in outgoing and flow.target in incoming:
                outgoing[flow.source].append(flow)
                incoming[flow.target].append(flow)

        for node in pool.nodes:
            if node.kind is NodeKind.START_EVENT and incoming[node.id]:
                diagnostics.append(
                    Diagnostic("START_IN", f"start event {node.id} has an incoming sequence flow", node.id)
                )
            if node.kind is NodeKind.END_EVENT and outgoing[node.id]:
                diagnostics.append(
                    Diagnostic("END_OUT", f"end event {node.id} has an outgoing sequence flow", node.id)
                )
            if (
                node.kind is NodeKind.GATEWAY
                and node.gateway_variant is GatewayVariant.EVENT_BASED
            ):
                for flow in outgoing[node.id]:
                    target = pool.node(flow.target)
                    catchlike = target.kind is NodeKind.INTERMEDIATE_CATCH_EVENT or (
                        target.kind is NodeKind.TASK
                        and target.task_variant is TaskVariant.RECEIVE
                    )
                    if not catchlike:
                        diagnostics.append(
                            Diagnostic("EBG_TARGETS", f"event-based gateway {node.id} feeds {target.id}", node.id)
                        )

        starts = [n.id for n in pool.nodes if n.kind is NodeKind.START_EVENT]
        reachable = _closure(starts, outgoing)
        for node in pool.nodes:
            if node.kind is not NodeKind.START_EVENT and node.id not in reachable:
                diagnostics.append(
                    Diagnostic("REACH", f"{node.id} is unreachable from every start event of pool {pool.id}", node.id)
                )
        ends = [n.id for n in pool.nodes if n.kind is NodeKind.END_EVENT]
        coreachable = _closure(ends, incoming)
        for node in pool.nodes:
            if node.id not in coreachable:
                diagnostics.append(
                    Diagnostic("COREACH", f"{node.id} has no path to an end event", node.id)
                )

    return diagnostics


def _closure(seeds: list[str], edges: dict[str, list[SequenceFlow]]) -> set[str]:
    seen = set(seeds)
    frontier = list(seeds)
    while frontier:
        node_id = frontier.pop()
        for flow in edges.get(node_id, []):
            other = flow.target if flow.source == node_id else flow.source
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    return seen


_DOT_SHAPES = {
    NodeKind.START_EVENT: "circle",
    NodeKind.INTERMEDIATE_CATCH_EVENT: "doublecircle",
    NodeKind.END_EVENT: "doublecircle",
    NodeKind.TASK: "box",
    NodeKind.GATEWAY: "diamond",
}


def to_dot(graph: BpmnGraph) -> str:
    """Debug rendering: one cluster per pool, dashed edges for message flows."""
    lines = ["digraph collaboration {", "  rankdir=LR;"]
    message_names = {m.id: m.name for m in graph.messages}
    for pool in graph.pools:
        lines.append(f'  subgraph "cluster_{pool.id}" {{')
        lines.append(f'    label="{pool.name}";')
        for node in pool.nodes:
            label = node.name or node.id
            shape = _DOT_SHAPES[node.kind]
            style = ' style=bold' if node.kind is NodeKind.END_EVENT else ""
            lines.append(f'    "{node.id}" [shape={shape} label="{label}"{style}];')
        lines.append("  }")
    for pool in graph.pools:
        for flow in pool.sequence_flows:
            attr = f' [label="{flow.guard}"]' if flow.guard else ""
            lines.append(f'  "{flow.source}" -> "{flow.target}"{attr};')
    for flow in graph.message_flows:
        name = message_names.get(flow.message, flow.message)
        lines.append(f'  "{flow.source}" -> "{flow.target}" [style=dashed label="{name}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
