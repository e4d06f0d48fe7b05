"""BPMN 2.0 XML interchange for the supported element subset.

``to_xml`` emits a byte-stable document (same graph, same bytes); element
order follows declaration order. ``from_xml`` parses what ``to_xml``
produces and is tolerant of unknown attributes; unknown elements raise
``UnsupportedElementError``. Diagram interchange is emitted only on request
(a naive layered layout) and is skipped on parse.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

from .bpmn import (
    BpmnGraph,
    EndResult,
    FlowNode,
    GatewayVariant,
    InvalidGraphError,
    Lane,
    Message,
    MessageFlow,
    NodeKind,
    Pool,
    SequenceFlow,
    StartTrigger,
    TaskVariant,
    validate_bpmn,
)

__all__ = [
    "BPMN_NS",
    "DanglingReferenceError",
    "UnsupportedElementError",
    "XmlSyntaxError",
    "from_xml",
    "to_xml",
]

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
BPMNDI_NS = "http://www.omg.org/spec/BPMN/20100524/DI"
DC_NS = "http://www.omg.org/spec/DD/20100524/DC"
DI_NS = "http://www.omg.org/spec/DD/20100524/DI"
TARGET_NS = "urn:demo2bpmn"


class XmlSyntaxError(Exception):
    pass


class UnsupportedElementError(Exception):
    def __init__(self, tag: str):
        super().__init__(f"unsupported element: {tag}")
        self.tag = tag


class DanglingReferenceError(Exception):
    def __init__(self, reference: str, context: str):
        super().__init__(f"dangling reference {reference!r} in {context}")
        self.reference = reference


_GATEWAY_TAGS = {
    GatewayVariant.EXCLUSIVE: "exclusiveGateway",
    GatewayVariant.EVENT_BASED: "eventBasedGateway",
    GatewayVariant.PARALLEL: "parallelGateway",
}
_TAG_GATEWAYS = {tag: variant for variant, tag in _GATEWAY_TAGS.items()}


def _attrs(**kwargs: str | None) -> str:
    parts = []
    for key, value in kwargs.items():
        if value is None or value == "":
            continue
        parts.append(f" {key}={quoteattr(value)}")
    return "".join(parts)


def _process_id(pool: Pool) -> str:
    return f"{pool.id}_process"


def _node_lines(node: FlowNode, out: list[str]) -> None:
    pad = "    "
    if node.kind is NodeKind.START_EVENT:
        if node.trigger is StartTrigger.MESSAGE:
            out.append(pad + f"<startEvent{_attrs(id=node.id, name=node.name)}>")
            out.append(
                pad + f'  <messageEventDefinition{_attrs(id=node.id + "_def", messageRef=node.message)}/>'
            )
            out.append(pad + "</startEvent>")
        else:
            out.append(pad + f"<startEvent{_attrs(id=node.id, name=node.name)}/>")
    elif node.kind is NodeKind.INTERMEDIATE_CATCH_EVENT:
        out.append(pad + f"<intermediateCatchEvent{_attrs(id=node.id, name=node.name)}>")
        out.append(
            pad + f'  <messageEventDefinition{_attrs(id=node.id + "_def", messageRef=node.message)}/>'
        )
        out.append(pad + "</intermediateCatchEvent>")
    elif node.kind is NodeKind.END_EVENT:
        if node.result is EndResult.TERMINATE:
            out.append(pad + f"<endEvent{_attrs(id=node.id, name=node.name)}>")
            out.append(pad + f'  <terminateEventDefinition{_attrs(id=node.id + "_def")}/>')
            out.append(pad + "</endEvent>")
        else:
            out.append(pad + f"<endEvent{_attrs(id=node.id, name=node.name)}/>")
    elif node.kind is NodeKind.TASK:
        if node.task_variant is TaskVariant.SEND:
            out.append(pad + f"<sendTask{_attrs(id=node.id, name=node.name, messageRef=node.message)}/>")
        elif node.task_variant is TaskVariant.RECEIVE:
            out.append(pad + f"<receiveTask{_attrs(id=node.id, name=node.name, messageRef=node.message)}/>")
        else:
            out.append(pad + f"<task{_attrs(id=node.id, name=node.name)}/>")
    elif node.kind is NodeKind.GATEWAY:
        tag = _GATEWAY_TAGS[node.gateway_variant or GatewayVariant.EXCLUSIVE]
        out.append(pad + f"<{tag}{_attrs(id=node.id, name=node.name)}/>")
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown node kind {node.kind}")


def to_xml(graph: BpmnGraph, include_layout: bool = False) -> str:
    """Serialize a valid graph to a BPMN 2.0 XML document."""
    diagnostics = validate_bpmn(graph)
    if diagnostics:
        raise InvalidGraphError(diagnostics)

    out: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>']
    ns_extra = (
        f' xmlns:bpmndi="{BPMNDI_NS}" xmlns:dc="{DC_NS}" xmlns:di="{DI_NS}"'
        if include_layout
        else ""
    )
    out.append(
        f'<definitions xmlns="{BPMN_NS}"{ns_extra} id="definitions_1" targetNamespace="{TARGET_NS}">'
    )
    for message in graph.messages:
        out.append(f"  <message{_attrs(id=message.id, name=message.name)}/>")
    if graph.pools or graph.message_flows:
        out.append('  <collaboration id="collaboration_1">')
        for pool in graph.pools:
            out.append(
                f"    <participant{_attrs(id=pool.id, name=pool.name, processRef=_process_id(pool))}/>"
            )
        for flow in graph.message_flows:
            out.append(
                f"    <messageFlow{_attrs(id=flow.id, sourceRef=flow.source, targetRef=flow.target, messageRef=flow.message)}/>"
            )
        out.append("  </collaboration>")
    for pool in graph.pools:
        out.append(f"  <process{_attrs(id=_process_id(pool), name=pool.name)}>")
        if pool.lanes:
            out.append(f'    <laneSet id="{pool.id}_lanes">')
            for lane in pool.lanes:
                out.append(f"      <lane{_attrs(id=lane.id, name=lane.name)}>")
                for node_id in lane.node_ids:
                    out.append(f"        <flowNodeRef>{escape(node_id)}</flowNodeRef>")
                out.append("      </lane>")
            out.append("    </laneSet>")
        for node in pool.nodes:
            _node_lines(node, out)
        for flow in pool.sequence_flows:
            if flow.guard:
                out.append(
                    f"    <sequenceFlow{_attrs(id=flow.id, sourceRef=flow.source, targetRef=flow.target)}>"
                )
                out.append(f"      <conditionExpression>{escape(flow.guard)}</conditionExpression>")
                out.append("    </sequenceFlow>")
            else:
                out.append(
                    f"    <sequenceFlow{_attrs(id=flow.id, sourceRef=flow.source, targetRef=flow.target)}/>"
                )
        out.append("  </process>")
    if include_layout:
        out.extend(_layout_lines(graph))
    out.append("</definitions>")
    return "\n".join(out) + "\n"


def _layout_lines(graph: BpmnGraph) -> list[str]:
    """Naive layered layout: pools stacked, nodes in BFS layers left to right."""
    out = ['  <bpmndi:BPMNDiagram id="diagram_1">']
    out.append('    <bpmndi:BPMNPlane id="plane_1" bpmnElement="collaboration_1">')
    node_pos: dict[str, tuple[int, int]] = {}
    pool_y = 40
    for pool in graph.pools:
        succ: dict[str, list[str]] = {n.id: [] for n in pool.nodes}
        indeg = {n.id: 0 for n in pool.nodes}
        for flow in pool.sequence_flows:
            succ[flow.source].append(flow.target)
            indeg[flow.target] += 1
        layer = {n.id: 0 for n in pool.nodes if indeg[n.id] == 0}
        frontier = sorted(layer)
        while frontier:
            node_id = frontier.pop(0)
            for nxt in succ[node_id]:
                if nxt not in layer:
                    layer[nxt] = layer[node_id] + 1
                    frontier.append(nxt)
        for node in pool.nodes:
            layer.setdefault(node.id, 0)
        row_count: dict[int, int] = {}
        height = 1
        for node in pool.nodes:
            depth = layer[node.id]
            row = row_count.get(depth, 0)
            row_count[depth] = row + 1
            height = max(height, row + 1)
            node_pos[node.id] = (60 + depth * 150, pool_y + 40 + row * 90)
        width = 160 + max(layer.values(), default=0) * 150 + 100
        out.append(
            f'      <bpmndi:BPMNShape id="{pool.id}_di" bpmnElement="{pool.id}" isHorizontal="true">'
        )
        out.append(
            f'        <dc:Bounds x="20" y="{pool_y}" width="{width}" height="{height * 90 + 40}"/>'
        )
        out.append("      </bpmndi:BPMNShape>")
        for node in pool.nodes:
            x, y = node_pos[node.id]
            w, h = (36, 36) if node.is_event else (100, 60) if node.kind is NodeKind.TASK else (44, 44)
            out.append(f'      <bpmndi:BPMNShape id="{node.id}_di" bpmnElement="{node.id}">')
            out.append(f'        <dc:Bounds x="{x}" y="{y}" width="{w}" height="{h}"/>')
            out.append("      </bpmndi:BPMNShape>")
        pool_y += height * 90 + 80
    for pool in graph.pools:
        for flow in pool.sequence_flows:
            out.extend(_edge_lines(flow.id, flow.source, flow.target, node_pos))
    for flow in graph.message_flows:
        out.extend(_edge_lines(flow.id, flow.source, flow.target, node_pos))
    out.append("    </bpmndi:BPMNPlane>")
    out.append("  </bpmndi:BPMNDiagram>")
    return out


def _edge_lines(edge_id: str, source: str, target: str, pos: dict[str, tuple[int, int]]) -> list[str]:
    sx, sy = pos.get(source, (0, 0))
    tx, ty = pos.get(target, (0, 0))
    return [
        f'      <bpmndi:BPMNEdge id="{edge_id}_di" bpmnElement="{edge_id}">',
        f'        <di:waypoint x="{sx + 18}" y="{sy + 18}"/>',
        f'        <di:waypoint x="{tx + 18}" y="{ty + 18}"/>',
        "      </bpmndi:BPMNEdge>",
    ]


# Elements the parser understands (beyond these: UnsupportedElementError).
_STRUCTURAL_TAGS = {
    "definitions",
    "message",
    "collaboration",
    "participant",
    "messageFlow",
    "process",
    "laneSet",
    "lane",
    "flowNodeRef",
    "sequenceFlow",
}
_NODE_TAGS = {
    "startEvent",
    "intermediateCatchEvent",
    "endEvent",
    "task",
    "sendTask",
    "receiveTask",
    "exclusiveGateway",
    "eventBasedGateway",
    "parallelGateway",
}
_BENIGN_TAGS = {
    "documentation",
    "incoming",
    "outgoing",
    "conditionExpression",
    "messageEventDefinition",
    "terminateEventDefinition",
}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _is_diagram(tag: str) -> bool:
    return tag.startswith("{" + BPMNDI_NS) or tag.startswith("{" + DC_NS) or tag.startswith("{" + DI_NS)


def from_xml(text: str) -> BpmnGraph:
    """Parse a document produced by :func:`to_xml` back into a graph."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlSyntaxError(str(exc)) from exc
    if _local(root.tag) != "definitions":
        raise XmlSyntaxError(f"expected a definitions root, got {_local(root.tag)}")

    messages: list[Message] = []
    participants: list[tuple[str, str, str]] = []  # id, name, processRef
    message_flows: list[MessageFlow] = []
    processes: dict[str, ET.Element] = {}

    for child in root:
        if _is_diagram(child.tag):
            continue
        tag = _local(child.tag)
        if tag == "message":
            messages.append(Message(child.get("id", ""), child.get("name", "")))
        elif tag == "collaboration":
            for item in child:
                itag = _local(item.tag)
                if itag == "participant":
                    participants.append(
                        (item.get("id", ""), item.get("name", ""), item.get("processRef", ""))
                    )
                elif itag == "messageFlow":
                    message_flows.append(
                        MessageFlow(
                            item.get("id", ""),
                            item.get("sourceRef", ""),
                            item.get("targetRef", ""),
                            item.get("messageRef", ""),
                        )
                    )
                elif itag in _BENIGN_TAGS:
                    continue
                else:
                    raise UnsupportedElementError(itag)
        elif tag == "process":
            processes[child.get("id", "")] = child
        elif tag in _BENIGN_TAGS:
            continue
        else:
            raise UnsupportedElementError(tag)

    pools: list[Pool] = []
    for pool_id, pool_name, process_ref in participants:
        element = processes.get(process_ref)
        if element is None:
            raise DanglingReferenceError(process_ref, f"participant {pool_id}")
        pools.append(_parse_process(pool_id, pool_name, element))

    graph = BpmnGraph(pools=pools, messages=messages, message_flows=message_flows)
    _check_references(graph)
    return graph


def _parse_event_definition(element: ET.Element) -> tuple[str, str | None]:
    """Returns (definition tag, messageRef) for an event element."""
    definition = ("", None)
    for child in element:
        tag = _local(child.tag)
        if tag == "messageEventDefinition":
            definition = ("message", child.get("messageRef"))
        elif tag == "terminateEventDefinition":
            definition = ("terminate", None)
        elif tag in _BENIGN_TAGS:
            continue
        else:
            raise UnsupportedElementError(tag)
    return definition


def _parse_process(pool_id: str, pool_name: str, element: ET.Element) -> Pool:
    pool = Pool(id=pool_id, name=pool_name)
    for child in element:
        if _is_diagram(child.tag):
            continue
        tag = _local(child.tag)
        node_id = child.get("id", "")
        name = child.get("name", "")
        if tag == "laneSet":
            for lane_el in child:
                if _local(lane_el.tag) != "lane":
                    raise UnsupportedElementError(_local(lane_el.tag))
                refs = tuple(
                    (ref.text or "").strip()
                    for ref in lane_el
                    if _local(ref.tag) == "flowNodeRef"
                )
                pool.lanes.append(Lane(lane_el.get("id", ""), lane_el.get("name", ""), refs))
        elif tag == "startEvent":
            definition, message_ref = _parse_event_definition(child)
            if definition == "terminate":
                raise UnsupportedElementError("terminateEventDefinition on startEvent")
            node = FlowNode(
                node_id,
                NodeKind.START_EVENT,
                name,
                trigger=StartTrigger.MESSAGE if definition == "message" else StartTrigger.NONE,
                message=message_ref,
            )
            pool.nodes.append(node)
        elif tag == "intermediateCatchEvent":
            definition, message_ref = _parse_event_definition(child)
            if definition != "message":
                raise UnsupportedElementError(f"{tag} without messageEventDefinition")
            pool.nodes.append(
                FlowNode(node_id, NodeKind.INTERMEDIATE_CATCH_EVENT, name, message=message_ref)
            )
        elif tag == "endEvent":
            definition, _ = _parse_event_definition(child)
            result = EndResult.TERMINATE if definition == "terminate" else EndResult.NONE
            pool.nodes.append(FlowNode(node_id, NodeKind.END_EVENT, name, result=result))
        elif tag == "task":
            pool.nodes.append(FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.ABSTRACT))
        elif tag == "sendTask":
            pool.nodes.append(
                FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.SEND, message=child.get("messageRef"))
            )
        elif tag == "receiveTask":
            pool.nodes.append(
                FlowNode(node_id, NodeKind.TASK, name, task_variant=TaskVariant.RECEIVE, message=child.get("messageRef"))
            )
        elif tag in _TAG_GATEWAYS:
            pool.nodes.append(
                FlowNode(node_id, NodeKind.GATEWAY, name, gateway_variant=_TAG_GATEWAYS[tag])
            )
        elif tag == "sequenceFlow":
            guard = None
            for sub in child:
                if _local(sub.tag) == "conditionExpression":
                    guard = sub.text or ""
                elif _local(sub.tag) in _BENIGN_TAGS:
                    continue
                else:
                    raise UnsupportedElementError(_local(sub.tag))
            pool.sequence_flows.append(
                SequenceFlow(node_id, child.get("sourceRef", ""), child.get("targetRef", ""), guard)
            )
        elif tag in _BENIGN_TAGS:
            continue
        else:
            raise UnsupportedElementError(tag)
    return pool


def _check_references(graph: BpmnGraph) -> None:
    node_ids = {node.id for pool in graph.pools for node in pool.nodes}
    message_ids = {m.id for m in graph.messages}
    for pool in graph.pools:
        for flow in pool.sequence_flows:
            for end in (flow.source, flow.target):
                if end not in node_ids:
                    raise DanglingReferenceError(end, f"sequence flow {flow.id}")
        for node in pool.nodes:
            if node.message is not None and node.message not in message_ids:
                raise DanglingReferenceError(node.message, f"node {node.id}")
    for flow in graph.message_flows:
        for end in (flow.source, flow.target):
            if end not in node_ids:
                raise DanglingReferenceError(end, f"message flow {flow.id}")
        if flow.message not in message_ids:
            raise DanglingReferenceError(flow.message, f"message flow {flow.id}")
