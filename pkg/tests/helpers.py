"""Deterministic random generators shared by property and acceptance tests."""

from __future__ import annotations

import random

from demo2bpmn.bpmn import (
    BpmnGraph,
    Message,
    MessageFlow,
    NodeKind,
    Pool,
    SequenceFlow,
    abstract_task,
    catch_event,
    end_event,
    send_task,
    start_event,
)
from demo2bpmn.ctp import CtpState
from demo2bpmn.model import CardinalityRange, DemoModel, ResponseLink, TransactionKind

_EVENTS = (
    CtpState.REQUESTED,
    CtpState.PROMISED,
    CtpState.DECLARED,
    CtpState.ACCEPTED,
    CtpState.DECLINED,
    CtpState.REJECTED,
)
_CARDS = (
    CardinalityRange(0, 1),
    CardinalityRange(1, 1),
    CardinalityRange(1, None),
    CardinalityRange(0, None),
    CardinalityRange(2, 4),
)


def random_model(rng: random.Random, max_kinds: int = 6) -> DemoModel:
    """A random valid model: links always point from earlier to later kinds."""
    count = rng.randint(0, max_kinds)
    kinds = tuple(
        TransactionKind(
            f"TK{i:02d}",
            f"activity {i}",
            f"A{rng.randint(0, 9):02d}",
            f"A{rng.randint(10, 19):02d}",
        )
        for i in range(1, count + 1)
    )
    links = []
    for i in range(2, count + 1):
        if rng.random() < 0.7:
            parent = rng.randint(1, i - 1)
            links.append(
                ResponseLink(
                    f"TK{parent:02d}",
                    rng.choice(_EVENTS),
                    f"TK{i:02d}",
                    rng.choice(_CARDS),
                )
            )
    return DemoModel(kinds, tuple(links))


def random_graph(rng: random.Random) -> BpmnGraph:
    """A small random collaboration that satisfies the well-formedness rules.

    Each pool is a linear chain (start, some tasks and catches, end). Catches
    are paired with send tasks of the opposite pool, so message flows always
    cross pools; catches left without a sender become plain tasks to keep
    every reference sound.
    """
    pools = [Pool(id=f"pool_{side}", name=side) for side in ("left", "right")]
    messages: list[Message] = []
    message_flows: list[MessageFlow] = []
    flow_n = 0

    for pool_index, pool in enumerate(pools):
        nodes = [start_event(f"{pool.id}_start", "go")]
        for i in range(rng.randint(0, 4)):
            kind = rng.choice(("task", "send", "catch"))
            node_id = f"{pool.id}_n{i}"
            if kind == "task":
                nodes.append(abstract_task(node_id, f"work {i}"))
            elif kind == "send":
                message = Message(f"{node_id}_msg", f"m{pool_index}{i}")
                messages.append(message)
                nodes.append(send_task(node_id, message.id, message.name))
            else:
                nodes.append(catch_event(node_id, "", f"wait {i}"))
        nodes.append(end_event(f"{pool.id}_end", "done"))
        pool.nodes.extend(nodes)
        for a, b in zip(nodes, nodes[1:]):
            flow_n += 1
            guard = f"g{flow_n}" if rng.random() < 0.3 else None
            pool.sequence_flows.append(SequenceFlow(f"sf{flow_n}", a.id, b.id, guard))

    for pool_index, pool in enumerate(pools):
        other = pools[1 - pool_index]
        sends = [n for n in other.nodes if n.task_variant is not None and n.message]
        for position, node in enumerate(list(pool.nodes)):
            if node.kind is NodeKind.INTERMEDIATE_CATCH_EVENT:
                if sends:
                    source = sends.pop(0)
                    node.message = source.message
                    message_flows.append(
                        MessageFlow(f"mf_{node.id}", source.id, node.id, source.message)
                    )
                else:
                    pool.nodes[position] = abstract_task(node.id, node.name)
    return BpmnGraph(pools=pools, messages=messages, message_flows=message_flows)
