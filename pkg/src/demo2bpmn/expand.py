"""Expansion of one transaction kind into a two-pool BPMN building block.

The block gives each party a pool. Every coordination act becomes a send
task in its performer's pool with a message flow to the counterparty; the
executor's first request receipt is a message start event, later receipts
are intermediate catch events. Choices are exclusive gateways, waits for
several possible messages are event-based gateways, and the two structural
loops (re-request after a decline, re-declare after a reject) cycle through
explicit merge gateways.

At the ``complete`` level the quit/stop exits disappear and each state owner
may instead revoke its latest core act; the counterparty answers with a
per-revoke allow or refuse message. The block is turn based: at every state
exactly one party acts while the other waits, so generated collaborations
never race. After an accept the executor's pool completes; a later
revoke-accept re-enters it through a dedicated message start event.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bpmn import (
    BpmnGraph,
    FlowNode,
    GatewayVariant,
    Message,
    MessageFlow,
    NodeKind,
    Pool,
    SequenceFlow,
    TaskVariant,
    abstract_task,
    catch_event,
    end_event,
    event_gateway,
    exclusive_gateway,
    send_task,
    start_event,
)
from .ctp import PatternLevel
from .model import TransactionKind

__all__ = ["BlockStats", "ExpandOptions", "block_stats", "expand_transaction"]


@dataclass(frozen=True)
class ExpandOptions:
    level: PatternLevel = PatternLevel.STANDARD
    include_production: bool = False
    id_prefix: str = ""


@dataclass(frozen=True)
class BlockStats:
    pools: int = 0
    start_events: int = 0
    catch_events: int = 0
    end_events: int = 0
    send_tasks: int = 0
    receive_tasks: int = 0
    abstract_tasks: int = 0
    exclusive_gateways: int = 0
    event_gateways: int = 0
    parallel_gateways: int = 0
    sequence_flows: int = 0
    message_flows: int = 0
    messages: int = 0

    @property
    def events(self) -> int:
        return self.start_events + self.catch_events + self.end_events

    @property
    def tasks(self) -> int:
        return self.send_tasks + self.receive_tasks + self.abstract_tasks

    @property
    def gateways(self) -> int:
        return self.exclusive_gateways + self.event_gateways + self.parallel_gateways

    @property
    def flow_nodes(self) -> int:
        return self.events + self.tasks + self.gateways


def block_stats(graph: BpmnGraph) -> BlockStats:
    """Count every element of a graph by kind."""
    counts = dict(
        pools=len(graph.pools),
        start_events=0,
        catch_events=0,
        end_events=0,
        send_tasks=0,
        receive_tasks=0,
        abstract_tasks=0,
        exclusive_gateways=0,
        event_gateways=0,
        parallel_gateways=0,
        sequence_flows=0,
        message_flows=len(graph.message_flows),
        messages=len(graph.messages),
    )
    for pool in graph.pools:
        counts["sequence_flows"] += len(pool.sequence_flows)
        for node in pool.nodes:
            if node.kind is NodeKind.START_EVENT:
                counts["start_events"] += 1
            elif node.kind is NodeKind.INTERMEDIATE_CATCH_EVENT:
                counts["catch_events"] += 1
            elif node.kind is NodeKind.END_EVENT:
                counts["end_events"] += 1
            elif node.kind is NodeKind.TASK:
                key = {
                    TaskVariant.SEND: "send_tasks",
                    TaskVariant.RECEIVE: "receive_tasks",
                    TaskVariant.ABSTRACT: "abstract_tasks",
                }[node.task_variant or TaskVariant.ABSTRACT]
                counts[key] += 1
            elif node.kind is NodeKind.GATEWAY:
                key = {
                    GatewayVariant.EXCLUSIVE: "exclusive_gateways",
                    GatewayVariant.EVENT_BASED: "event_gateways",
                    GatewayVariant.PARALLEL: "parallel_gateways",
                }[node.gateway_variant or GatewayVariant.EXCLUSIVE]
                counts[key] += 1
    return BlockStats(**counts)


def _sanitize(code: str) -> str:
    return code.replace("-", "")


class _BlockBuilder:
    """Accumulates one transaction's block with deterministic ids."""

    def __init__(self, tk: TransactionKind, opts: ExpandOptions):
        self.tk = tk
        self.prefix = f"{opts.id_prefix}{tk.id}"
        self.initiator_pool = Pool(id=f"pool_{tk.initiator_role}", name=tk.initiator_role)
        self.executor_pool = Pool(id=f"pool_{tk.executor_role}", name=tk.executor_role)
        self.messages: list[Message] = []
        self.message_flows: list[MessageFlow] = []
        self._flow_counter = 0

    def message_for(self, code: str) -> Message:
        message = Message(f"{self.prefix}_msg_{_sanitize(code)}", f"{code}({self.tk.id})")
        self.messages.append(message)
        return message

    def node(self, pool: Pool, node: FlowNode) -> FlowNode:
        pool.nodes.append(node)
        return node

    def flow(self, pool: Pool, source: FlowNode, target: FlowNode, guard: str | None = None) -> SequenceFlow:
        self._flow_counter += 1
        flow = SequenceFlow(f"{self.prefix}_sf{self._flow_counter:02d}", source.id, target.id, guard)
        pool.sequence_flows.append(flow)
        return flow

    def message_flow(self, source: FlowNode, target: FlowNode, message: Message, suffix: str = "") -> None:
        self.message_flows.append(
            MessageFlow(f"{self.prefix}_mf_{_sanitize(message.name.split('(')[0])}{suffix}", source.id, target.id, message.id)
        )

    def graph(self) -> BpmnGraph:
        return BpmnGraph(
            pools=[self.initiator_pool, self.executor_pool],
            messages=self.messages,
            message_flows=self.message_flows,
        )


def expand_transaction(tk: TransactionKind, opts: ExpandOptions) -> BpmnGraph:
    """Expand one transaction kind into its building block at ``opts.level``."""
    if opts.level is PatternLevel.BASIC:
        return _expand_basic(tk, opts)
    if opts.level is PatternLevel.STANDARD:
        return _expand_standard(tk, opts)
    return _expand_complete(tk, opts)


def _expand_basic(tk: TransactionKind, opts: ExpandOptions) -> BpmnGraph:
    b = _BlockBuilder(tk, opts)
    p, tag = b.prefix, tk.id
    ip, ep = b.initiator_pool, b.executor_pool

    msg = {code: b.message_for(code) for code in ("rq", "pm", "da", "ac")}

    i_start = b.node(ip, start_event(f"{p}_i_start", "transaction start"))
    rq_send = b.node(ip, send_task(f"{p}_rq_send", msg["rq"].id, f"rq({tag})"))
    pm_catch = b.node(ip, catch_event(f"{p}_pm_catch", msg["pm"].id, f"pm({tag})"))
    da_catch = b.node(ip, catch_event(f"{p}_da_catch", msg["da"].id, f"da({tag})"))
    ac_send = b.node(ip, send_task(f"{p}_ac_send", msg["ac"].id, f"ac({tag})"))
    i_end = b.node(ip, end_event(f"{p}_i_end_done", "accepted"))

    rq_start = b.node(ep, start_event(f"{p}_rq_start", f"rq({tag})", message=msg["rq"].id))
    pm_send = b.node(ep, send_task(f"{p}_pm_send", msg["pm"].id, f"pm({tag})"))
    da_send = b.node(ep, send_task(f"{p}_da_send", msg["da"].id, f"da({tag})"))
    ac_catch = b.node(ep, catch_event(f"{p}_ac_catch", msg["ac"].id, f"ac({tag})"))
    e_end = b.node(ep, end_event(f"{p}_e_end_done", "accepted"))

    b.flow(ip, i_start, rq_send)
    b.flow(ip, rq_send, pm_catch)
    b.flow(ip, pm_catch, da_catch)
    b.flow(ip, da_catch, ac_send)
    b.flow(ip, ac_send, i_end)

    b.flow(ep, rq_start, pm_send)
    if opts.include_production:
        execute = b.node(ep, abstract_task(f"{p}_exec_task", f"execute({tag})"))
        b.flow(ep, pm_send, execute)
        b.flow(ep, execute, da_send)
    else:
        b.flow(ep, pm_send, da_send)
    b.flow(ep, da_send, ac_catch)
    b.flow(ep, ac_catch, e_end)

    for code, source, target in (
        ("rq", rq_send, rq_start),
        ("pm", pm_send, pm_catch),
        ("da", da_send, da_catch),
        ("ac", ac_send, ac_catch),
    ):
        b.message_flow(source, target, msg[code])
    return b.graph()


def _expand_standard(tk: TransactionKind, opts: ExpandOptions) -> BpmnGraph:
    b = _BlockBuilder(tk, opts)
    p, tag = b.prefix, tk.id
    ip, ep = b.initiator_pool, b.executor_pool

    msg = {code: b.message_for(code) for code in ("rq", "pm", "dc", "da", "ac", "rj", "qt", "st")}

    def send(pool: Pool, code: str) -> FlowNode:
        return b.node(pool, send_task(f"{p}_{code}_send", msg[code].id, f"{code}({tag})"))

    def catch(pool: Pool, code: str, node_id: str | None = None) -> FlowNode:
        return b.node(pool, catch_event(node_id or f"{p}_{code}_catch", msg[code].id, f"{code}({tag})"))

    # Initiator pool: request, then wait for promise or decline; after the
    # declare arrives choose accept or reject; a reject waits for the
    # adapted declare or the stop; a decline chooses re-request or quit.
    i_start = b.node(ip, start_event(f"{p}_i_start", "transaction start"))
    i_merge_rq = b.node(ip, exclusive_gateway(f"{p}_i_merge_rq"))
    rq_send = send(ip, "rq")
    i_ebg_requested = b.node(ip, event_gateway(f"{p}_i_ebg_requested"))
    pm_catch = catch(ip, "pm")
    dc_catch = catch(ip, "dc")
    da_catch = catch(ip, "da")
    i_xor_declared = b.node(ip, exclusive_gateway(f"{p}_i_xor_declared", "declared?"))
    ac_send = send(ip, "ac")
    rj_send = send(ip, "rj")
    i_ebg_rejected = b.node(ip, event_gateway(f"{p}_i_ebg_rejected"))
    st_catch = catch(ip, "st")
    i_xor_declined = b.node(ip, exclusive_gateway(f"{p}_i_xor_declined", "declined?"))
    qt_send = send(ip, "qt")
    i_end_done = b.node(ip, end_event(f"{p}_i_end_done", "accepted"))
    i_end_stop = b.node(ip, end_event(f"{p}_i_end_stop", "stopped"))
    i_end_quit = b.node(ip, end_event(f"{p}_i_end_quit", "quit"))

    b.flow(ip, i_start, i_merge_rq)
    b.flow(ip, i_merge_rq, rq_send)
    b.flow(ip, rq_send, i_ebg_requested)
    b.flow(ip, i_ebg_requested, pm_catch)
    b.flow(ip, i_ebg_requested, dc_catch)
    b.flow(ip, pm_catch, da_catch)
    b.flow(ip, da_catch, i_xor_declared)
    b.flow(ip, i_xor_declared, ac_send, "accept")
    b.flow(ip, i_xor_declared, rj_send, "reject")
    b.flow(ip, ac_send, i_end_done)
    b.flow(ip, rj_send, i_ebg_rejected)
    b.flow(ip, i_ebg_rejected, da_catch)
    b.flow(ip, i_ebg_rejected, st_catch)
    b.flow(ip, st_catch, i_end_stop)
    b.flow(ip, dc_catch, i_xor_declined)
    b.flow(ip, i_xor_declined, i_merge_rq, "re-request")
    b.flow(ip, i_xor_declined, qt_send, "quit")
    b.flow(ip, qt_send, i_end_quit)

    # Executor pool: started by the request; choose promise or decline;
    # declare and wait for accept or reject; a reject chooses re-declare or
    # stop; a decline waits for the re-request or the quit.
    rq_start = b.node(ep, start_event(f"{p}_rq_start", f"rq({tag})", message=msg["rq"].id))
    e_merge_requested = b.node(ep, exclusive_gateway(f"{p}_e_merge_requested"))
    e_xor_requested = b.node(ep, exclusive_gateway(f"{p}_e_xor_requested", "requested?"))
    pm_send = send(ep, "pm")
    dc_send = send(ep, "dc")
    e_merge_da = b.node(ep, exclusive_gateway(f"{p}_e_merge_da"))
    da_send = send(ep, "da")
    e_ebg_declared = b.node(ep, event_gateway(f"{p}_e_ebg_declared"))
    ac_catch = catch(ep, "ac")
    rj_catch = catch(ep, "rj")
    e_xor_rejected = b.node(ep, exclusive_gateway(f"{p}_e_xor_rejected", "rejected?"))
    st_send = send(ep, "st")
    e_ebg_declined = b.node(ep, event_gateway(f"{p}_e_ebg_declined"))
    rq_recatch = b.node(ep, catch_event(f"{p}_rq_recatch", msg["rq"].id, f"rq({tag})"))
    qt_catch = catch(ep, "qt")
    e_end_done = b.node(ep, end_event(f"{p}_e_end_done", "accepted"))
    e_end_stop = b.node(ep, end_event(f"{p}_e_end_stop", "stopped"))
    e_end_quit = b.node(ep, end_event(f"{p}_e_end_quit", "quit"))

    b.flow(ep, rq_start, e_merge_requested)
    b.flow(ep, e_merge_requested, e_xor_requested)
    b.flow(ep, e_xor_requested, pm_send, "promise")
    b.flow(ep, e_xor_requested, dc_send, "decline")
    if opts.include_production:
        execute = b.node(ep, abstract_task(f"{p}_exec_task", f"execute({tag})"))
        b.flow(ep, pm_send, execute)
        b.flow(ep, execute, e_merge_da)
    else:
        b.flow(ep, pm_send, e_merge_da)
    b.flow(ep, e_merge_da, da_send)
    b.flow(ep, da_send, e_ebg_declared)
    b.flow(ep, e_ebg_declared, ac_catch)
    b.flow(ep, e_ebg_declared, rj_catch)
    b.flow(ep, ac_catch, e_end_done)
    b.flow(ep, rj_catch, e_xor_rejected)
    b.flow(ep, e_xor_rejected, e_merge_da, "re-declare")
    b.flow(ep, e_xor_rejected, st_send, "stop")
    b.flow(ep, st_send, e_end_stop)
    b.flow(ep, dc_send, e_ebg_declined)
    b.flow(ep, e_ebg_declined, rq_recatch)
    b.flow(ep, e_ebg_declined, qt_catch)
    b.flow(ep, rq_recatch, e_merge_requested)
    b.flow(ep, qt_catch, e_end_quit)

    b.message_flow(rq_send, rq_start, msg["rq"])
    b.message_flow(rq_send, rq_recatch, msg["rq"], suffix="_re")
    for code, source, target in (
        ("pm", pm_send, pm_catch),
        ("dc", dc_send, dc_catch),
        ("da", da_send, da_catch),
        ("ac", ac_send, ac_catch),
        ("rj", rj_send, rj_catch),
        ("qt", qt_send, qt_catch),
        ("st", st_send, st_catch),
    ):
        b.message_flow(source, target, msg[code])
    return b.graph()


def _expand_complete(tk: TransactionKind, opts: ExpandOptions) -> BpmnGraph:
    b = _BlockBuilder(tk, opts)
    p, tag = b.prefix, tk.id
    ip, ep = b.initiator_pool, b.executor_pool

    codes = ["rq", "pm", "dc", "da", "ac", "rj"]
    for base in ("rq", "pm", "da", "ac"):
        codes.extend((f"rv-{base}", f"al-{base}", f"rf-{base}"))
    msg = {code: b.message_for(code) for code in codes}

    def send(pool: Pool, code: str) -> FlowNode:
        return b.node(pool, send_task(f"{p}_{_sanitize(code)}_send", msg[code].id, f"{code}({tag})"))

    def catch(pool: Pool, code: str, node_id: str | None = None) -> FlowNode:
        return b.node(
            pool,
            catch_event(node_id or f"{p}_{_sanitize(code)}_catch", msg[code].id, f"{code}({tag})"),
        )

    # Initiator pool.
    i_start = b.node(ip, start_event(f"{p}_i_start", "transaction start"))
    i_merge_rq = b.node(ip, exclusive_gateway(f"{p}_i_merge_rq"))
    rq_send = send(ip, "rq")
    i_merge_requested = b.node(ip, exclusive_gateway(f"{p}_i_merge_requested"))
    i_ebg_requested = b.node(ip, event_gateway(f"{p}_i_ebg_requested"))
    pm_catch = catch(ip, "pm")
    dc_catch = catch(ip, "dc")
    i_merge_promised = b.node(ip, exclusive_gateway(f"{p}_i_merge_promised"))
    i_ebg_promised = b.node(ip, event_gateway(f"{p}_i_ebg_promised"))
    da_catch = catch(ip, "da")
    rvpm_catch = catch(ip, "rv-pm")
    i_xor_declared = b.node(ip, exclusive_gateway(f"{p}_i_xor_declared", "declared?"))
    ac_send = send(ip, "ac")
    rj_send = send(ip, "rj")
    i_merge_accepted = b.node(ip, exclusive_gateway(f"{p}_i_merge_accepted"))
    i_xor_accepted = b.node(ip, exclusive_gateway(f"{p}_i_xor_accepted", "accepted?"))
    rvac_send = send(ip, "rv-ac")
    i_ebg_rvac = b.node(ip, event_gateway(f"{p}_i_ebg_rvac"))
    alac_catch = catch(ip, "al-ac")
    rfac_catch = catch(ip, "rf-ac")
    i_merge_rejected = b.node(ip, exclusive_gateway(f"{p}_i_merge_rejected"))
    i_ebg_rejected = b.node(ip, event_gateway(f"{p}_i_ebg_rejected"))
    rvda_catch = catch(ip, "rv-da")
    i_xor_rvda = b.node(ip, exclusive_gateway(f"{p}_i_xor_rvda", "allow rv-da?"))
    alda_send = send(ip, "al-da")
    rfda_send = send(ip, "rf-da")
    i_xor_rvpm = b.node(ip, exclusive_gateway(f"{p}_i_xor_rvpm", "allow rv-pm?"))
    alpm_send = send(ip, "al-pm")
    rfpm_send = send(ip, "rf-pm")
    i_merge_declined = b.node(ip, exclusive_gateway(f"{p}_i_merge_declined"))
    i_xor_declined = b.node(ip, exclusive_gateway(f"{p}_i_xor_declined", "declined?"))
    rvrq_send = send(ip, "rv-rq")
    i_ebg_rvrq = b.node(ip, event_gateway(f"{p}_i_ebg_rvrq"))
    alrq_catch = catch(ip, "al-rq")
    rfrq_catch = catch(ip, "rf-rq")
    i_xor_initiated = b.node(ip, exclusive_gateway(f"{p}_i_xor_initiated", "initiated?"))
    i_end_done = b.node(ip, end_event(f"{p}_i_end_done", "accepted"))
    i_end_withdrawn = b.node(ip, end_event(f"{p}_i_end_withdrawn", "withdrawn"))

    b.flow(ip, i_start, i_merge_rq)
    b.flow(ip, i_merge_rq, rq_send)
    b.flow(ip, rq_send, i_merge_requested)
    b.flow(ip, i_merge_requested, i_ebg_requested)
    b.flow(ip, i_ebg_requested, pm_catch)
    b.flow(ip, i_ebg_requested, dc_catch)
    b.flow(ip, pm_catch, i_merge_promised)
    b.flow(ip, i_merge_promised, i_ebg_promised)
    b.flow(ip, i_ebg_promised, da_catch)
    b.flow(ip, i_ebg_promised, rvpm_catch)
    b.flow(ip, da_catch, i_xor_declared)
    b.flow(ip, i_xor_declared, ac_send, "accept")
    b.flow(ip, i_xor_declared, rj_send, "reject")
    b.flow(ip, ac_send, i_merge_accepted)
    b.flow(ip, i_merge_accepted, i_xor_accepted)
    b.flow(ip, i_xor_accepted, i_end_done, "done")
    b.flow(ip, i_xor_accepted, rvac_send, "revoke-accept")
    b.flow(ip, rvac_send, i_ebg_rvac)
    b.flow(ip, i_ebg_rvac, alac_catch)
    b.flow(ip, i_ebg_rvac, rfac_catch)
    b.flow(ip, alac_catch, i_merge_rejected)
    b.flow(ip, rfac_catch, i_merge_accepted)
    b.flow(ip, rj_send, i_merge_rejected)
    b.flow(ip, i_merge_rejected, i_ebg_rejected)
    b.flow(ip, i_ebg_rejected, da_catch)
    b.flow(ip, i_ebg_rejected, rvda_catch)
    b.flow(ip, rvda_catch, i_xor_rvda)
    b.flow(ip, i_xor_rvda, alda_send, "allow")
    b.flow(ip, i_xor_rvda, rfda_send, "refuse")
    b.flow(ip, alda_send, i_merge_promised)
    b.flow(ip, rfda_send, i_merge_rejected)
    b.flow(ip, rvpm_catch, i_xor_rvpm)
    b.flow(ip, i_xor_rvpm, alpm_send, "allow")
    b.flow(ip, i_xor_rvpm, rfpm_send, "refuse")
    b.flow(ip, alpm_send, i_merge_requested)
    b.flow(ip, rfpm_send, i_merge_promised)
    b.flow(ip, dc_catch, i_merge_declined)
    b.flow(ip, i_merge_declined, i_xor_declined)
    b.flow(ip, i_xor_declined, i_merge_rq, "re-request")
    b.flow(ip, i_xor_declined, rvrq_send, "revoke-request")
    b.flow(ip, rvrq_send, i_ebg_rvrq)
    b.flow(ip, i_ebg_rvrq, alrq_catch)
    b.flow(ip, i_ebg_rvrq, rfrq_catch)
    b.flow(ip, alrq_catch, i_xor_initiated)
    b.flow(ip, i_xor_initiated, i_merge_rq, "request")
    b.flow(ip, i_xor_initiated, i_end_withdrawn, "done")
    b.flow(ip, rfrq_catch, i_merge_declined)

    # Executor pool.
    rq_start = b.node(ep, start_event(f"{p}_rq_start", f"rq({tag})", message=msg["rq"].id))
    e_merge_requested = b.node(ep, exclusive_gateway(f"{p}_e_merge_requested"))
    e_xor_requested = b.node(ep, exclusive_gateway(f"{p}_e_xor_requested", "requested?"))
    pm_send = send(ep, "pm")
    dc_send = send(ep, "dc")
    e_merge_promised = b.node(ep, exclusive_gateway(f"{p}_e_merge_promised"))
    e_xor_promised = b.node(ep, exclusive_gateway(f"{p}_e_xor_promised", "promised?"))
    e_merge_da = b.node(ep, exclusive_gateway(f"{p}_e_merge_da"))
    da_send = send(ep, "da")
    rvpm_send = send(ep, "rv-pm")
    e_ebg_rvpm = b.node(ep, event_gateway(f"{p}_e_ebg_rvpm"))
    alpm_catch = catch(ep, "al-pm")
    rfpm_catch = catch(ep, "rf-pm")
    e_ebg_declared = b.node(ep, event_gateway(f"{p}_e_ebg_declared"))
    ac_catch = catch(ep, "ac")
    rj_catch = catch(ep, "rj")
    e_merge_rejected = b.node(ep, exclusive_gateway(f"{p}_e_merge_rejected"))
    e_xor_rejected = b.node(ep, exclusive_gateway(f"{p}_e_xor_rejected", "rejected?"))
    rvda_send = send(ep, "rv-da")
    e_ebg_rvda = b.node(ep, event_gateway(f"{p}_e_ebg_rvda"))
    alda_catch = catch(ep, "al-da")
    rfda_catch = catch(ep, "rf-da")
    e_merge_declined = b.node(ep, exclusive_gateway(f"{p}_e_merge_declined"))
    e_ebg_declined = b.node(ep, event_gateway(f"{p}_e_ebg_declined"))
    rq_recatch = b.node(ep, catch_event(f"{p}_rq_recatch", msg["rq"].id, f"rq({tag})"))
    rvrq_catch = catch(ep, "rv-rq")
    e_xor_rvrq = b.node(ep, exclusive_gateway(f"{p}_e_xor_rvrq", "allow rv-rq?"))
    alrq_send = send(ep, "al-rq")
    rfrq_send = send(ep, "rf-rq")
    rvac_start = b.node(
        ep, start_event(f"{p}_rvac_start", f"rv-ac({tag})", message=msg["rv-ac"].id)
    )
    e_xor_rvac = b.node(ep, exclusive_gateway(f"{p}_e_xor_rvac", "allow rv-ac?"))
    alac_send = send(ep, "al-ac")
    rfac_send = send(ep, "rf-ac")
    e_end_done = b.node(ep, end_event(f"{p}_e_end_done", "accepted"))
    e_end_withdrawn = b.node(ep, end_event(f"{p}_e_end_withdrawn", "withdrawn"))
    e_end_refused = b.node(ep, end_event(f"{p}_e_end_refused", "revoke refused"))

    b.flow(ep, rq_start, e_merge_requested)
    b.flow(ep, e_merge_requested, e_xor_requested)
    b.flow(ep, e_xor_requested, pm_send, "promise")
    b.flow(ep, e_xor_requested, dc_send, "decline")
    if opts.include_production:
        execute = b.node(ep, abstract_task(f"{p}_exec_task", f"execute({tag})"))
        b.flow(ep, pm_send, execute)
        b.flow(ep, execute, e_merge_promised)
    else:
        b.flow(ep, pm_send, e_merge_promised)
    b.flow(ep, e_merge_promised, e_xor_promised)
    b.flow(ep, e_xor_promised, e_merge_da, "declare")
    b.flow(ep, e_xor_promised, rvpm_send, "revoke-promise")
    b.flow(ep, e_merge_da, da_send)
    b.flow(ep, da_send, e_ebg_declared)
    b.flow(ep, rvpm_send, e_ebg_rvpm)
    b.flow(ep, e_ebg_rvpm, alpm_catch)
    b.flow(ep, e_ebg_rvpm, rfpm_catch)
    b.flow(ep, alpm_catch, e_merge_requested)
    b.flow(ep, rfpm_catch, e_merge_promised)
    b.flow(ep, e_ebg_declared, ac_catch)
    b.flow(ep, e_ebg_declared, rj_catch)
    b.flow(ep, ac_catch, e_end_done)
    b.flow(ep, rj_catch, e_merge_rejected)
    b.flow(ep, e_merge_rejected, e_xor_rejected)
    b.flow(ep, e_xor_rejected, e_merge_da, "re-declare")
    b.flow(ep, e_xor_rejected, rvda_send, "revoke-declare")
    b.flow(ep, rvda_send, e_ebg_rvda)
    b.flow(ep, e_ebg_rvda, alda_catch)
    b.flow(ep, e_ebg_rvda, rfda_catch)
    b.flow(ep, alda_catch, e_merge_promised)
    b.flow(ep, rfda_catch, e_merge_rejected)
    b.flow(ep, dc_send, e_merge_declined)
    b.flow(ep, e_merge_declined, e_ebg_declined)
    b.flow(ep, e_ebg_declined, rq_recatch)
    b.flow(ep, e_ebg_declined, rvrq_catch)
    b.flow(ep, rq_recatch, e_merge_requested)
    b.flow(ep, rvrq_catch, e_xor_rvrq)
    b.flow(ep, e_xor_rvrq, alrq_send, "allow")
    b.flow(ep, e_xor_rvrq, rfrq_send, "refuse")
    b.flow(ep, alrq_send, e_end_withdrawn)
    b.flow(ep, rfrq_send, e_merge_declined)
    b.flow(ep, rvac_start, e_xor_rvac)
    b.flow(ep, e_xor_rvac, alac_send, "allow")
    b.flow(ep, e_xor_rvac, rfac_send, "refuse")
    b.flow(ep, alac_send, e_merge_rejected)
    b.flow(ep, rfac_send, e_end_refused)

    b.message_flow(rq_send, rq_start, msg["rq"])
    b.message_flow(rq_send, rq_recatch, msg["rq"], suffix="_re")
    for code, source, target in (
        ("pm", pm_send, pm_catch),
        ("dc", dc_send, dc_catch),
        ("da", da_send, da_catch),
        ("ac", ac_send, ac_catch),
        ("rj", rj_send, rj_catch),
        ("rv-pm", rvpm_send, rvpm_catch),
        ("al-pm", alpm_send, alpm_catch),
        ("rf-pm", rfpm_send, rfpm_catch),
        ("rv-da", rvda_send, rvda_catch),
        ("al-da", alda_send, alda_catch),
        ("rf-da", rfda_send, rfda_catch),
        ("rv-rq", rvrq_send, rvrq_catch),
        ("al-rq", alrq_send, alrq_catch),
        ("rf-rq", rfrq_send, rfrq_catch),
        ("rv-ac", rvac_send, rvac_start),
        ("al-ac", alac_send, alac_catch),
        ("rf-ac", rfac_send, rfac_catch),
    ):
        b.message_flow(source, target, msg[code])
    return b.graph()
