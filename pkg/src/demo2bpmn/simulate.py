"""Token simulation of BPMN collaborations and conformance checking.

Execution follows simple token-game semantics. Plain start events inject a
token when a run begins; message start events inject one whenever their
message arrives and no waiting catch wants it, which also lets a completed
pool be re-entered (a child pool initiated again by a loop, for example).
Send tasks append their message to a shared mailbox and emit one trace
step; catch elements consume matching mail; exclusive gateways branch per
policy; event-based gateways resolve to whichever branch's message is
deliverable.

Moves that involve no decision are fired eagerly in a fixed order, so runs
branch only at genuine choices. Generated collaborations are turn based
(one party acts while others wait), which keeps the emitted act order
canonical; independent silent moves commute.

Bounds make exploration finite: each loop-back edge (guards ``re-request``,
``re-declare``, ``another``) may be taken at most ``loop_bound`` times and
at most ``revoke_bound`` revokes may be sent in one run. A run that can
only continue past a budget is abandoned as bound exceeded; that is
distinct from a deadlock, where tokens remain but no budget would help.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .bpmn import (
    BpmnGraph,
    FlowNode,
    GatewayVariant,
    InvalidGraphError,
    NodeKind,
    Pool,
    SequenceFlow,
    StartTrigger,
    TaskVariant,
    validate_bpmn,
)
from .ctp import (
    ActKind,
    CtpError,
    CtpMachine,
    Party,
    PatternLevel,
    Trace as CtpTrace,
    act_by_code,
    build_ctp,
    enumerate_traces,
    format_trace,
    is_terminal,
    performer_of,
    step,
)

__all__ = [
    "BoundExceededError",
    "ChoicePolicy",
    "ConformanceReport",
    "DeadlockError",
    "ExplorationResult",
    "ScriptError",
    "SimulationError",
    "TraceStep",
    "check_conformance",
    "enabled_send_acts",
    "enumerate_bpmn_traces",
    "explore",
    "machine_accepts",
    "project_acts",
    "run_scripted",
    "simulate",
    "trace_line",
]


class SimulationError(Exception):
    pass


class DeadlockError(SimulationError):
    pass


class BoundExceededError(SimulationError):
    pass


class ScriptError(SimulationError):
    pass


_MESSAGE_NAME_RE = re.compile(r"^([a-z]+(?:-[a-z]+)?)\(([A-Za-z]+\d+)\)$")

# Reply messages carry the revoked act as a suffix; they all project to the
# plain allow/refuse acts of the transaction machine.
_CODE_NORMALIZATION = {"al-rq": "al", "al-pm": "al", "al-da": "al", "al-ac": "al",
                       "rf-rq": "rf", "rf-pm": "rf", "rf-da": "rf", "rf-ac": "rf"}


def parse_act(message_name: str) -> tuple[ActKind, str, str] | None:
    """Map a message name like ``rv-ac(TK01)`` to (act, tk id, raw code)."""
    match = _MESSAGE_NAME_RE.match(message_name)
    if not match:
        return None
    raw, tk = match.groups()
    code = _CODE_NORMALIZATION.get(raw, raw)
    try:
        return act_by_code(code), tk, raw
    except KeyError:
        return None


_REVOKE_BY_BASE = {
    "rq": ActKind.REVOKE_REQUEST,
    "pm": ActKind.REVOKE_PROMISE,
    "da": ActKind.REVOKE_DECLARE,
    "ac": ActKind.REVOKE_ACCEPT,
}


def _party_for(act: ActKind, raw_code: str) -> Party:
    """Performer of an emitted act; allow/refuse come from the revoke's counterparty."""
    if act in (ActKind.ALLOW, ActKind.REFUSE):
        base = raw_code.split("-", 1)[1] if "-" in raw_code else ""
        revoke = _REVOKE_BY_BASE.get(base)
        return performer_of(revoke).other if revoke else Party.INITIATOR
    return performer_of(act)


class TraceStep(NamedTuple):
    party: Party
    act: ActKind
    tk: str


SimTrace = tuple[TraceStep, ...]


def trace_line(trace: SimTrace, include_tk: bool | None = None) -> str:
    """Render a simulation trace; transaction ids appear when several mix."""
    if include_tk is None:
        include_tk = len({s.tk for s in trace}) > 1
    if include_tk:
        return "·".join(f"{s.act.code}({s.tk})" for s in trace)
    return "·".join(s.act.code for s in trace)


@dataclass(frozen=True)
class ChoicePolicy:
    """How exclusive-gateway decisions are resolved during one run."""

    strategy: str  # "exhaustive" | "random" | "scripted"
    seed: int = 0
    script: tuple[str, ...] = ()

    @staticmethod
    def exhaustive() -> "ChoicePolicy":
        return ChoicePolicy("exhaustive")

    @staticmethod
    def random(seed: int) -> "ChoicePolicy":
        return ChoicePolicy("random", seed=seed)

    @staticmethod
    def scripted(tokens: Iterable[str]) -> "ChoicePolicy":
        return ChoicePolicy("scripted", script=tuple(tokens))


class _Marking:
    """Mutable run state: tokens on nodes, mailbox, loop counters."""

    __slots__ = ("tokens", "mailbox", "loop_counts", "revokes")

    def __init__(self) -> None:
        self.tokens: Counter[str] = Counter()
        self.mailbox: Counter[str] = Counter()
        self.loop_counts: Counter[str] = Counter()
        self.revokes = 0

    def clone(self) -> "_Marking":
        other = _Marking()
        other.tokens = Counter(self.tokens)
        other.mailbox = Counter(self.mailbox)
        other.loop_counts = Counter(self.loop_counts)
        other.revokes = self.revokes
        return other

    def observable(self) -> tuple:
        """Tokens plus mailbox; budget bookkeeping excluded."""
        return (
            tuple(sorted((n, c) for n, c in self.tokens.items() if c)),
            tuple(sorted((m, c) for m, c in self.mailbox.items() if c)),
        )

    def describe(self) -> str:
        tokens, mailbox = self.observable()
        parts = [f"tokens={{{', '.join(f'{n}x{c}' if c > 1 else n for n, c in tokens)}}}"]
        if mailbox:
            parts.append(f"mail={{{', '.join(m for m, _ in mailbox)}}}")
        return " ".join(parts)


_GUARD_BOUND_RE = re.compile(r"\[(min|max)=(\d+)\]")


class _Runtime:
    """Immutable indexes over one graph, shared by all runs."""

    def __init__(self, graph: BpmnGraph, loop_bound: int, revoke_bound: int):
        diagnostics = validate_bpmn(graph)
        if diagnostics:
            raise InvalidGraphError(diagnostics)
        self.graph = graph
        self.loop_bound = loop_bound
        self.revoke_bound = revoke_bound
        self.node: dict[str, FlowNode] = {}
        self.pool_of: dict[str, Pool] = {}
        self.outgoing: dict[str, list[SequenceFlow]] = {}
        self.message_name: dict[str, str] = {m.id: m.name for m in graph.messages}
        for pool in graph.pools:
            for node in pool.nodes:
                self.node[node.id] = node
                self.pool_of[node.id] = pool
                self.outgoing[node.id] = []
            for flow in pool.sequence_flows:
                self.outgoing[flow.source].append(flow)
        # A catching element only receives along a declared message flow.
        self.flow_targets: dict[str, set[str]] = {}
        for mflow in graph.message_flows:
            self.flow_targets.setdefault(mflow.message, set()).add(mflow.target)
        self.plain_starts = [
            n for p in graph.pools for n in p.nodes
            if n.kind is NodeKind.START_EVENT and n.trigger is StartTrigger.NONE
        ]
        self.message_starts = [
            n for p in graph.pools for n in p.nodes
            if n.kind is NodeKind.START_EVENT and n.trigger is StartTrigger.MESSAGE
        ]
        self._next_act_cache: dict[str, tuple[ActKind, str, str] | None] = {}

    def act_of(self, node: FlowNode) -> tuple[ActKind, str, str] | None:
        if node.message is None:
            return None
        name = self.message_name.get(node.message)
        return parse_act(name) if name else None

    def guard_base(self, flow: SequenceFlow) -> str:
        return (flow.guard or "").split(" [")[0]

    def guard_bounds(self, flow: SequenceFlow) -> dict[str, int]:
        return {k: int(v) for k, v in _GUARD_BOUND_RE.findall(flow.guard or "")}

    def is_loop_edge(self, flow: SequenceFlow) -> bool:
        return self.guard_base(flow) in ("re-request", "re-declare", "another")

    def sibling_loop_edge(self, flow: SequenceFlow) -> SequenceFlow | None:
        for other in self.outgoing[flow.source]:
            if self.guard_base(other) == "another":
                return other
        return None

    def next_act(self, flow: SequenceFlow) -> tuple[ActKind, str, str] | None:
        """The first send act a branch reaches without passing a decision."""
        if flow.id in self._next_act_cache:
            return self._next_act_cache[flow.id]
        current, seen = flow.target, set()
        result = None
        while current not in seen:
            seen.add(current)
            node = self.node[current]
            if node.kind is NodeKind.TASK and node.task_variant is TaskVariant.SEND:
                result = self.act_of(node)
                break
            passthrough = (
                node.kind is NodeKind.GATEWAY
                and node.gateway_variant is GatewayVariant.EXCLUSIVE
                and len(self.outgoing[current]) == 1
            ) or (node.kind is NodeKind.TASK and node.task_variant is TaskVariant.ABSTRACT)
            if not passthrough:
                break
            current = self.outgoing[current][0].target
        self._next_act_cache[flow.id] = result
        return result

    def edge_legal(self, flow: SequenceFlow, marking: _Marking, ignore_budgets: bool = False) -> bool:
        base = self.guard_base(flow)
        bounds = self.guard_bounds(flow)
        if base in ("re-request", "re-declare", "another"):
            taken = marking.loop_counts[flow.id]
            if not ignore_budgets and taken >= self.loop_bound:
                return False
            if "max" in bounds and taken + 2 > bounds["max"]:
                return False
        if base == "done" and "min" in bounds:
            sibling = self.sibling_loop_edge(flow)
            executions = 1 + (marking.loop_counts[sibling.id] if sibling else 0)
            if executions < bounds["min"]:
                return False
        if not ignore_budgets:
            act = self.next_act(flow)
            if act is not None and act[2].startswith("rv-") and marking.revokes >= self.revoke_bound:
                return False
        return True

    def deliverable_to(self, node: FlowNode) -> bool:
        return bool(node.message) and node.id in self.flow_targets.get(node.message, ())

    def wanted_messages(self, marking: _Marking) -> set[str]:
        """Messages a live catch (or event-gateway branch) is waiting for."""
        wanted: set[str] = set()
        for node_id, count in marking.tokens.items():
            if not count:
                continue
            node = self.node[node_id]
            if node.kind is NodeKind.INTERMEDIATE_CATCH_EVENT and self.deliverable_to(node):
                wanted.add(node.message)
            elif (
                node.kind is NodeKind.TASK
                and node.task_variant is TaskVariant.RECEIVE
                and self.deliverable_to(node)
            ):
                wanted.add(node.message)
            elif node.kind is NodeKind.GATEWAY and node.gateway_variant is GatewayVariant.EVENT_BASED:
                for flow in self.outgoing[node_id]:
                    target = self.node[flow.target]
                    if self.deliverable_to(target):
                        wanted.add(target.message)
        return wanted


@dataclass(frozen=True)
class _Choice:
    node_id: str
    flow: SequenceFlow
    via_event_gateway: bool
    order: int  # construction order of the edge, for the exhaustive policy

    def label(self) -> str:
        return self.flow.guard or self.flow.id


class _Run:
    """One run in progress: marking plus the trace emitted so far."""

    def __init__(self, rt: _Runtime, marking: _Marking | None = None, trace: SimTrace = ()):
        self.rt = rt
        self.marking = marking or self._initial(rt)
        self.trace: list[TraceStep] = list(trace)

    @staticmethod
    def _initial(rt: _Runtime) -> _Marking:
        marking = _Marking()
        for node in rt.plain_starts:
            marking.tokens[node.id] += 1
        return marking

    def clone(self) -> "_Run":
        return _Run(self.rt, self.marking.clone(), tuple(self.trace))

    def _emit(self, node: FlowNode) -> None:
        info = self.rt.act_of(node)
        if info is not None:
            act, tk, raw = info
            if raw.startswith("rv-"):
                self.marking.revokes += 1
            self.trace.append(TraceStep(_party_for(act, raw), act, tk))

    def _move_token(self, from_id: str, to_id: str) -> None:
        self.marking.tokens[from_id] -= 1
        if not self.marking.tokens[from_id]:
            del self.marking.tokens[from_id]
        self.marking.tokens[to_id] += 1

    def _advance(self, node_id: str) -> None:
        """Move the token at ``node_id`` along its single outgoing flow."""
        flows = self.rt.outgoing[node_id]
        if not flows:
            # No continuation: drop the token (end events land here too).
            self.marking.tokens[node_id] -= 1
            if not self.marking.tokens[node_id]:
                del self.marking.tokens[node_id]
            return
        self._move_token(node_id, flows[0].target)

    def _forced_moves(self) -> list[tuple[str, str]]:
        """(kind, node id) pairs for every decision-free enabled move."""
        rt, m = self.rt, self.marking
        moves: list[tuple[str, str]] = []
        for node_id in sorted(m.tokens):
            if not m.tokens[node_id]:
                continue
            node = rt.node[node_id]
            if node.kind is NodeKind.END_EVENT:
                moves.append(("end", node_id))
            elif node.kind is NodeKind.START_EVENT:
                moves.append(("pass", node_id))
            elif node.kind is NodeKind.TASK:
                if node.task_variant is TaskVariant.SEND:
                    info = rt.act_of(node)
                    if info is not None and info[2].startswith("rv-") and m.revokes >= rt.revoke_bound:
                        continue  # revoke budget exhausted, token waits
                    moves.append(("send", node_id))
                elif node.task_variant is TaskVariant.RECEIVE:
                    if rt.deliverable_to(node) and m.mailbox[node.message] > 0:
                        moves.append(("receive", node_id))
                else:
                    moves.append(("pass", node_id))
            elif node.kind is NodeKind.INTERMEDIATE_CATCH_EVENT:
                if rt.deliverable_to(node) and m.mailbox[node.message] > 0:
                    moves.append(("receive", node_id))
            elif node.kind is NodeKind.GATEWAY:
                if node.gateway_variant is GatewayVariant.PARALLEL:
                    incoming = sum(
                        1 for p in rt.graph.pools for f in p.sequence_flows if f.target == node_id
                    )
                    if m.tokens[node_id] >= max(1, incoming):
                        moves.append(("parallel", node_id))
                else:
                    options = self._gateway_options(node_id)
                    if len(options) == 1:
                        moves.append(("choice:" + options[0].flow.id, node_id))
        wanted = rt.wanted_messages(m)
        for node in rt.message_starts:
            if (
                rt.deliverable_to(node)
                and m.mailbox[node.message] > 0
                and node.message not in wanted
            ):
                moves.append(("msgstart", node.id))
        return moves

    def _gateway_options(self, node_id: str) -> list[_Choice]:
        rt, m = self.rt, self.marking
        node = rt.node[node_id]
        options = []
        for order, flow in enumerate(rt.outgoing[node_id]):
            if node.gateway_variant is GatewayVariant.EVENT_BASED:
                target = rt.node[flow.target]
                if rt.deliverable_to(target) and m.mailbox[target.message] > 0:
                    options.append(_Choice(node_id, flow, True, order))
            else:
                if rt.edge_legal(flow, m):
                    options.append(_Choice(node_id, flow, False, order))
        return options

    def _apply_forced(self, kind: str, node_id: str) -> None:
        rt, m = self.rt, self.marking
        node = rt.node[node_id]
        if kind == "end":
            m.tokens[node_id] -= 1
            if not m.tokens[node_id]:
                del m.tokens[node_id]
        elif kind == "pass":
            self._advance(node_id)
        elif kind == "send":
            self._emit(node)
            m.mailbox[node.message] += 1
            self._advance(node_id)
        elif kind == "receive":
            m.mailbox[node.message] -= 1
            if not m.mailbox[node.message]:
                del m.mailbox[node.message]
            self._advance(node_id)
        elif kind == "msgstart":
            m.mailbox[node.message] -= 1
            if not m.mailbox[node.message]:
                del m.mailbox[node.message]
            m.tokens[node_id] += 1
        elif kind == "parallel":
            incoming = sum(
                1 for p in rt.graph.pools for f in p.sequence_flows if f.target == node_id
            )
            m.tokens[node_id] -= max(1, incoming)
            if not m.tokens[node_id]:
                del m.tokens[node_id]
            for flow in rt.outgoing[node_id]:
                m.tokens[flow.target] += 1
        elif kind.startswith("choice:"):
            flow_id = kind.split(":", 1)[1]
            flow = next(f for f in rt.outgoing[node_id] if f.id == flow_id)
            self.apply_choice(_Choice(node_id, flow, rt.node[node_id].gateway_variant is GatewayVariant.EVENT_BASED, 0))

    def apply_choice(self, choice: _Choice) -> None:
        rt, m = self.rt, self.marking
        if rt.is_loop_edge(choice.flow):
            m.loop_counts[choice.flow.id] += 1
        if choice.via_event_gateway:
            catch = rt.node[choice.flow.target]
            m.mailbox[catch.message] -= 1
            if not m.mailbox[catch.message]:
                del m.mailbox[catch.message]
            m.tokens[choice.node_id] -= 1
            if not m.tokens[choice.node_id]:
                del m.tokens[choice.node_id]
            follow = rt.outgoing[catch.id]
            m.tokens[follow[0].target if follow else catch.id] += 1
        else:
            self._move_token(choice.node_id, choice.flow.target)

    def settle(self, max_steps: int) -> list[_Choice]:
        """Fire decision-free moves until only genuine choices remain."""
        steps = 0
        while True:
            moves = self._forced_moves()
            if not moves:
                break
            kind, node_id = moves[0]
            self._apply_forced(kind, node_id)
            steps += 1
            if steps > max_steps:
                raise BoundExceededError(f"no quiescence within {max_steps} moves")
        choices: list[_Choice] = []
        for node_id in sorted(self.marking.tokens):
            if not self.marking.tokens[node_id]:
                continue
            node = self.rt.node[node_id]
            if node.kind is NodeKind.GATEWAY and node.gateway_variant is not GatewayVariant.PARALLEL:
                options = self._gateway_options(node_id)
                if len(options) > 1:
                    choices.extend(options)
        return choices

    def live_tokens(self) -> bool:
        return any(count > 0 for count in self.marking.tokens.values())

    def blocked_only_by_budgets(self) -> bool:
        """True when relaxing the bounds would enable some move."""
        rt, m = self.rt, self.marking
        for node_id, count in m.tokens.items():
            if not count:
                continue
            node = rt.node[node_id]
            if node.kind is NodeKind.TASK and node.task_variant is TaskVariant.SEND:
                return True  # only a revoke budget can block a send
            if node.kind is NodeKind.GATEWAY and node.gateway_variant is GatewayVariant.EXCLUSIVE:
                legal_now = [f for f in rt.outgoing[node_id] if rt.edge_legal(f, m)]
                legal_free = [f for f in rt.outgoing[node_id] if rt.edge_legal(f, m, ignore_budgets=True)]
                if legal_free and not legal_now:
                    return True
        return False


@dataclass
class DeadlockWitness:
    trace: SimTrace
    marking: str


@dataclass
class ExplorationResult:
    traces: list[SimTrace]
    deadlocks: list[DeadlockWitness]
    bound_pruned: int


_DEFAULT_MAX_STEPS = 20000


def explore(
    graph: BpmnGraph,
    loop_bound: int = 2,
    revoke_bound: int = 2,
    max_steps: int = _DEFAULT_MAX_STEPS,
) -> ExplorationResult:
    """Exhaustively explore every choice resolution within the bounds."""
    rt = _Runtime(graph, loop_bound, revoke_bound)
    traces: set[SimTrace] = set()
    deadlocks: list[DeadlockWitness] = []
    seen_deadlocks: set[tuple] = set()
    pruned = 0
    stack = [_Run(rt)]
    while stack:
        run = stack.pop()
        choices = run.settle(max_steps)
        if not choices:
            if run.live_tokens():
                if run.blocked_only_by_budgets():
                    pruned += 1
                else:
                    key = run.marking.observable()
                    if key not in seen_deadlocks:
                        seen_deadlocks.add(key)
                        deadlocks.append(
                            DeadlockWitness(tuple(run.trace), run.marking.describe())
                        )
            else:
                traces.add(tuple(run.trace))
            continue
        for choice in reversed(choices):
            branch = run.clone()
            branch.apply_choice(choice)
            stack.append(branch)
    ordered = sorted(traces, key=lambda t: [s.act.code for s in t])
    return ExplorationResult(ordered, deadlocks, pruned)


def enumerate_bpmn_traces(
    graph: BpmnGraph, loop_bound: int = 2, revoke_bound: int = 2
) -> list[SimTrace]:
    """All complete traces (every token consumed), deduplicated and sorted."""
    return explore(graph, loop_bound, revoke_bound).traces


def _match_token(rt: _Runtime, token: str, choice: _Choice) -> bool:
    if token == (choice.flow.guard or ""):
        return True
    if token == rt.guard_base(choice.flow):
        return True
    info = rt.next_act(choice.flow)
    if info is None:
        return False
    act, tk, raw = info
    return token in (raw, act.code, f"{raw}({tk})", f"{act.code}({tk})")


@dataclass
class ScriptedRun:
    status: str  # "completed" | "awaiting_choice" | "deadlock" | "bound_exceeded"
    trace: SimTrace
    tokens: tuple
    mailbox: tuple
    enabled_sends: frozenset[tuple[str, str]]  # (act code, transaction id)


def run_scripted(
    graph: BpmnGraph,
    tokens: Iterable[str],
    loop_bound: int = 2,
    revoke_bound: int = 2,
    max_steps: int = _DEFAULT_MAX_STEPS,
) -> ScriptedRun:
    """Drive a run by a script of choice labels, stopping when it runs out.

    Script entries are consumed at exclusive-gateway decisions (and at
    event-based gateways with several deliverable messages). An entry may
    name the branch's guard label or the act the branch leads to sending.
    """
    rt = _Runtime(graph, loop_bound, revoke_bound)
    script = list(tokens)
    cursor = 0
    run = _Run(rt)
    while True:
        choices = run.settle(max_steps)
        if not choices:
            if not run.live_tokens():
                status = "completed"
            elif run.blocked_only_by_budgets():
                status = "bound_exceeded"
            else:
                status = "deadlock"
            break
        if cursor >= len(script):
            status = "awaiting_choice"
            break
        token = script[cursor]
        matches = [c for c in choices if _match_token(rt, token, c)]
        if not matches:
            available = sorted({c.label() for c in choices})
            raise ScriptError(f"script entry {token!r} matches none of {available}")
        cursor += 1
        run.apply_choice(matches[0])
    if status == "completed" and cursor < len(script):
        raise ScriptError(f"unused script entries from {script[cursor]!r} on")
    observable_tokens, observable_mail = run.marking.observable()
    return ScriptedRun(
        status=status,
        trace=tuple(run.trace),
        tokens=observable_tokens,
        mailbox=observable_mail,
        enabled_sends=enabled_send_acts(rt, run.marking),
    )


def enabled_send_acts(rt: _Runtime, marking: _Marking) -> frozenset[tuple[str, str]]:
    """Send acts reachable from a marking through decision moves only."""
    results: set[tuple[str, str]] = set()
    seen: set[tuple] = set()
    frontier = [marking]
    while frontier:
        current = frontier.pop()
        key = current.observable()
        if key in seen:
            continue
        seen.add(key)
        probe = _Run(rt, current.clone())
        for node_id, count in current.tokens.items():
            if not count:
                continue
            node = rt.node[node_id]
            if node.kind is NodeKind.TASK and node.task_variant is TaskVariant.SEND:
                info = rt.act_of(node)
                if info is not None:
                    results.add((info[2], info[1]))
        moved = False
        for kind, node_id in probe._forced_moves():
            if kind == "send":
                continue
            branch = _Run(rt, current.clone())
            branch._apply_forced(kind, node_id)
            frontier.append(branch.marking)
            moved = True
            break
        if moved:
            continue
        for node_id, count in sorted(current.tokens.items()):
            if not count:
                continue
            node = rt.node[node_id]
            if node.kind is NodeKind.GATEWAY and node.gateway_variant is not GatewayVariant.PARALLEL:
                probe2 = _Run(rt, current.clone())
                for choice in probe2._gateway_options(node_id):
                    branch = _Run(rt, current.clone())
                    branch.apply_choice(choice)
                    frontier.append(branch.marking)
    return frozenset(results)


def simulate(
    graph: BpmnGraph,
    policy: ChoicePolicy,
    loop_bound: int = 2,
    revoke_bound: int = 2,
    max_steps: int = _DEFAULT_MAX_STEPS,
) -> SimTrace:
    """Run the collaboration once, resolving choices per the policy."""
    if policy.strategy == "scripted":
        outcome = run_scripted(graph, policy.script, loop_bound, revoke_bound, max_steps)
        if outcome.status == "completed":
            return outcome.trace
        if outcome.status == "awaiting_choice":
            raise ScriptError("script exhausted before the run completed")
        if outcome.status == "deadlock":
            raise DeadlockError(trace_line(outcome.trace))
        raise BoundExceededError(trace_line(outcome.trace))

    rt = _Runtime(graph, loop_bound, revoke_bound)
    rng = random.Random(policy.seed) if policy.strategy == "random" else None
    run = _Run(rt)
    while True:
        choices = run.settle(max_steps)
        if not choices:
            if not run.live_tokens():
                return tuple(run.trace)
            if run.blocked_only_by_budgets():
                raise BoundExceededError(trace_line(tuple(run.trace)))
            raise DeadlockError(
                f"stuck after {trace_line(tuple(run.trace))}: {run.marking.describe()}"
            )
        if rng is None:
            choice = min(choices, key=lambda c: (c.node_id, c.order))
        else:
            choice = rng.choice(sorted(choices, key=lambda c: (c.node_id, c.order)))
        run.apply_choice(choice)


def project_acts(trace: SimTrace, tk: str) -> CtpTrace:
    """Restrict a trace to one transaction kind's (party, act) steps."""
    return tuple((s.party, s.act) for s in trace if s.tk == tk)


def machine_accepts(machine: CtpMachine, acts: CtpTrace) -> bool:
    """Whether a projected word is a concatenation of accepted runs.

    A fresh request arriving in a terminal configuration starts the next
    instance of the same transaction kind (loops initiate a child several
    times in sequence).
    """
    config = machine.initial()
    for party, act in acts:
        try:
            config = step(machine, config, party, act)
            continue
        except CtpError:
            pass
        if (
            is_terminal(machine, config)
            and party is Party.INITIATOR
            and act is ActKind.REQUEST
        ):
            try:
                config = step(machine, machine.initial(), party, act)
                continue
            except CtpError:
                return False
        return False
    return is_terminal(machine, config) or config == machine.initial()


@dataclass
class ConformanceReport:
    level: PatternLevel
    loop_bound: int
    revoke_bound: int
    bpmn_trace_count: int
    ctp_trace_count: int
    missing: list[str] = field(default_factory=list)
    unexpected: list[str] = field(default_factory=list)
    traces_ok: bool = True
    deadlock_free: bool = True
    deadlock_witness: str | None = None
    revocation_ok: bool | None = None

    @property
    def passed(self) -> bool:
        checks = [self.traces_ok, self.deadlock_free]
        if self.revocation_ok is not None:
            checks.append(self.revocation_ok)
        return all(checks)

    def to_text(self) -> str:
        lines = [
            f"level: {self.level.value}",
            f"bounds: loop={self.loop_bound} revoke={self.revoke_bound}",
        ]
        if self.level is PatternLevel.COMPLETE:
            relation = "<=" if self.traces_ok else "!<="
            lines.append(
                f"traces: {self.bpmn_trace_count} {relation} {self.ctp_trace_count} traces (diagram within machine)"
            )
        else:
            relation = "=" if self.traces_ok else "!="
            lines.append(f"traces: {self.bpmn_trace_count} {relation} {self.ctp_trace_count} traces")
        for label, items in (("missing", self.missing), ("unexpected", self.unexpected)):
            for item in items[:5]:
                lines.append(f"  {label}: {item}")
        lines.append(f"deadlock-free: {'yes' if self.deadlock_free else 'NO'}")
        if self.deadlock_witness:
            lines.append(f"  witness: {self.deadlock_witness}")
        if self.revocation_ok is not None:
            lines.append(f"revocation semantics: {'ok' if self.revocation_ok else 'BROKEN'}")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "level": self.level.value,
            "loop_bound": self.loop_bound,
            "revoke_bound": self.revoke_bound,
            "bpmn_traces": self.bpmn_trace_count,
            "ctp_traces": self.ctp_trace_count,
            "missing": self.missing,
            "unexpected": self.unexpected,
            "traces_ok": self.traces_ok,
            "deadlock_free": self.deadlock_free,
            "deadlock_witness": self.deadlock_witness,
            "revocation_ok": self.revocation_ok,
            "passed": self.passed,
        }


def check_conformance(
    graph: BpmnGraph,
    level: PatternLevel,
    loop_bound: int = 2,
    revoke_bound: int = 2,
) -> ConformanceReport:
    """Compare a single-transaction block against the transaction machine.

    Basic and standard blocks must produce exactly the machine's trace set
    at equal bounds; complete blocks must stay within it (the block is a
    deliberately turn-based refinement) and support revocation after the
    accept: allow leads to a state offering declare and revoke-declare,
    refuse restores the pre-revoke marking.
    """
    machine = build_ctp(level)
    result = explore(graph, loop_bound, revoke_bound)
    bpmn_lines = sorted({format_trace(project_acts(t, _single_tk(graph))) for t in result.traces})
    ctp_lines = sorted({format_trace(t) for t in enumerate_traces(machine, loop_bound, revoke_bound)})
    bpmn_set, ctp_set = set(bpmn_lines), set(ctp_lines)

    report = ConformanceReport(
        level=level,
        loop_bound=loop_bound,
        revoke_bound=revoke_bound,
        bpmn_trace_count=len(bpmn_lines),
        ctp_trace_count=len(ctp_lines),
        missing=sorted(ctp_set - bpmn_set),
        unexpected=sorted(bpmn_set - ctp_set),
    )
    if level is PatternLevel.COMPLETE:
        report.traces_ok = not report.unexpected
    else:
        report.traces_ok = bpmn_set == ctp_set
    report.deadlock_free = not result.deadlocks
    if result.deadlocks:
        witness = result.deadlocks[0]
        report.deadlock_witness = f"{trace_line(witness.trace)} [{witness.marking}]"

    if level is PatternLevel.COMPLETE:
        report.revocation_ok = _check_revocation(graph, loop_bound, revoke_bound)
    return report


def _single_tk(graph: BpmnGraph) -> str:
    ids = {info[1] for m in graph.messages if (info := parse_act(m.name))}
    if len(ids) != 1:
        raise ValueError(f"expected a single-transaction block, found {sorted(ids)}")
    return ids.pop()


def _check_revocation(graph: BpmnGraph, loop_bound: int, revoke_bound: int) -> bool:
    tk = _single_tk(graph)
    # The scripted scenario itself needs one revoke plus a revoke option at
    # the resulting choice, whatever bounds the surrounding check runs at.
    loop_bound = max(loop_bound, 1)
    revoke_bound = max(revoke_bound, 2)
    to_accept = ["promise", "declare", "accept"]
    allowed = run_scripted(graph, to_accept + ["revoke-accept", "allow"], loop_bound, revoke_bound)
    if allowed.status != "awaiting_choice":
        return False
    sends = {code for code, tk_id in allowed.enabled_sends if tk_id == tk}
    if not {"da", "rv-da"} <= sends:
        return False
    baseline = run_scripted(graph, to_accept, loop_bound, revoke_bound)
    refused = run_scripted(graph, to_accept + ["revoke-accept", "refuse"], loop_bound, revoke_bound)
    return (
        baseline.status == "awaiting_choice"
        and refused.status == "awaiting_choice"
        and baseline.tokens == refused.tokens
        and baseline.mailbox == refused.mailbox
    )
