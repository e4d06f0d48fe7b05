"""Executable semantics of the DEMO transaction pattern.

A transaction runs between two parties, the initiator and the executor, and
its state moves through coordination events caused by coordination acts.
Three fidelity levels are supported:

* ``basic``: the success path request, promise, declare, accept.
* ``standard``: adds the decline and reject branches, an adapted re-request
  after a decline, an adapted re-declare after a reject, and the explicit
  quit/stop exits that let either branch terminate.
* ``complete``: removes quit/stop and instead lets the performer of any
  already-performed core act revoke it; the counterparty answers with allow
  (roll back to the act's rollback target) or refuse (resume where the
  transaction was). At this level ``accepted`` is quasi-terminal: the
  transaction may end there, but revocation is still possible.

Machines and configurations are immutable values; :func:`step` returns a
fresh configuration, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, unique

__all__ = [
    "ActKind",
    "Configuration",
    "CtpError",
    "CtpMachine",
    "CtpState",
    "InvalidActError",
    "Party",
    "PatternLevel",
    "PendingRevokeError",
    "Trace",
    "act_by_code",
    "build_ctp",
    "enumerate_traces",
    "format_trace",
    "performer_of",
]


@unique
class PatternLevel(Enum):
    BASIC = "basic"
    STANDARD = "standard"
    COMPLETE = "complete"


@unique
class Party(Enum):
    INITIATOR = "initiator"
    EXECUTOR = "executor"

    @property
    def other(self) -> Party:
        return Party.EXECUTOR if self is Party.INITIATOR else Party.INITIATOR

    @property
    def code(self) -> str:
        return "i" if self is Party.INITIATOR else "e"


@unique
class ActKind(Enum):
    """Coordination acts, with their fixed serialization codes."""

    REQUEST = "rq"
    PROMISE = "pm"
    DECLINE = "dc"
    DECLARE = "da"
    ACCEPT = "ac"
    REJECT = "rj"
    QUIT = "qt"
    STOP = "st"
    REVOKE_REQUEST = "rv-rq"
    REVOKE_PROMISE = "rv-pm"
    REVOKE_DECLARE = "rv-da"
    REVOKE_ACCEPT = "rv-ac"
    ALLOW = "al"
    REFUSE = "rf"

    @property
    def code(self) -> str:
        return self.value


_ACT_BY_CODE = {act.value: act for act in ActKind}


def act_by_code(code: str) -> ActKind:
    try:
        return _ACT_BY_CODE[code]
    except KeyError:
        raise KeyError(f"unknown act code {code!r}") from None


@unique
class CtpState(Enum):
    INITIATED = "initiated"
    REQUESTED = "requested"
    PROMISED = "promised"
    DECLARED = "declared"
    ACCEPTED = "accepted"
    DECLINED = "declined"
    REJECTED = "rejected"
    QUIT = "quit"
    STOPPED = "stopped"


# The four core acts in their causal order; occurrence flags track these only.
CORE_ACTS: tuple[ActKind, ...] = (
    ActKind.REQUEST,
    ActKind.PROMISE,
    ActKind.DECLARE,
    ActKind.ACCEPT,
)

REVOKE_ACTS: tuple[ActKind, ...] = (
    ActKind.REVOKE_REQUEST,
    ActKind.REVOKE_PROMISE,
    ActKind.REVOKE_DECLARE,
    ActKind.REVOKE_ACCEPT,
)

REVOKE_BASE: dict[ActKind, ActKind] = {
    ActKind.REVOKE_REQUEST: ActKind.REQUEST,
    ActKind.REVOKE_PROMISE: ActKind.PROMISE,
    ActKind.REVOKE_DECLARE: ActKind.DECLARE,
    ActKind.REVOKE_ACCEPT: ActKind.ACCEPT,
}

# Where an allowed revoke rolls the transaction back to.
ROLLBACK_TARGET: dict[ActKind, CtpState] = {
    ActKind.REVOKE_REQUEST: CtpState.INITIATED,
    ActKind.REVOKE_PROMISE: CtpState.REQUESTED,
    ActKind.REVOKE_DECLARE: CtpState.PROMISED,
    ActKind.REVOKE_ACCEPT: CtpState.REJECTED,
}

_PERFORMER: dict[ActKind, Party] = {
    ActKind.REQUEST: Party.INITIATOR,
    ActKind.ACCEPT: Party.INITIATOR,
    ActKind.REJECT: Party.INITIATOR,
    ActKind.QUIT: Party.INITIATOR,
    ActKind.REVOKE_REQUEST: Party.INITIATOR,
    ActKind.REVOKE_ACCEPT: Party.INITIATOR,
    ActKind.PROMISE: Party.EXECUTOR,
    ActKind.DECLINE: Party.EXECUTOR,
    ActKind.DECLARE: Party.EXECUTOR,
    ActKind.STOP: Party.EXECUTOR,
    ActKind.REVOKE_PROMISE: Party.EXECUTOR,
    ActKind.REVOKE_DECLARE: Party.EXECUTOR,
}


def performer_of(act: ActKind) -> Party:
    """Fixed performer of an act; allow/refuse have none (context decides)."""
    try:
        return _PERFORMER[act]
    except KeyError:
        raise KeyError(f"{act.code} is performed by the counterparty of a pending revoke") from None


_TERMINAL_STATES = frozenset({CtpState.ACCEPTED, CtpState.QUIT, CtpState.STOPPED})

_BASIC_EDGES: dict[tuple[CtpState, Party, ActKind], CtpState] = {
    (CtpState.INITIATED, Party.INITIATOR, ActKind.REQUEST): CtpState.REQUESTED,
    (CtpState.REQUESTED, Party.EXECUTOR, ActKind.PROMISE): CtpState.PROMISED,
    (CtpState.PROMISED, Party.EXECUTOR, ActKind.DECLARE): CtpState.DECLARED,
    (CtpState.DECLARED, Party.INITIATOR, ActKind.ACCEPT): CtpState.ACCEPTED,
}

_STANDARD_ONLY_EDGES: dict[tuple[CtpState, Party, ActKind], CtpState] = {
    (CtpState.REQUESTED, Party.EXECUTOR, ActKind.DECLINE): CtpState.DECLINED,
    (CtpState.DECLINED, Party.INITIATOR, ActKind.REQUEST): CtpState.REQUESTED,
    (CtpState.DECLARED, Party.INITIATOR, ActKind.REJECT): CtpState.REJECTED,
    (CtpState.REJECTED, Party.EXECUTOR, ActKind.DECLARE): CtpState.DECLARED,
}

_EXIT_EDGES: dict[tuple[CtpState, Party, ActKind], CtpState] = {
    (CtpState.DECLINED, Party.INITIATOR, ActKind.QUIT): CtpState.QUIT,
    (CtpState.REJECTED, Party.EXECUTOR, ActKind.STOP): CtpState.STOPPED,
}

_LEVEL_EDGES: dict[PatternLevel, dict[tuple[CtpState, Party, ActKind], CtpState]] = {
    PatternLevel.BASIC: dict(_BASIC_EDGES),
    PatternLevel.STANDARD: {**_BASIC_EDGES, **_STANDARD_ONLY_EDGES, **_EXIT_EDGES},
    # Quit/stop disappear at the complete level: every reversal goes through a
    # revocation protocol instead.
    PatternLevel.COMPLETE: {**_BASIC_EDGES, **_STANDARD_ONLY_EDGES},
}


class CtpError(Exception):
    """Base class for transaction-machine errors."""


class InvalidActError(CtpError):
    """No transition matches the (configuration, party, act) triple."""


class PendingRevokeError(CtpError):
    """A non-revoke-protocol act was attempted while a revoke is in flight."""


@dataclass(frozen=True)
class Configuration:
    """A point in a transaction's life.

    ``occurred`` records which core acts have been performed and not rolled
    back. While a revoke is pending, ``state`` holds the state the
    transaction resumes to if the revoke is refused. ``revoke_count`` is
    bookkeeping only and excluded from equality, so a refused revoke returns
    a configuration equal to the pre-revoke one.
    """

    state: CtpState = CtpState.INITIATED
    occurred: frozenset[ActKind] = frozenset()
    pending_revoke: ActKind | None = None
    revoke_count: int = field(default=0, compare=False)

    def describe(self) -> str:
        flags = ",".join(a.code for a in CORE_ACTS if a in self.occurred)
        text = f"{self.state.value}[{flags}]"
        if self.pending_revoke is not None:
            text += f"?{self.pending_revoke.code}"
        return text


Trace = tuple[tuple[Party, ActKind], ...]


def format_trace(trace: Trace, with_party: bool = False) -> str:
    """Render a trace as short codes joined by a middle dot."""
    if with_party:
        return "·".join(f"{party.code}:{act.code}" for party, act in trace)
    return "·".join(act.code for _party, act in trace)


@dataclass(frozen=True)
class CtpMachine:
    """Transaction machine for one pattern level."""

    level: PatternLevel

    @property
    def rollback_targets(self) -> dict[ActKind, CtpState]:
        return dict(ROLLBACK_TARGET)

    def initial(self) -> Configuration:
        return Configuration()

    def act_alphabet(self) -> frozenset[ActKind]:
        acts = {act for (_s, _p, act) in _LEVEL_EDGES[self.level]}
        if self.level is PatternLevel.COMPLETE:
            acts.update(REVOKE_ACTS)
            acts.update({ActKind.ALLOW, ActKind.REFUSE})
        return frozenset(acts)

    def step(self, config: Configuration, party: Party, act: ActKind) -> Configuration:
        return step(self, config, party, act)

    def enabled_acts(self, config: Configuration) -> frozenset[tuple[Party, ActKind]]:
        return enabled_acts(self, config)

    def is_terminal(self, config: Configuration) -> bool:
        return is_terminal(self, config)

    def states(self) -> frozenset[CtpState]:
        return frozenset(c.state for c in self.reachable_configurations())

    def reachable_configurations(self) -> list[Configuration]:
        """All configurations reachable from the initial one, breadth first."""
        seen: list[Configuration] = []
        frontier = [self.initial()]
        while frontier:
            config = frontier.pop(0)
            if config in seen:
                continue
            seen.append(config)
            for party, act in sorted(self.enabled_acts(config), key=_act_sort_key):
                frontier.append(self.step(config, party, act))
        return seen

    def transition_table(self) -> str:
        """Tab-separated rows (configuration, party, act, successor)."""
        rows = []
        for config in self.reachable_configurations():
            for party, act in sorted(self.enabled_acts(config), key=_act_sort_key):
                succ = self.step(config, party, act)
                rows.append(
                    "\t".join((config.describe(), party.value, act.code, succ.describe()))
                )
        return "\n".join(rows)

    def transition_count(self) -> int:
        return sum(
            len(self.enabled_acts(config)) for config in self.reachable_configurations()
        )


def _act_sort_key(pair: tuple[Party, ActKind]) -> tuple[str, str]:
    party, act = pair
    return (act.code, party.value)


def build_ctp(level: PatternLevel) -> CtpMachine:
    """Build the transaction machine for a pattern level."""
    return CtpMachine(level=level)


def step(machine: CtpMachine, config: Configuration, party: Party, act: ActKind) -> Configuration:
    """Fire one act, returning the successor configuration.

    Raises :class:`InvalidActError` when no transition matches and
    :class:`PendingRevokeError` when a non-protocol act is attempted while a
    revoke is in flight.
    """
    if config.pending_revoke is not None:
        if act not in (ActKind.ALLOW, ActKind.REFUSE):
            raise PendingRevokeError(
                f"{act.code} attempted while {config.pending_revoke.code} is pending"
            )
        responder = performer_of(config.pending_revoke).other
        if party is not responder:
            raise InvalidActError(f"{act.code} must come from the {responder.value}")
        if act is ActKind.REFUSE:
            return replace(config, pending_revoke=None)
        revoked = REVOKE_BASE[config.pending_revoke]
        cut = CORE_ACTS.index(revoked)
        kept = frozenset(a for a in config.occurred if CORE_ACTS.index(a) < cut)
        return replace(
            config,
            state=ROLLBACK_TARGET[config.pending_revoke],
            occurred=kept,
            pending_revoke=None,
        )

    if act in (ActKind.ALLOW, ActKind.REFUSE):
        raise InvalidActError(f"{act.code} requires a pending revoke")

    if act in REVOKE_BASE:
        if machine.level is not PatternLevel.COMPLETE:
            raise InvalidActError(f"{act.code} is not available at level {machine.level.value}")
        if performer_of(act) is not party:
            raise InvalidActError(f"{act.code} is not performed by the {party.value}")
        if REVOKE_BASE[act] not in config.occurred:
            raise InvalidActError(f"{REVOKE_BASE[act].code} has not occurred")
        if config.state in (CtpState.QUIT, CtpState.STOPPED):
            raise InvalidActError(f"no revocation from state {config.state.value}")
        return replace(config, pending_revoke=act, revoke_count=config.revoke_count + 1)

    successor = _LEVEL_EDGES[machine.level].get((config.state, party, act))
    if successor is None:
        raise InvalidActError(
            f"no transition for ({config.state.value}, {party.value}, {act.code})"
            f" at level {machine.level.value}"
        )
    occurred = config.occurred | {act} if act in CORE_ACTS else config.occurred
    return replace(config, state=successor, occurred=occurred)


def enabled_acts(machine: CtpMachine, config: Configuration) -> frozenset[tuple[Party, ActKind]]:
    """Exactly the (party, act) pairs for which :func:`step` succeeds."""
    enabled = set()
    for party in Party:
        for act in ActKind:
            try:
                step(machine, config, party, act)
            except CtpError:
                continue
            enabled.add((party, act))
    return frozenset(enabled)


def is_terminal(machine: CtpMachine, config: Configuration) -> bool:
    return config.state in _TERMINAL_STATES and config.pending_revoke is None


def _resumable(config: Configuration) -> bool:
    # After an allowed revoke of the request the transaction is back at its
    # initial shape; the initiator may simply not re-request, which ends it.
    return (
        config.state is CtpState.INITIATED
        and not config.occurred
        and config.pending_revoke is None
    )


def enumerate_traces(
    machine: CtpMachine, loop_bound: int, revoke_bound: int
) -> list[Trace]:
    """All maximal traces within the given bounds, deduplicated and sorted.

    ``loop_bound`` limits each of the two structural loops (re-request after
    a decline, re-declare after a reject); ``revoke_bound`` limits the total
    number of revokes. Paths that exhaust their budgets before reaching an
    end are dropped. The result is ordered lexicographically by act codes.
    """
    results: set[Trace] = set()
    # The reachable configuration space is tiny; successor computation is not.
    moves_cache: dict[Configuration, list[tuple[Party, ActKind, Configuration]]] = {}

    def moves(config: Configuration) -> list[tuple[Party, ActKind, Configuration]]:
        cached = moves_cache.get(config)
        if cached is None:
            cached = [
                (party, act, step(machine, config, party, act))
                for party, act in sorted(enabled_acts(machine, config), key=_act_sort_key)
            ]
            moves_cache[config] = cached
        return cached

    def walk(config: Configuration, trace: Trace, loops1: int, loops2: int, revokes: int) -> None:
        terminal = is_terminal(machine, config)
        if terminal or (machine.level is PatternLevel.COMPLETE and trace and _resumable(config)):
            results.add(trace)
        if terminal and machine.level is not PatternLevel.COMPLETE:
            return
        for party, act, successor in moves(config):
            n1, n2, nr = loops1, loops2, revokes
            if act is ActKind.REQUEST and config.state is CtpState.DECLINED:
                n1 += 1
                if n1 > loop_bound:
                    continue
            if act is ActKind.DECLARE and config.state is CtpState.REJECTED:
                n2 += 1
                if n2 > loop_bound:
                    continue
            if act in REVOKE_BASE:
                nr += 1
                if nr > revoke_bound:
                    continue
            walk(successor, trace + ((party, act),), n1, n2, nr)

    walk(machine.initial(), (), 0, 0, 0)
    return sorted(results, key=lambda t: [a.code for _p, a in t])
