"""DEMO model content: transaction kinds, response links, and their DSL.

The textual form is line oriented, with ``#`` starting a comment:

    transaction TK01 "patient problem diagnosing" initiator CA00 executor A01
    (TK01/pm) -> [TK02/rq] 0..1
    (TK01/pm) -> [TK03/rq] 1..*

A response link says: when the parent transaction reaches the named event,
initiate the child transaction, the given number of times. Links must form a
forest over the declared transaction kinds. A structurally equivalent JSON
form is accepted for ``.json`` inputs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .ctp import CtpState
from .diagnostics import Diagnostic

__all__ = [
    "CardinalityRange",
    "DemoModel",
    "EVENT_CODES",
    "ParseResult",
    "ResponseLink",
    "TransactionKind",
    "model_to_json",
    "parse_cardinality",
    "parse_model",
    "parse_model_json",
    "roots",
    "serialize_model",
    "validate_model",
]

# Event codes usable on the parent side of a response link.
EVENT_CODES: dict[str, CtpState] = {
    "rq": CtpState.REQUESTED,
    "pm": CtpState.PROMISED,
    "da": CtpState.DECLARED,
    "ac": CtpState.ACCEPTED,
    "dc": CtpState.DECLINED,
    "rj": CtpState.REJECTED,
}

_CODE_BY_EVENT = {state: code for code, state in EVENT_CODES.items()}

_ID_PATTERN = r"[A-Za-z]+\d+"
_TX_RE = re.compile(
    rf'^transaction\s+({_ID_PATTERN})\s+"([^"]*)"\s+initiator\s+(\S+)\s+executor\s+(\S+)$'
)
_LINK_RE = re.compile(
    rf"^\(({_ID_PATTERN})/(rq|pm|da|ac|dc|rj)\)\s*->\s*\[({_ID_PATTERN})/rq\]\s+(\d+)\.\.(\d+|\*)$"
)


@dataclass(frozen=True)
class CardinalityRange:
    """How many child transactions a response link may initiate."""

    low: int
    high: int | None  # None means unbounded

    def __str__(self) -> str:
        high = "*" if self.high is None else str(self.high)
        return f"{self.low}..{high}"

    @property
    def optional(self) -> bool:
        return self.low == 0

    @property
    def repeatable(self) -> bool:
        return self.high is None or self.high > 1


def parse_cardinality(text: str) -> CardinalityRange | None:
    match = re.fullmatch(r"(\d+)\.\.(\d+|\*)", text.strip())
    if not match:
        return None
    low = int(match.group(1))
    high = None if match.group(2) == "*" else int(match.group(2))
    return CardinalityRange(low, high)


@dataclass(frozen=True)
class TransactionKind:
    id: str
    name: str
    initiator_role: str
    executor_role: str


@dataclass(frozen=True)
class ResponseLink:
    parent_tk: str
    parent_event: CtpState
    child_tk: str
    cardinality: CardinalityRange
    # Only initiations are modeled, so the child act is always the request.
    child_act: str = "rq"

    @property
    def event_code(self) -> str:
        return _CODE_BY_EVENT[self.parent_event]


@dataclass(frozen=True)
class DemoModel:
    transaction_kinds: tuple[TransactionKind, ...] = ()
    response_links: tuple[ResponseLink, ...] = ()

    def kind(self, tk_id: str) -> TransactionKind:
        for tk in self.transaction_kinds:
            if tk.id == tk_id:
                return tk
        raise KeyError(f"unknown transaction kind {tk_id!r}")

    def links_of(self, tk_id: str) -> tuple[ResponseLink, ...]:
        return tuple(l for l in self.response_links if l.parent_tk == tk_id)


@dataclass
class ParseResult:
    model: DemoModel | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.model is not None and not self.diagnostics


def parse_model(text: str) -> ParseResult:
    """Parse the DSL; returns either a model or a nonempty diagnostics list."""
    kinds: list[TransactionKind] = []
    link_rows: list[tuple[ResponseLink, str]] = []
    diagnostics: list[Diagnostic] = []
    seen_ids: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        locus = f"{lineno}:1"
        tx = _TX_RE.match(line)
        if tx:
            tk_id, name, initiator, executor = tx.groups()
            if tk_id in seen_ids:
                diagnostics.append(
                    Diagnostic("DUP_ID", f"transaction {tk_id} declared twice", locus)
                )
                continue
            seen_ids.add(tk_id)
            kinds.append(TransactionKind(tk_id, name, initiator, executor))
            continue
        link = _LINK_RE.match(line)
        if link:
            parent, event, child, low, high = link.groups()
            card = CardinalityRange(int(low), None if high == "*" else int(high))
            if card.high is not None and (card.low > card.high or card.high < 1):
                diagnostics.append(
                    Diagnostic("CARD", f"bad cardinality range {card}", locus)
                )
                continue
            link_rows.append(
                (ResponseLink(parent, EVENT_CODES[event], child, card), locus)
            )
            continue
        diagnostics.append(Diagnostic("SYNTAX", f"cannot parse line: {line}", locus))

    links = []
    for link, locus in link_rows:
        missing = [tk for tk in (link.parent_tk, link.child_tk) if tk not in seen_ids]
        if missing:
            diagnostics.append(
                Diagnostic("REF", f"link names undeclared transaction {missing[0]}", locus)
            )
            continue
        links.append(link)

    if diagnostics:
        return ParseResult(None, diagnostics)
    model = DemoModel(tuple(kinds), tuple(links))
    structural = validate_model(model)
    if structural:
        return ParseResult(None, structural)
    return ParseResult(model)


def parse_model_json(text: str) -> ParseResult:
    """Parse the JSON form: objects ``transactions`` and ``links``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        return ParseResult(None, [Diagnostic("SYNTAX", f"bad JSON: {exc}", f"{exc.lineno}:{exc.colno}")])

    diagnostics: list[Diagnostic] = []
    kinds: list[TransactionKind] = []
    seen: set[str] = set()
    for row in data.get("transactions", []):
        tk_id = row.get("id", "")
        if not re.fullmatch(_ID_PATTERN, tk_id):
            diagnostics.append(Diagnostic("SYNTAX", f"bad transaction id {tk_id!r}"))
            continue
        if tk_id in seen:
            diagnostics.append(Diagnostic("DUP_ID", f"transaction {tk_id} declared twice"))
            continue
        seen.add(tk_id)
        kinds.append(
            TransactionKind(
                tk_id,
                row.get("name", tk_id),
                row.get("initiator_role", ""),
                row.get("executor_role", ""),
            )
        )

    links: list[ResponseLink] = []
    for row in data.get("links", []):
        event = row.get("parent_event", "")
        state = EVENT_CODES.get(event)
        if state is None:
            try:
                state = CtpState(event)
            except ValueError:
                state = None
        if state is None or state not in _CODE_BY_EVENT:
            diagnostics.append(Diagnostic("SYNTAX", f"bad parent event {event!r}"))
            continue
        card = parse_cardinality(str(row.get("cardinality", "")))
        if card is None or (card.high is not None and (card.low > card.high or card.high < 1)):
            diagnostics.append(
                Diagnostic("CARD", f"bad cardinality {row.get('cardinality')!r}")
            )
            continue
        parent, child = row.get("parent_tk", ""), row.get("child_tk", "")
        missing = [tk for tk in (parent, child) if tk not in seen]
        if missing:
            diagnostics.append(
                Diagnostic("REF", f"link names undeclared transaction {missing[0]}")
            )
            continue
        links.append(ResponseLink(parent, state, child, card))

    if diagnostics:
        return ParseResult(None, diagnostics)
    model = DemoModel(tuple(kinds), tuple(links))
    structural = validate_model(model)
    if structural:
        return ParseResult(None, structural)
    return ParseResult(model)


def validate_model(model: DemoModel) -> list[Diagnostic]:
    """Check the forest invariants; one diagnostic per violation.

    Rule ids: FOREST (a child with several parents), ACYCLIC, REF (link
    endpoint not declared), CARD (inverted or empty range).
    """
    diagnostics: list[Diagnostic] = []
    declared = {tk.id for tk in model.transaction_kinds}

    for link in model.response_links:
        locus = f"link ({link.parent_tk}/{link.event_code})->[{link.child_tk}/rq]"
        for endpoint in (link.parent_tk, link.child_tk):
            if endpoint not in declared:
                diagnostics.append(
                    Diagnostic("REF", f"undeclared transaction {endpoint}", locus)
                )
        card = link.cardinality
        if card.low < 0 or (card.high is not None and (card.high < 1 or card.low > card.high)):
            diagnostics.append(Diagnostic("CARD", f"bad cardinality range {card}", locus))

    child_counts: dict[str, int] = {}
    for link in model.response_links:
        child_counts[link.child_tk] = child_counts.get(link.child_tk, 0) + 1
    for child, count in child_counts.items():
        if count > 1:
            diagnostics.append(
                Diagnostic("FOREST", f"{child} is the child of {count} response links", child)
            )

    parents = {l.child_tk: l.parent_tk for l in model.response_links}
    reported: set[str] = set()
    for start in parents:
        node, seen = start, []
        while node in parents:
            if node in seen:
                cycle = seen[seen.index(node):]
                key = min(cycle)
                if key not in reported:
                    reported.add(key)
                    diagnostics.append(
                        Diagnostic("ACYCLIC", "response links form a cycle: " + "->".join(cycle + [node]), key)
                    )
                break
            seen.append(node)
            node = parents[node]
    return diagnostics


def roots(model: DemoModel) -> list[TransactionKind]:
    """Transaction kinds that are nobody's child, in declaration order."""
    children = {l.child_tk for l in model.response_links}
    return [tk for tk in model.transaction_kinds if tk.id not in children]


def serialize_model(model: DemoModel) -> str:
    """Canonical DSL text; re-parsing yields a structurally equal model."""
    lines = [
        f'transaction {tk.id} "{tk.name}" initiator {tk.initiator_role} executor {tk.executor_role}'
        for tk in model.transaction_kinds
    ]
    lines.extend(
        f"({l.parent_tk}/{l.event_code}) -> [{l.child_tk}/rq] {l.cardinality}"
        for l in model.response_links
    )
    return "\n".join(lines) + ("\n" if lines else "")


def model_to_json(model: DemoModel) -> str:
    data = {
        "transactions": [
            {
                "id": tk.id,
                "name": tk.name,
                "initiator_role": tk.initiator_role,
                "executor_role": tk.executor_role,
            }
            for tk in model.transaction_kinds
        ],
        "links": [
            {
                "parent_tk": l.parent_tk,
                "parent_event": l.parent_event.value,
                "child_tk": l.child_tk,
                "child_act": l.child_act,
                "cardinality": str(l.cardinality),
            }
            for l in model.response_links
        ],
    }
    return json.dumps(data, indent=2) + "\n"
