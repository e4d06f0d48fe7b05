from __future__ import annotations

from pathlib import Path

import pytest

from demo2bpmn.ctp import PatternLevel
from demo2bpmn.expand import ExpandOptions, expand_transaction
from demo2bpmn.model import DemoModel, TransactionKind, parse_model

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def poligyn_text() -> str:
    return (DATA_DIR / "poligyn.demo").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def poligyn_model(poligyn_text) -> DemoModel:
    result = parse_model(poligyn_text)
    assert result.ok, result.diagnostics
    return result.model


@pytest.fixture(scope="session")
def tk01() -> TransactionKind:
    return TransactionKind("TK01", "patient problem diagnosing", "CA00", "A01")


@pytest.fixture(scope="session")
def basic_block(tk01):
    return expand_transaction(tk01, ExpandOptions(PatternLevel.BASIC))


@pytest.fixture(scope="session")
def standard_block(tk01):
    return expand_transaction(tk01, ExpandOptions(PatternLevel.STANDARD))


@pytest.fixture(scope="session")
def complete_block(tk01):
    return expand_transaction(tk01, ExpandOptions(PatternLevel.COMPLETE))
