"""DEMO transaction trees compiled to BPMN collaborations, with a
transaction-pattern state machine as the behavioral oracle."""

from .bpmn import BpmnGraph, to_dot, validate_bpmn
from .bpmn_xml import from_xml, to_xml
from .compose import compose, compose_each, insertion_points
from .ctp import (
    ActKind,
    Configuration,
    CtpMachine,
    CtpState,
    Party,
    PatternLevel,
    build_ctp,
    enumerate_traces,
    format_trace,
)
from .diagnostics import Diagnostic, Severity
from .expand import BlockStats, ExpandOptions, block_stats, expand_transaction
from .model import (
    CardinalityRange,
    DemoModel,
    ResponseLink,
    TransactionKind,
    parse_model,
    parse_model_json,
    roots,
    serialize_model,
    validate_model,
)
from .simulate import (
    ChoicePolicy,
    ConformanceReport,
    check_conformance,
    enumerate_bpmn_traces,
    explore,
    run_scripted,
    simulate,
    trace_line,
)

__version__ = "0.1.0"
