"""Strict validation of agent JSON payloads.

Backends must return exactly one JSON object with exactly the keys of the
requested schema: no markdown fences, no prose before or after, no extra
or missing keys, enums spelled exactly, and numeric fields inside [0, 1].
Rejections carry a machine-readable reason code so retry loops and metrics
can classify failures:

* ``not-json``       nothing parseable, or the top level is not an object
* ``trailing-text``  valid JSON somewhere, but prefix or suffix text around it
* ``missing-key``    a required key is absent
* ``extra-key``      an unexpected key is present
* ``bad-enum``       a closed-set field holds an unknown value
* ``out-of-range``   a scalar field has the wrong type or leaves its domain

Rendering is the write side of the same contract: floats are emitted with
two decimals, so rendered values survive a validate round trip.
"""

from __future__ import annotations

import json
from typing import Any

from .claims import EditOperationType

EXAMINER_SCHEMA = "examiner"
EDITOR_SCHEMA = "editor"
APPLY_SCHEMA = "apply"

_EXAMINER_KEYS = ("status", "evidence_text", "reasoning", "confidence", "uncertainty", "human_review")
_EDITOR_KEYS = ("operations",)
_OPERATION_KEYS = ("operation_type", "target_element_id", "modified_text", "rationale", "confidence")
_APPLY_KEYS = ("modified_text", "reasoning", "confidence")

_STATUS_VALUES = ("Disclosed", "PartiallyDisclosed", "NotDisclosed")
_OPERATION_VALUES = tuple(op.value for op in EditOperationType)

SCHEMA_KEYS = {
    EXAMINER_SCHEMA: _EXAMINER_KEYS,
    EDITOR_SCHEMA: _EDITOR_KEYS,
    APPLY_SCHEMA: _APPLY_KEYS,
}


class SchemaValidationError(ValueError):
    def __init__(self, reason: str, detail: str):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


def _fail(reason: str, detail: str) -> None:
    raise SchemaValidationError(reason, detail)


def _check_keys(obj: "dict[str, Any]", expected: "tuple[str, ...]", where: str) -> None:
    for key in expected:
        if key not in obj:
            _fail("missing-key", f"{where} lacks {key!r}")
    for key in obj:
        if key not in expected:
            _fail("extra-key", f"{where} has unexpected {key!r}")


def _check_string(obj: "dict[str, Any]", key: str, where: str) -> None:
    if not isinstance(obj[key], str):
        _fail("out-of-range", f"{where}.{key} must be a string")


def _check_unit_float(obj: "dict[str, Any]", key: str, where: str) -> None:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail("out-of-range", f"{where}.{key} must be a number")
    if not 0.0 <= float(value) <= 1.0:
        _fail("out-of-range", f"{where}.{key}={value} outside [0, 1]")


def validate_agent_json(raw: str, schema: str) -> "dict[str, Any]":
    """Parse and validate a raw backend response against one wire schema.

    Returns the parsed payload dict; raises SchemaValidationError with a
    reason code otherwise.  Surrounding whitespace is the only tolerated
    decoration.
    """
    if schema not in SCHEMA_KEYS:
        raise ValueError(f"unknown schema {schema!r}")
    stripped = raw.strip()
    if not stripped:
        _fail("not-json", "empty response")

    decoder = json.JSONDecoder()
    try:
        value, end = decoder.raw_decode(stripped)
    except ValueError:
        # no JSON at position 0; if an object is embedded later the payload
        # was wrapped in prose or fences
        start = stripped.find("{")
        if start > 0:
            try:
                decoder.raw_decode(stripped[start:])
            except ValueError:
                _fail("not-json", "no parseable JSON object")
            _fail("trailing-text", "non-JSON text around the JSON object")
        _fail("not-json", "no parseable JSON object")

    if end != len(stripped):
        _fail("trailing-text", "text after the JSON object")
    if not isinstance(value, dict):
        _fail("not-json", "top level is not a JSON object")

    if schema == EXAMINER_SCHEMA:
        _check_keys(value, _EXAMINER_KEYS, "payload")
        if not isinstance(value["status"], str) or value["status"] not in _STATUS_VALUES:
            _fail("bad-enum", f"status={value['status']!r}")
        _check_string(value, "evidence_text", "payload")
        _check_string(value, "reasoning", "payload")
        _check_unit_float(value, "confidence", "payload")
        _check_unit_float(value, "uncertainty", "payload")
        if not isinstance(value["human_review"], bool):
            _fail("out-of-range", "payload.human_review must be a boolean")
        return value

    if schema == EDITOR_SCHEMA:
        _check_keys(value, _EDITOR_KEYS, "payload")
        ops = value["operations"]
        if not isinstance(ops, list) or not ops:
            _fail("out-of-range", "operations must be a non-empty list")
        for i, op in enumerate(ops):
            where = f"operations[{i}]"
            if not isinstance(op, dict):
                _fail("out-of-range", f"{where} must be an object")
            _check_keys(op, _OPERATION_KEYS, where)
            if not isinstance(op["operation_type"], str) or op["operation_type"] not in _OPERATION_VALUES:
                _fail("bad-enum", f"{where}.operation_type={op['operation_type']!r}")
            _check_string(op, "target_element_id", where)
            _check_string(op, "modified_text", where)
            _check_string(op, "rationale", where)
            _check_unit_float(op, "confidence", where)
        return value

    _check_keys(value, _APPLY_KEYS, "payload")
    _check_string(value, "modified_text", "payload")
    _check_string(value, "reasoning", "payload")
    _check_unit_float(value, "confidence", "payload")
    return value


def try_validate_agent_json(raw: str, schema: str) -> "tuple[dict[str, Any] | None, str | None]":
    """Non-raising variant: returns (payload, None) or (None, reason)."""
    try:
        return validate_agent_json(raw, schema), None
    except SchemaValidationError as exc:
        return None, exc.reason


# ---- rendering --------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{float(value):.2f}"


def render_examiner_json(status: str, evidence_text: str, reasoning: str,
                         confidence: float, uncertainty: float, human_review: bool) -> str:
    return (
        "{"
        f'"status": {json.dumps(status)}, '
        f'"evidence_text": {json.dumps(evidence_text)}, '
        f'"reasoning": {json.dumps(reasoning)}, '
        f'"confidence": {_fmt(confidence)}, '
        f'"uncertainty": {_fmt(uncertainty)}, '
        f'"human_review": {"true" if human_review else "false"}'
        "}"
    )


def render_editor_json(operations: "list[dict[str, Any]]") -> str:
    rendered = []
    for op in operations:
        rendered.append(
            "{"
            f'"operation_type": {json.dumps(op["operation_type"])}, '
            f'"target_element_id": {json.dumps(op["target_element_id"])}, '
            f'"modified_text": {json.dumps(op["modified_text"])}, '
            f'"rationale": {json.dumps(op["rationale"])}, '
            f'"confidence": {_fmt(op["confidence"])}'
            "}"
        )
    return '{"operations": [' + ", ".join(rendered) + "]}"


def render_apply_json(modified_text: str, reasoning: str, confidence: float) -> str:
    return (
        "{"
        f'"modified_text": {json.dumps(modified_text)}, '
        f'"reasoning": {json.dumps(reasoning)}, '
        f'"confidence": {_fmt(confidence)}'
        "}"
    )
