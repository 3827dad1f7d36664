"""Append-only audit trail and the replay integrity check.

One record per engine event.  Timestamps are logical counters so runs
with identical config and seed serialize byte-identically.  The replay
tool reconstructs every claim in the run purely from the trail (no
agents) and cross-checks the engine's reported best.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .claims import Claim, ClaimModelError, EditAction, apply_action

PHASES = ("select", "gate", "expand", "simulate", "backprop", "intervention")


class AuditReplayError(Exception):
    """The trail does not reproduce itself or the claimed result."""


@dataclass
class AuditRecord:
    record_id: int
    iteration: int
    phase: str
    node_id: int
    timestamp: int
    action: "dict | None" = None
    claim_before: "str | None" = None
    claim_after: "str | None" = None
    chain: "dict | None" = None
    reward: "float | None" = None
    reward_components: "dict | None" = None
    info: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.phase not in PHASES:
            raise ValueError(f"unknown audit phase {self.phase!r}")

    def to_json_line(self) -> str:
        payload = {
            "record_id": self.record_id,
            "iteration": self.iteration,
            "phase": self.phase,
            "node_id": self.node_id,
            "timestamp": self.timestamp,
            "action": self.action,
            "claim_before": self.claim_before,
            "claim_after": self.claim_after,
            "chain": self.chain,
            "reward": self.reward,
            "reward_components": self.reward_components,
            "info": self.info,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "AuditRecord":
        data = json.loads(line)
        return cls(**data)


class AuditTrail:
    """Collects records in memory and optionally streams them to a
    JSONL file.  ``flush`` is called once per iteration so a crash
    loses at most the current iteration."""

    def __init__(self, path: "str | Path | None" = None):
        self.records: list[AuditRecord] = []
        self._path = Path(path) if path is not None else None
        self._handle = self._path.open("w", encoding="utf-8") if self._path else None
        self._next_id = 1

    def emit(self, iteration: int, phase: str, node_id: int, **fields) -> AuditRecord:
        record = AuditRecord(
            record_id=self._next_id,
            iteration=iteration,
            phase=phase,
            node_id=node_id,
            timestamp=self._next_id,
            **fields,
        )
        self._next_id += 1
        self.records.append(record)
        if self._handle:
            self._handle.write(record.to_json_line() + "\n")
        return record

    def flush(self) -> None:
        if self._handle:
            self._handle.flush()

    def close(self) -> None:
        if self._handle:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "AuditTrail":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_trail(path: "str | Path") -> "list[AuditRecord]":
    records = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(AuditRecord.from_json_line(line))
    return records


@dataclass
class ReplayResult:
    best_reward: float
    best_claim_text: str
    node_count: int
    record_count: int
    simulations: int


def replay(records: "list[AuditRecord]") -> ReplayResult:
    """Rebuild the run from the trail alone.

    Every expansion action is re-applied and checked against the
    recorded child claim; every simulation's rollout actions are
    re-applied from the launch node; the best claim is recomputed from
    simulate records with the engine's first-strict-improvement rule.
    """
    claims: dict[int, Claim] = {}
    best_reward = float("-inf")
    best_text: "str | None" = None
    simulations = 0

    for record in records:
        if record.phase == "simulate" and record.info.get("baseline"):
            claims[record.node_id] = Claim.from_dict(record.info["claim"])

    if not claims:
        raise AuditReplayError("trail has no baseline record")

    for record in records:
        if record.phase == "expand":
            if record.action is None:
                continue
            parent_id = record.info.get("parent_id")
            if parent_id not in claims:
                raise AuditReplayError(
                    f"record {record.record_id}: expand references unknown "
                    f"parent node {parent_id}")
            action = EditAction.from_dict(record.action)
            try:
                child = apply_action(claims[parent_id], action)
            except ClaimModelError as exc:
                raise AuditReplayError(
                    f"record {record.record_id}: recorded action fails to "
                    f"apply ({exc})") from exc
            if child.raw_text != record.claim_after:
                raise AuditReplayError(
                    f"record {record.record_id}: expansion does not reproduce "
                    f"the recorded claim")
            claims[record.node_id] = child
        elif record.phase == "simulate":
            if record.reward is None:
                continue
            simulations += 1
            if not record.info.get("baseline"):
                if record.node_id not in claims:
                    raise AuditReplayError(
                        f"record {record.record_id}: simulate from unknown "
                        f"node {record.node_id}")
                current = claims[record.node_id]
                for action_data in record.info.get("rollout_actions", []):
                    action = EditAction.from_dict(action_data)
                    try:
                        current = apply_action(current, action)
                    except ClaimModelError as exc:
                        raise AuditReplayError(
                            f"record {record.record_id}: rollout action fails "
                            f"to apply ({exc})") from exc
                if current.raw_text != record.claim_after:
                    raise AuditReplayError(
                        f"record {record.record_id}: rollout does not "
                        f"reproduce the recorded claim")
            if record.reward > best_reward:
                best_reward = record.reward
                best_text = record.claim_after

    if best_text is None:
        raise AuditReplayError("trail contains no scored simulation")
    return ReplayResult(
        best_reward=best_reward,
        best_claim_text=best_text,
        node_count=len(claims),
        record_count=len(records),
        simulations=simulations,
    )


def verify_against_result(records: "list[AuditRecord]", best_reward: float,
                          best_claim_text: str, tolerance: float = 1e-9) -> ReplayResult:
    summary = replay(records)
    if abs(summary.best_reward - best_reward) > tolerance:
        raise AuditReplayError(
            f"replayed best reward {summary.best_reward!r} does not match "
            f"reported {best_reward!r}")
    if summary.best_claim_text != best_claim_text:
        raise AuditReplayError("replayed best claim differs from reported claim")
    return summary
