"""Audit trail serialization and the replay integrity check."""

import json
from pathlib import Path

import pytest

from toc.agents import AgentBackendConfig, AgentSuite
from toc.audit import (
    AuditRecord,
    AuditReplayError,
    AuditTrail,
    load_trail,
    replay,
    verify_against_result,
)
from toc.corpus import load_corpus
from toc.search import SearchConfig, SearchEngine

FIXTURES = Path(__file__).parent / "fixtures"


def run_case(tmp_path=None, t_max=40):
    rec = load_corpus(FIXTURES / "case_study.json")[0]
    suite = AgentSuite(AgentBackendConfig(kind="mock", k_samples=1, seed=0))
    path = tmp_path / "audit.jsonl" if tmp_path else None
    trail = AuditTrail(path)
    result = SearchEngine(rec.claim, list(rec.prior_art),
                          cfg=SearchConfig(t_max=t_max), suite=suite,
                          trail=trail).run()
    trail.close()
    return result, trail, path


def test_record_round_trips_through_json():
    record = AuditRecord(record_id=3, iteration=2, phase="expand", node_id=5,
                         timestamp=3, action={"op_type": "AddNovelFeature"},
                         claim_before="a", claim_after="b",
                         info={"parent_id": 1})
    line = record.to_json_line()
    assert AuditRecord.from_json_line(line) == record
    assert json.loads(line)["phase"] == "expand"


def test_unknown_phase_rejected():
    with pytest.raises(ValueError):
        AuditRecord(record_id=1, iteration=0, phase="meditate", node_id=0,
                    timestamp=1)


def test_ids_and_timestamps_increase():
    _, trail, _ = run_case()
    ids = [r.record_id for r in trail.records]
    assert ids == sorted(ids) and len(set(ids)) == len(ids)
    assert all(r.timestamp == r.record_id for r in trail.records)


def test_jsonl_file_round_trips(tmp_path):
    result, trail, path = run_case(tmp_path)
    loaded = load_trail(path)
    assert loaded == trail.records
    summary = verify_against_result(loaded, result.best_reward,
                                    result.best_claim.raw_text)
    assert summary.record_count == len(trail.records)
    assert summary.simulations >= 1


def test_replay_requires_baseline():
    _, trail, _ = run_case()
    without = [r for r in trail.records
               if not (r.phase == "simulate" and r.info.get("baseline"))]
    with pytest.raises(AuditReplayError):
        replay(without)


def test_replay_detects_tampered_expansion(tmp_path):
    result, trail, _ = run_case()
    records = list(trail.records)
    for i, record in enumerate(records):
        if record.phase == "expand":
            data = json.loads(record.to_json_line())
            data["claim_after"] = data["claim_after"] + " sneaky edit"
            records[i] = AuditRecord(**data)
            break
    with pytest.raises(AuditReplayError):
        replay(records)


def test_replay_detects_wrong_reported_best():
    result, trail, _ = run_case()
    with pytest.raises(AuditReplayError):
        verify_against_result(trail.records, result.best_reward + 1.0,
                              result.best_claim.raw_text)
    with pytest.raises(AuditReplayError):
        verify_against_result(trail.records, result.best_reward,
                              "A different claim entirely.")


def test_trail_context_manager(tmp_path):
    path = tmp_path / "trail.jsonl"
    with AuditTrail(path) as trail:
        trail.emit(0, "select", 0, info={"note": "hello"})
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["info"] == {"note": "hello"}
