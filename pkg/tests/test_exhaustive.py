"""Sanity checks for the brute-force sequence oracle itself, against
hand-derived counts and values on the shipped demo fixture."""

from pathlib import Path

import pytest

from exhaustive import best_by_enumeration, enumerate_sequences
from toc.agents import AgentBackendConfig, AgentSuite, DisclosureStatus
from toc.claims import EditOperationType
from toc.corpus import generate_synthetic, load_corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def case():
    record = load_corpus(FIXTURES / "case_study.json")[0]
    suite = AgentSuite(AgentBackendConfig(kind="mock", k_samples=1, temperature=0.0, seed=0))
    return record, suite


def test_depth1_sequences(case):
    record, suite = case
    seqs = list(enumerate_sequences(record.claim, record.prior_art, suite, max_depth=1))
    assert len(seqs) == 4
    assert seqs[0][0] == ()
    ops = {history[0].op_type for history, _ in seqs if history}
    assert ops == {
        EditOperationType.ADD_NOVEL_FEATURE,
        EditOperationType.REPLACE_SYNONYM,
        EditOperationType.ADD_LIMITATION,
    }
    assert all(h[0].target_element_id == "e2" for h, _ in seqs if h)


def test_depth2_count_hand_derived(case):
    # root: 3 candidates; after AddNovelFeature: 3; after ReplaceSynonym:
    # 2 (the later AddNovelFeature is precedence-filtered, second synonym
    # swap and AddLimitation remain); after AddLimitation: 3.
    # 1 + 3 + (3 + 2 + 3) = 12.
    record, suite = case
    seqs = list(enumerate_sequences(record.claim, record.prior_art, suite, max_depth=2))
    assert len(seqs) == 12


def test_precedence_respected_everywhere(case):
    record, suite = case
    for history, _ in enumerate_sequences(record.claim, record.prior_art, suite, max_depth=3):
        synonym_at = [i for i, a in enumerate(history)
                      if a.op_type == EditOperationType.REPLACE_SYNONYM]
        novel_at = [i for i, a in enumerate(history)
                    if a.op_type == EditOperationType.ADD_NOVEL_FEATURE]
        for i in synonym_at:
            for j in novel_at:
                assert not (i < j and history[i].target_element_id
                            == history[j].target_element_id)


def test_depth0_is_the_unedited_claim(case):
    record, suite = case
    result = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=0)
    assert result.sequence_count == 1
    assert result.best_texts == [record.claim.raw_text]
    # coverage 0, scope 0, novelty 0, consistency 1, uncertainty 0
    assert result.best_reward == pytest.approx(0.8)


def test_depth3_best_value_hand_derived(case):
    # the optimum keeps both elements, turns e2 NotDisclosed with three
    # additive clauses introducing 12 new content tokens: reward
    # 1.0 - 0.5*(12/22) + 1.5 + 0.8 = 3.02727...
    record, suite = case
    result = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=3)
    assert result.best_reward == pytest.approx(3.0272727272727273, abs=1e-9)
    assert len(result.best_sequences) == 3
    assert all(len(seq) == 3 for seq in result.best_sequences)
    assert any("wherein" in text for text in result.best_texts)


def test_best_claims_are_fully_undisclosed(case):
    record, suite = case
    result = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=3)
    for claim in result.best_claims:
        verdicts = suite.examine_claim(claim, list(record.prior_art))
        assert all(c.status == DisclosureStatus.NOT_DISCLOSED for c in verdicts.values())


def test_oracle_instances_bottom_out_within_two_steps():
    suite = AgentSuite(AgentBackendConfig(kind="mock", k_samples=1, temperature=0.0, seed=0))
    for record in generate_synthetic(5, seed=31, mode="oracle"):
        lengths = [len(h) for h, _ in
                   enumerate_sequences(record.claim, record.prior_art, suite, max_depth=3)]
        assert max(lengths) <= 2
        result = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=3)
        assert result.best_reward > 0.8


def test_enumeration_deterministic(case):
    record, suite = case
    a = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=3)
    b = best_by_enumeration(record.claim, record.prior_art, suite, max_depth=3)
    assert a == b
