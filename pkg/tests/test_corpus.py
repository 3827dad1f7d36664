"""Corpus round trips, evidence ranking, and the synthetic generator's
label guarantees."""

import json

import pytest

from toc.agents import AgentBackendConfig, AgentSuite, DisclosureStatus
from toc.claims import Claim, ClaimElement, LabeledInstance, PriorArtDocument
from toc.corpus import (
    CorpusFormatError,
    CorpusRecord,
    dumps_corpus,
    filter_evidence,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from toc.metrics import coverage_f1
from toc.textutil import content_tokens


def small_record(record_id="rec-1"):
    elements = [
        ClaimElement("e1", "preamble", "A rotor assembly, comprising"),
        ClaimElement("e2", "limitation", "a rotor bearing."),
    ]
    claim = Claim.from_elements(record_id, elements)
    doc = PriorArtDocument("d1", "Rotor art", "The rotor and the bearing cooperate. The rotor spins.")
    labels = (LabeledInstance("e2", True, evidence="The rotor spins."),)
    return CorpusRecord(record_id, claim, (doc,), labels, notes="hand built")


class TestRoundTrip:
    def test_save_load_save_is_byte_identical(self, tmp_path):
        records = generate_synthetic(4, seed=3)
        path = tmp_path / "corpus.json"
        save_corpus(records, path)
        first = path.read_bytes()
        loaded = load_corpus(path)
        assert loaded == records
        save_corpus(loaded, path)
        assert path.read_bytes() == first

    def test_canonical_output_shape(self):
        text = dumps_corpus([small_record()])
        assert text.endswith("\n")
        payload = json.loads(text)
        assert set(payload) == {"records"}
        record = payload["records"][0]
        assert set(record) == {"record_id", "claim", "prior_art", "labels", "notes"}


class TestLoadErrors:
    def write(self, tmp_path, payload):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    def test_unknown_record_key_strict(self, tmp_path):
        data = json.loads(dumps_corpus([small_record()]))
        data["records"][0]["surprise"] = 1
        path = self.write(tmp_path, data)
        with pytest.raises(CorpusFormatError, match="record 0.*surprise"):
            load_corpus(path)
        assert len(load_corpus(path, strict=False)) == 1

    def test_unknown_top_level_key(self, tmp_path):
        data = json.loads(dumps_corpus([small_record()]))
        data["generator"] = "x"
        path = self.write(tmp_path, data)
        with pytest.raises(CorpusFormatError, match="generator"):
            load_corpus(path)
        assert len(load_corpus(path, strict=False)) == 1

    def test_duplicate_record_id_names_both_positions(self, tmp_path):
        data = json.loads(dumps_corpus([small_record(), small_record()]))
        path = self.write(tmp_path, data)
        with pytest.raises(CorpusFormatError, match="records 0 and 1"):
            load_corpus(path)

    def test_missing_required_field_names_index(self, tmp_path):
        data = json.loads(dumps_corpus([small_record()]))
        del data["records"][0]["prior_art"]
        path = self.write(tmp_path, data)
        with pytest.raises(CorpusFormatError, match="record 0.*prior_art"):
            load_corpus(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{]", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="not valid JSON"):
            load_corpus(path)

    def test_top_level_must_hold_records(self, tmp_path):
        path = self.write(tmp_path, [1, 2, 3])
        with pytest.raises(CorpusFormatError, match="records"):
            load_corpus(path)


class TestRecordValidation:
    def test_label_for_unknown_element(self):
        base = small_record()
        with pytest.raises(CorpusFormatError, match="e9"):
            CorpusRecord(base.record_id, base.claim, base.prior_art,
                         (LabeledInstance("e9", True),))

    def test_duplicate_label(self):
        base = small_record()
        labels = (LabeledInstance("e2", True), LabeledInstance("e2", False))
        with pytest.raises(CorpusFormatError, match="duplicate label"):
            CorpusRecord(base.record_id, base.claim, base.prior_art, labels)

    def test_prior_art_required(self):
        base = small_record()
        with pytest.raises(CorpusFormatError, match="no prior art"):
            CorpusRecord(base.record_id, base.claim, ())

    def test_gold_map(self):
        assert small_record().gold_map() == {"e2": True}


class TestFilterEvidence:
    DOC = PriorArtDocument(
        "d1", "t",
        "The rotor spins. The rotor and the bearing cooperate. Nothing relevant here.")

    def test_cosine_ordering(self):
        # query {rotor, bearing}: second sentence scores 2/sqrt(6),
        # first scores 1/2, third scores 0 and is dropped
        out = filter_evidence("a rotor bearing", [self.DOC])
        assert [p.sentence for p in out] == [
            "The rotor and the bearing cooperate.", "The rotor spins."]
        assert out[0].score == pytest.approx(2 / 6 ** 0.5)
        assert out[1].score == pytest.approx(0.5)
        assert (out[0].doc_id, out[0].position) == ("d1", 1)

    def test_ties_keep_position_order(self):
        doc = PriorArtDocument("d1", "t", "The rotor spins. The rotor spins. The rotor turns fast.")
        out = filter_evidence("rotor", [doc])
        assert [p.position for p in out[:2]] == [0, 1]

    def test_doc_order_before_position_on_ties(self):
        a = PriorArtDocument("first", "t", "A rotor is shown.")
        b = PriorArtDocument("second", "t", "A rotor is shown.")
        out = filter_evidence("rotor", [b, a])
        assert [p.doc_id for p in out] == ["second", "first"]

    def test_top_k(self):
        docs = [PriorArtDocument(f"d{i}", "t", "The rotor spins.") for i in range(9)]
        assert len(filter_evidence("rotor", docs, top_k=4)) == 4
        with pytest.raises(ValueError):
            filter_evidence("rotor", docs, top_k=0)

    def test_no_overlap_gives_empty(self):
        assert filter_evidence("unrelated widget", [self.DOC]) == []


class TestGenerateSynthetic:
    def test_deterministic(self):
        a = dumps_corpus(generate_synthetic(5, seed=11))
        b = dumps_corpus(generate_synthetic(5, seed=11))
        c = dumps_corpus(generate_synthetic(5, seed=12))
        assert a == b
        assert a != c

    def test_shape_bounds(self):
        for record in generate_synthetic(20, seed=4):
            assert 2 <= len(record.claim.elements) <= 5
            assert 1 <= len(record.prior_art) <= 2
            assert len(record.labels) == len(record.claim.elements)
            assert record.claim.elements[0].element_type == "preamble"

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            generate_synthetic(0, seed=1)
        with pytest.raises(ValueError):
            generate_synthetic(1, seed=1, mode="impossible")

    def test_gold_matches_examiner_at_temperature_zero(self):
        cfg = AgentBackendConfig(kind="mock", k_samples=1, temperature=0.0, seed=0)
        suite = AgentSuite(cfg)
        for record in generate_synthetic(12, seed=21):
            verdicts = suite.examine_claim(record.claim, list(record.prior_art))
            predicted = [verdicts[e].status for e in record.claim.element_ids()]
            gold = [record.gold_map()[e] for e in record.claim.element_ids()]
            if not any(gold):
                continue
            assert coverage_f1(predicted, gold) == 1.0

    def test_oracle_mode_is_single_disclosed_small_element(self):
        for record in generate_synthetic(15, seed=9, mode="oracle"):
            assert len(record.prior_art) == 1
            disclosed = [l for l in record.labels if l.disclosed]
            assert len(disclosed) == 1
            element = record.claim.get(disclosed[0].element_id)
            assert 2 <= len(content_tokens(element.text)) <= 5
            assert not record.gold_map()["e1"]

    def test_borderline_mode_hits_threshold_exactly(self):
        for record in generate_synthetic(8, seed=13, mode="borderline"):
            assert any(l.justification == "token containment 0.80"
                       for l in record.labels)

    def test_preamble_never_disclosed(self):
        for mode in ("general", "oracle", "borderline"):
            for record in generate_synthetic(6, seed=2, mode=mode):
                assert record.gold_map()["e1"] is False
