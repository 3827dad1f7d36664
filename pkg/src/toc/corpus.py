"""Corpus records: load/save, evidence retrieval, synthetic generation.

A corpus file is a single JSON object ``{"records": [...]}``.  Saves are
canonical (sorted keys, two-space indent, trailing newline) so that
save -> load -> save is byte-identical.

The synthetic generator builds instances whose disclosure pattern is
known by construction: every element's content tokens either appear
verbatim in one prior art sentence (at a controlled ratio) or nowhere.
Gold labels are re-derived from the generated text rather than trusted
from the construction plan.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .agents import THETA_PARTIAL, disclosure_score
from .claims import Claim, ClaimElement, LabeledInstance, PriorArtDocument
from .textutil import content_token_counts, split_sentences


class CorpusFormatError(ValueError):
    pass


_RECORD_REQUIRED = ("record_id", "claim", "prior_art")
_RECORD_OPTIONAL = ("labels", "notes")


@dataclass(frozen=True)
class CorpusRecord:
    record_id: str
    claim: Claim
    prior_art: tuple[PriorArtDocument, ...]
    labels: tuple[LabeledInstance, ...] = ()
    notes: str = ""

    def __post_init__(self) -> None:
        if not self.record_id.strip():
            raise CorpusFormatError("record_id must be non-empty")
        if not self.prior_art:
            raise CorpusFormatError(
                f"record {self.record_id!r} has no prior art documents")
        known = set(self.claim.element_ids())
        seen: set[str] = set()
        for label in self.labels:
            if label.element_id not in known:
                raise CorpusFormatError(
                    f"record {self.record_id!r}: label for unknown element "
                    f"{label.element_id!r}")
            if label.element_id in seen:
                raise CorpusFormatError(
                    f"record {self.record_id!r}: duplicate label for "
                    f"{label.element_id!r}")
            seen.add(label.element_id)

    def gold_map(self) -> "dict[str, bool]":
        return {label.element_id: label.disclosed for label in self.labels}

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "claim": self.claim.to_dict(),
            "prior_art": [d.to_dict() for d in self.prior_art],
            "labels": [l.to_dict() for l in self.labels],
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, data: dict, strict: bool = True) -> "CorpusRecord":
        if not isinstance(data, dict):
            raise CorpusFormatError(f"record must be an object, got {type(data).__name__}")
        for key in _RECORD_REQUIRED:
            if key not in data:
                raise CorpusFormatError(f"record is missing required field {key!r}")
        if strict:
            allowed = set(_RECORD_REQUIRED) | set(_RECORD_OPTIONAL)
            for key in data:
                if key not in allowed:
                    raise CorpusFormatError(f"record has unknown field {key!r}")
        return cls(
            record_id=data["record_id"],
            claim=Claim.from_dict(data["claim"]),
            prior_art=tuple(PriorArtDocument.from_dict(d) for d in data["prior_art"]),
            labels=tuple(LabeledInstance.from_dict(l) for l in data.get("labels", ())),
            notes=data.get("notes", ""),
        )


def load_corpus(path: "str | Path", strict: bool = True) -> "list[CorpusRecord]":
    raw = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict) or "records" not in payload:
        raise CorpusFormatError(f"{path}: top level must be an object with 'records'")
    if strict:
        for key in payload:
            if key != "records":
                raise CorpusFormatError(f"{path}: unknown top-level key {key!r}")
    records: list[CorpusRecord] = []
    seen: dict[str, int] = {}
    for index, item in enumerate(payload["records"]):
        try:
            record = CorpusRecord.from_dict(item, strict=strict)
        except (CorpusFormatError, KeyError, ValueError) as exc:
            raise CorpusFormatError(f"{path}: record {index}: {exc}") from exc
        if record.record_id in seen:
            raise CorpusFormatError(
                f"{path}: duplicate record_id {record.record_id!r} at records "
                f"{seen[record.record_id]} and {index}")
        seen[record.record_id] = index
        records.append(record)
    return records


def dumps_corpus(records: "list[CorpusRecord]") -> str:
    payload = {"records": [r.to_dict() for r in records]}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def save_corpus(records: "list[CorpusRecord]", path: "str | Path") -> None:
    Path(path).write_text(dumps_corpus(records), encoding="utf-8")


# ---- evidence retrieval --------------------------------------------------

@dataclass(frozen=True)
class EvidencePassage:
    doc_id: str
    position: int
    sentence: str
    score: float


def _cosine(a: "dict[str, int]", b: "dict[str, int]") -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b[token] for token, count in a.items() if token in b)
    if dot == 0:
        return 0.0
    norm_a = math.sqrt(sum(c * c for c in a.values()))
    norm_b = math.sqrt(sum(c * c for c in b.values()))
    return dot / (norm_a * norm_b)


def filter_evidence(query: str, documents: "list[PriorArtDocument]",
                    top_k: int = 5) -> "list[EvidencePassage]":
    """Rank prior art sentences by term-frequency cosine against the
    query's content tokens.  Zero-similarity sentences are dropped; ties
    keep document order, then sentence position."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    query_counts = content_token_counts(query)
    scored: list[EvidencePassage] = []
    for doc in documents:
        for position, sentence in enumerate(split_sentences(doc.description)):
            score = _cosine(query_counts, content_token_counts(sentence))
            if score > 0.0:
                scored.append(EvidencePassage(doc.doc_id, position, sentence, score))
    scored.sort(key=lambda p: -p.score)
    return scored[:top_k]


# ---- synthetic generation ------------------------------------------------

# None of these words appear in the mock editor's templates, so
# generated elements never pick up accidental overlap with an edit.
_VOCAB = (
    "sensor", "actuator", "turbine", "manifold", "capacitor", "resonator",
    "membrane", "gimbal", "spindle", "armature", "winding", "rotor",
    "stator", "plenum", "nozzle", "impeller", "damper", "flywheel",
    "solenoid", "bearing", "bushing", "camshaft", "crankshaft", "piston",
    "gasket", "flange", "conduit", "modulator", "attenuator", "oscillator",
    "rectifier", "inverter", "transducer", "waveguide", "collimator",
    "photodiode", "thermistor", "rheostat", "varistor", "inductor",
    "toroid", "ferrite", "substrate", "wafer", "annulus", "baffle",
    "louver", "diffuser", "shroud", "cowling", "strut", "truss", "gantry",
    "winch", "capstan", "ratchet", "pawl", "detent", "tappet", "pushrod",
)

_PREAMBLE_HEADS = ("apparatus", "assembly", "mechanism", "housing")

_MODES = ("general", "oracle", "borderline")

# sizes keep every disclosed element flippable to NotDisclosed within
# two additive edits (each template suffix adds at least four new
# content tokens)
_MIN_TOKENS = 2
_MAX_TOKENS = 5


def _article(word: str) -> str:
    return "An" if word[0] in "aeiou" else "A"


def _pick_words(pool: "list[str]", count: int) -> "list[str]":
    return [pool.pop() for _ in range(count)]


def _build_element(element_id: str, words: "list[str]", last: bool) -> ClaimElement:
    text = f"{_article(words[0]).lower()} " + " ".join(words)
    if last:
        text += "."
    return ClaimElement(element_id, "limitation", text)


_DISCLOSED_TEMPLATE = "The reference discloses a {words} operating as described."
_PARTIAL_TEMPLATE = "It also teaches a {words} without additional specifics."
_FILLER_SENTENCES = (
    "Conventional fasteners hold the casing together.",
    "Routine maintenance intervals are tabulated in an appendix.",
    "Standard lubricants suit every moving joint.",
)


def generate_synthetic(count: int, seed: int = 0, mode: str = "general") -> "list[CorpusRecord]":
    """Build ``count`` seeded records.

    general: two to five elements, one or two documents, mixed statuses.
    oracle: one document and exactly one disclosed body element of two
        to five content tokens, everything else undisclosed; the whole
        edit space bottoms out within two or three steps.
    borderline: adds one element whose containment is exactly at the
        disclosure threshold, so sampling noise splits the verdicts.
    """
    if mode not in _MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {_MODES}")
    if count < 1:
        raise ValueError("count must be >= 1")
    records = []
    for index in range(count):
        rng = random.Random(seed * 1_000_003 + index)
        records.append(_one_record(rng, f"syn-{mode}-{seed}-{index:03d}", mode))
    return records


def _one_record(rng: random.Random, record_id: str, mode: str) -> CorpusRecord:
    pool = list(_VOCAB)
    rng.shuffle(pool)

    head = rng.choice(_PREAMBLE_HEADS)
    preamble_words = _pick_words(pool, 2)
    preamble_text = (f"{_article(preamble_words[0])} {preamble_words[0]} "
                     f"{preamble_words[1]} {head}, comprising")
    elements = [ClaimElement("e1", "preamble", preamble_text)]

    if mode == "oracle":
        n_body = rng.randint(1, 3)
        categories = ["disclosed"] + ["none"] * (n_body - 1)
        rng.shuffle(categories)
        n_docs = 1
    elif mode == "borderline":
        n_body = rng.randint(2, 4)
        categories = ["disclosed", "borderline"] + [
            rng.choice(["none", "partial"]) for _ in range(n_body - 2)]
        rng.shuffle(categories)
        n_docs = rng.randint(1, 2)
    else:
        n_body = rng.randint(1, 4)
        categories = [rng.choice(["disclosed", "partial", "none"]) for _ in range(n_body)]
        if all(c == "none" for c in categories):
            categories[rng.randrange(n_body)] = rng.choice(["disclosed", "partial"])
        n_docs = rng.randint(1, 2)

    doc_sentences: list[list[str]] = [[] for _ in range(n_docs)]
    planned: list[tuple[str, list[str]]] = []
    for offset, category in enumerate(categories):
        if category == "borderline":
            size = 5
        else:
            size = rng.randint(_MIN_TOKENS, _MAX_TOKENS)
        words = _pick_words(pool, size)
        planned.append((category, words))
        element_id = f"e{offset + 2}"
        elements.append(_build_element(element_id, words, offset == n_body - 1))

        bucket = doc_sentences[rng.randrange(n_docs)]
        if category == "disclosed":
            bucket.append(_DISCLOSED_TEMPLATE.format(words=" ".join(words)))
        elif category == "partial":
            shown = words[:max(1, math.ceil(len(words) / 2))]
            bucket.append(_PARTIAL_TEMPLATE.format(words=" ".join(shown)))
        elif category == "borderline":
            # four of five tokens puts containment exactly on the
            # disclosure threshold
            bucket.append(_DISCLOSED_TEMPLATE.format(words=" ".join(words[:4])))

    claim = Claim.from_elements(record_id, elements)

    docs = []
    for doc_index in range(n_docs):
        sentences = list(doc_sentences[doc_index])
        sentences.append(rng.choice(_FILLER_SENTENCES))
        rng.shuffle(sentences)
        docs.append(PriorArtDocument(
            doc_id=f"{record_id}-d{doc_index + 1}",
            title=f"Reference {doc_index + 1} for {record_id}",
            description=" ".join(sentences),
        ))

    labels = []
    for element in claim.elements:
        best_score = 0.0
        best_sentence = None
        for doc in docs:
            score, sentence = disclosure_score(element.text, doc.description)
            if score > best_score:
                best_score = score
                best_sentence = sentence
        labels.append(LabeledInstance(
            element_id=element.element_id,
            disclosed=best_score >= THETA_PARTIAL,
            evidence=best_sentence or "",
            justification=f"token containment {best_score:.2f}",
        ))

    return CorpusRecord(
        record_id=record_id,
        claim=claim,
        prior_art=tuple(docs),
        labels=tuple(labels),
        notes=mode,
    )
