"""Examiner and editor agents with pluggable backends.

The examiner judges whether one claim element is disclosed by one prior
art document and answers with a reasoning chain.  The editor proposes
edit actions for elements the examiner found (partially) disclosed.
Both roles speak the strict JSON wire contract in ``schemas``; the mock
backend emits through the same renderers the validator parses, so the
deterministic path exercises the full contract.

Epistemic uncertainty comes from K stochastic runs per judgment: the
fraction of samples that disagree with the majority status.  A chain is
flagged for human review whenever that uncertainty exceeds
``SIGMA_EPI_MAX``.
"""

from __future__ import annotations

import hashlib
import json
import math
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from . import prompts, schemas
from .claims import ClaimElement, EditAction, EditOperationType, PriorArtDocument
from .textutil import content_token_set, split_sentences

# epistemic uncertainty above this threshold requires a human decision
SIGMA_EPI_MAX = 0.2

NO_EVIDENCE = "None"


class AgentFailure(Exception):
    """All retries exhausted without schema-valid output."""


class TransportFailure(AgentFailure):
    """The backend endpoint could not be reached or answered badly."""


class NothingToEditError(Exception):
    """plan_edits was called for an element that is not disclosed."""


class DisclosureStatus(str, Enum):
    DISCLOSED = "Disclosed"
    PARTIALLY_DISCLOSED = "PartiallyDisclosed"
    NOT_DISCLOSED = "NotDisclosed"


_SEVERITY = {
    DisclosureStatus.DISCLOSED: 2,
    DisclosureStatus.PARTIALLY_DISCLOSED: 1,
    DisclosureStatus.NOT_DISCLOSED: 0,
}


@dataclass(frozen=True)
class ReasoningChain:
    """One examiner judgment.  ``human_review`` is always derived from
    ``uncertainty``, never trusted from the wire."""

    status: DisclosureStatus
    evidence_text: str
    reasoning: str
    confidence: float
    uncertainty: float
    human_review: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if not 0.0 <= self.uncertainty <= 1.0:
            raise ValueError(f"uncertainty {self.uncertainty} outside [0, 1]")
        if self.status == DisclosureStatus.DISCLOSED and self.evidence_text == NO_EVIDENCE:
            raise ValueError("a Disclosed verdict requires evidence text")
        object.__setattr__(self, "human_review", self.uncertainty > SIGMA_EPI_MAX)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "evidence_text": self.evidence_text,
            "reasoning": self.reasoning,
            "confidence": self.confidence,
            "uncertainty": self.uncertainty,
            "human_review": self.human_review,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReasoningChain":
        return cls(
            status=DisclosureStatus(data["status"]),
            evidence_text=data["evidence_text"],
            reasoning=data["reasoning"],
            confidence=data["confidence"],
            uncertainty=data["uncertainty"],
        )


@dataclass(frozen=True)
class EditorPlan:
    element_id: str
    actions: tuple[EditAction, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValueError("an editor plan must contain at least one action")


@dataclass
class AgentBackendConfig:
    kind: str = "mock"
    endpoint: "str | None" = None
    credential: "str | None" = None
    k_samples: int = 5
    temperature: float = 0.0
    timeout_secs: float = 30.0
    max_retries: int = 2
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.k_samples < 1:
            raise ValueError("k_samples must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")


# ---- epistemic estimation ----------------------------------------------

def _canonical_order(sample: ReasoningChain) -> tuple:
    return (sample.status.value, -sample.confidence, sample.evidence_text,
            sample.reasoning, sample.uncertainty)


def estimate_epistemic(samples: "list[ReasoningChain]") -> "tuple[float, ReasoningChain]":
    """Majority vote over K samples.

    sigma_epi = 1 - (majority count / K); a tie yields a
    PartiallyDisclosed consensus with sigma_epi = 0.5.  The result does
    not depend on sample order.
    """
    if not samples:
        raise ValueError("estimate_epistemic needs at least one sample")
    k = len(samples)
    counts = Counter(s.status for s in samples)
    top = max(counts.values())
    winners = [s for s in DisclosureStatus if counts.get(s) == top]
    if len(winners) > 1:
        status = DisclosureStatus.PARTIALLY_DISCLOSED
        sigma = 0.5
    else:
        status = winners[0]
        sigma = 1.0 - top / k

    ordered = sorted(samples, key=_canonical_order)
    source = next((s for s in ordered if s.status == status), ordered[0])
    # fsum keeps the mean bit-identical under sample reordering
    confidence = math.fsum(s.confidence for s in samples) / k
    evidence = source.evidence_text
    if status == DisclosureStatus.DISCLOSED and evidence == NO_EVIDENCE:
        evidence = source.reasoning or "(consensus)"
    consensus = ReasoningChain(
        status=status,
        evidence_text=evidence,
        reasoning=source.reasoning,
        confidence=confidence,
        uncertainty=sigma,
    )
    return sigma, consensus


# ---- disclosure scoring shared by the mock and the corpus generator ----

def disclosure_score(element_text: str, description: str) -> "tuple[float, str | None]":
    """Fraction of the element's content tokens covered by the best
    sentence of the description, plus that sentence."""
    element = content_token_set(element_text)
    if not element:
        return 0.0, None
    best_score = 0.0
    best_sentence: "str | None" = None
    for sentence in split_sentences(description):
        overlap = len(element & content_token_set(sentence)) / len(element)
        if overlap > best_score:
            best_score = overlap
            best_sentence = sentence
    return best_score, best_sentence


THETA_DISCLOSED = 0.8
THETA_PARTIAL = 0.4


def _status_for(score: float) -> DisclosureStatus:
    if score >= THETA_DISCLOSED:
        return DisclosureStatus.DISCLOSED
    if score >= THETA_PARTIAL:
        return DisclosureStatus.PARTIALLY_DISCLOSED
    return DisclosureStatus.NOT_DISCLOSED


# ---- mock backend -------------------------------------------------------

NOVEL_FEATURE_SUFFIXES = (
    "and perform adaptive contrast enhancement",
    "and apply wavelet-domain denoising",
    "and compute a saliency map for downstream use",
)

LIMITATION_SUFFIXES = (
    "wherein the enhancement is performed only on grayscale images",
    "wherein processing is restricted to a designated region of interest",
    "wherein the operations execute on a dedicated coprocessor",
)

SYNONYM_TABLE = (
    ("apply a filter to the image", "process the image"),
    ("configured to receive", "arranged to acquire"),
    ("coupled to", "in communication with"),
)

MOCK_PLAN_CONFIDENCE = 0.80
MOCK_APPLY_CONFIDENCE = 0.85


def _append_clause(text: str, clause: str) -> str:
    body, dot = (text[:-1].rstrip(), ".") if text.endswith(".") else (text, "")
    return f"{body.rstrip(',;')}, {clause}{dot}"


def _first_unused(text: str, bank: "tuple[str, ...]") -> "str | None":
    for suffix in bank:
        if suffix not in text:
            return suffix
    return None


def _synonym_swap(text: str) -> "str | None":
    for phrase, replacement in SYNONYM_TABLE:
        if phrase in text:
            swapped = text.replace(phrase, replacement, 1)
            if swapped != text:
                return swapped
    return None


class MockBackend:
    """Deterministic offline backend.

    Disclosure verdicts come from token containment against the prior
    art sentences; with temperature > 0 a hash-derived perturbation in
    [-temperature, temperature) is added per sample index, so repeated
    samples can disagree near the thresholds.  Everything derives from
    (seed, inputs, sample index): bit-identical across runs, call
    orders, and thread counts.
    """

    kind = "mock"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _noise(self, element_text: str, doc_id: str, sample_index: int) -> float:
        key = f"{self.seed}|{element_text}|{doc_id}|{sample_index}"
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2 ** 63 - 1.0

    def examine(self, element: ClaimElement, prior_art: PriorArtDocument,
                sample_index: int, temperature: float, attempt: int = 0) -> str:
        score, sentence = disclosure_score(element.text, prior_art.description)
        if temperature > 0:
            noisy = score + temperature * self._noise(element.text, prior_art.doc_id, sample_index)
            score = min(1.0, max(0.0, noisy))
        status = _status_for(score)
        if status == DisclosureStatus.NOT_DISCLOSED or sentence is None:
            evidence = NO_EVIDENCE
        else:
            evidence = sentence
        reasoning = (
            f"element terms are covered at ratio {score:.2f} by the best "
            f"matching sentence of {prior_art.doc_id}"
        )
        return schemas.render_examiner_json(
            status=status.value,
            evidence_text=evidence,
            reasoning=reasoning,
            confidence=round(score, 2),
            uncertainty=0.0,
            human_review=False,
        )

    def plan(self, element: ClaimElement, status: str, evidence_text: str,
             reasoning: str, attempt: int = 0) -> str:
        ops: list[dict] = []
        novel = _first_unused(element.text, NOVEL_FEATURE_SUFFIXES)
        if novel is not None:
            ops.append({
                "operation_type": EditOperationType.ADD_NOVEL_FEATURE.value,
                "target_element_id": element.element_id,
                "modified_text": _append_clause(element.text, novel),
                "rationale": "introduce a feature absent from the cited evidence",
                "confidence": MOCK_PLAN_CONFIDENCE,
            })
        swapped = _synonym_swap(element.text)
        if swapped is not None:
            ops.append({
                "operation_type": EditOperationType.REPLACE_SYNONYM.value,
                "target_element_id": element.element_id,
                "modified_text": swapped,
                "rationale": "reword the mapped phrase away from the evidence",
                "confidence": MOCK_PLAN_CONFIDENCE,
            })
        limitation = _first_unused(element.text, LIMITATION_SUFFIXES)
        if limitation is not None:
            ops.append({
                "operation_type": EditOperationType.ADD_LIMITATION.value,
                "target_element_id": element.element_id,
                "modified_text": _append_clause(element.text, limitation),
                "rationale": "narrow the element below the disclosed scope",
                "confidence": MOCK_PLAN_CONFIDENCE,
            })
        if not ops:
            ops.append({
                "operation_type": EditOperationType.DROP_ELEMENT.value,
                "target_element_id": element.element_id,
                "modified_text": "",
                "rationale": "no template applies; removing the element",
                "confidence": MOCK_PLAN_CONFIDENCE,
            })
        return schemas.render_editor_json(ops)

    def apply_op(self, element: ClaimElement, reasoning: str,
                 op_type: EditOperationType, attempt: int = 0) -> str:
        text = element.text
        if op_type == EditOperationType.ADD_NOVEL_FEATURE:
            suffix = _first_unused(text, NOVEL_FEATURE_SUFFIXES)
            modified = _append_clause(text, suffix) if suffix else text
        elif op_type == EditOperationType.ADD_LIMITATION:
            suffix = _first_unused(text, LIMITATION_SUFFIXES)
            modified = _append_clause(text, suffix) if suffix else text
        elif op_type == EditOperationType.REPLACE_SYNONYM:
            modified = _synonym_swap(text) or text
        elif op_type == EditOperationType.DROP_ELEMENT:
            modified = ""
        elif op_type == EditOperationType.SPLIT_ELEMENT:
            words = text.split()
            mid = max(1, len(words) // 2)
            modified = " ".join(words[:mid]) + " || " + " ".join(words[mid:])
        elif op_type == EditOperationType.REFRAME_VIA_FIGURE:
            modified = _append_clause(text, "as depicted in the referenced figure")
        elif op_type == EditOperationType.MODIFY_RELATIONSHIP:
            modified = _append_clause(text, "arranged to cooperate with the remaining elements")
        elif op_type == EditOperationType.ADD_DEPENDENCY:
            modified = "responsive to the preceding element"
        else:  # ChangeOrder and MergeElements need claim-level context
            modified = element.element_id
        return schemas.render_apply_json(
            modified_text=modified,
            reasoning=f"applied {op_type.value} with the fixed template",
            confidence=MOCK_APPLY_CONFIDENCE,
        )


# ---- remote backend -----------------------------------------------------

_RETRY_NOTE = (
    "\n\nYour previous response was rejected ({reason}). "
    "Output exactly one strict JSON object and nothing else."
)


class RemoteBackend:
    """HTTP gateway backend: one POST per sample, opaque text response."""

    kind = "remote"

    def __init__(self, endpoint: str, credential: "str | None" = None,
                 timeout_secs: float = 30.0, seed: int = 0):
        self.endpoint = endpoint
        self.credential = credential
        self.timeout_secs = timeout_secs
        self.seed = seed

    def _post(self, role: str, system_message: str, user_message: str,
              temperature: float, seed: int) -> str:
        body = json.dumps({
            "role": role,
            "system_message": system_message,
            "user_message": user_message,
            "temperature": temperature,
            "seed": seed,
        }).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.credential:
            headers["Authorization"] = f"Bearer {self.credential}"
        request = urllib.request.Request(self.endpoint, data=body, headers=headers)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_secs) as response:
                return response.read().decode("utf-8")
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise TransportFailure(f"backend unreachable: {exc}") from exc

    def examine(self, element: ClaimElement, prior_art: PriorArtDocument,
                sample_index: int, temperature: float, attempt: int = 0,
                retry_reason: "str | None" = None) -> str:
        prompt = prompts.examiner_prompt(element, prior_art)
        if retry_reason:
            prompt += _RETRY_NOTE.format(reason=retry_reason)
        return self._post("examiner", prompts.EXAMINER_SYSTEM_MESSAGE, prompt,
                          temperature, self.seed + sample_index)

    def plan(self, element: ClaimElement, status: str, evidence_text: str,
             reasoning: str, attempt: int = 0, retry_reason: "str | None" = None) -> str:
        prompt = prompts.edit_planning_prompt(element, status, evidence_text, reasoning)
        if retry_reason:
            prompt += _RETRY_NOTE.format(reason=retry_reason)
        return self._post("editor", prompts.EDITOR_SYSTEM_MESSAGE, prompt, 0.0, self.seed)

    def apply_op(self, element: ClaimElement, reasoning: str,
                 op_type: EditOperationType, attempt: int = 0,
                 retry_reason: "str | None" = None) -> str:
        prompt = prompts.apply_operation_prompt(element, reasoning, op_type.value)
        if retry_reason:
            prompt += _RETRY_NOTE.format(reason=retry_reason)
        return self._post("editor", prompts.EDITOR_SYSTEM_MESSAGE, prompt, 0.0, self.seed)


def make_backend(cfg: AgentBackendConfig):
    if cfg.kind == "mock":
        return MockBackend(seed=cfg.seed)
    return RemoteBackend(cfg.endpoint, cfg.credential, cfg.timeout_secs, cfg.seed)


# ---- agent operations ---------------------------------------------------

def _chain_from_payload(payload: dict) -> ReasoningChain:
    return ReasoningChain(
        status=DisclosureStatus(payload["status"]),
        evidence_text=payload["evidence_text"],
        reasoning=payload["reasoning"],
        confidence=float(payload["confidence"]),
        uncertainty=float(payload["uncertainty"]),
    )


@dataclass
class AgentSuite:
    """Examiner and editor operations over one backend configuration."""

    cfg: AgentBackendConfig
    backend: object = None

    def __post_init__(self) -> None:
        if self.backend is None:
            self.backend = make_backend(self.cfg)

    # -- examiner --

    def _one_sample(self, element: ClaimElement, prior_art: PriorArtDocument,
                    sample_index: int) -> ReasoningChain:
        retry_reason = None
        for attempt in range(self.cfg.max_retries + 1):
            kwargs = {"attempt": attempt}
            if retry_reason is not None and isinstance(self.backend, RemoteBackend):
                kwargs["retry_reason"] = retry_reason
            raw = self.backend.examine(element, prior_art, sample_index,
                                       self.cfg.temperature, **kwargs)
            try:
                payload = schemas.validate_agent_json(raw, schemas.EXAMINER_SCHEMA)
                return _chain_from_payload(payload)
            except (schemas.SchemaValidationError, ValueError) as exc:
                retry_reason = getattr(exc, "reason", "invalid-chain")
        raise AgentFailure(
            f"examiner failed after {self.cfg.max_retries + 1} attempts "
            f"on element {element.element_id!r} ({retry_reason})"
        )

    def examine_element(self, element: ClaimElement,
                        prior_art: PriorArtDocument) -> ReasoningChain:
        """Judge one element against one document over K samples."""
        k = self.cfg.k_samples
        indices = range(k)
        if self.cfg.workers > 1 and k > 1:
            with ThreadPoolExecutor(max_workers=min(self.cfg.workers, k)) as pool:
                samples = list(pool.map(
                    lambda i: self._one_sample(element, prior_art, i), indices))
        else:
            samples = [self._one_sample(element, prior_art, i) for i in indices]
        if k > 1:
            _, consensus = estimate_epistemic(samples)
            return consensus
        return samples[0]

    def examine_claim(self, claim, prior_art: "list[PriorArtDocument]") -> "dict[str, ReasoningChain]":
        """Judge every element against every document; the most disclosing
        verdict per element wins (ties break to higher confidence, then
        document order)."""
        out: dict[str, ReasoningChain] = {}
        for element in claim.elements:
            best: "ReasoningChain | None" = None
            for doc in prior_art:
                chain = self.examine_element(element, doc)
                if best is None:
                    best = chain
                    continue
                key = (_SEVERITY[chain.status], chain.confidence)
                best_key = (_SEVERITY[best.status], best.confidence)
                if key > best_key:
                    best = chain
            out[element.element_id] = best
        return out

    # -- editor --

    def plan_edits(self, element: ClaimElement, chain: ReasoningChain) -> EditorPlan:
        if chain.status == DisclosureStatus.NOT_DISCLOSED:
            raise NothingToEditError(
                f"element {element.element_id!r} is not disclosed; nothing to edit"
            )
        retry_reason = None
        for attempt in range(self.cfg.max_retries + 1):
            kwargs = {"attempt": attempt}
            if retry_reason is not None and isinstance(self.backend, RemoteBackend):
                kwargs["retry_reason"] = retry_reason
            raw = self.backend.plan(element, chain.status.value,
                                    chain.evidence_text, chain.reasoning, **kwargs)
            try:
                payload = schemas.validate_agent_json(raw, schemas.EDITOR_SCHEMA)
                actions = tuple(
                    EditAction(
                        op_type=EditOperationType(op["operation_type"]),
                        target_element_id=op["target_element_id"],
                        modified_text=op["modified_text"],
                        rationale=op["rationale"],
                        confidence=float(op["confidence"]),
                    )
                    for op in payload["operations"]
                )
                for action in actions:
                    if element.element_id not in action.target_ids:
                        raise schemas.SchemaValidationError(
                            "out-of-range",
                            f"action targets {action.target_element_id!r}, "
                            f"expected {element.element_id!r}")
                return EditorPlan(element.element_id, actions)
            except (schemas.SchemaValidationError, ValueError) as exc:
                retry_reason = getattr(exc, "reason", "invalid-plan")
        raise AgentFailure(
            f"editor failed after {self.cfg.max_retries + 1} attempts "
            f"on element {element.element_id!r} ({retry_reason})"
        )

    def apply_specific_operation(self, element: ClaimElement, chain: ReasoningChain,
                                 op_type: EditOperationType) -> EditAction:
        retry_reason = None
        for attempt in range(self.cfg.max_retries + 1):
            kwargs = {"attempt": attempt}
            if retry_reason is not None and isinstance(self.backend, RemoteBackend):
                kwargs["retry_reason"] = retry_reason
            raw = self.backend.apply_op(element, chain.reasoning, op_type, **kwargs)
            try:
                payload = schemas.validate_agent_json(raw, schemas.APPLY_SCHEMA)
                return EditAction(
                    op_type=op_type,
                    target_element_id=element.element_id,
                    modified_text=payload["modified_text"],
                    rationale=payload["reasoning"],
                    confidence=float(payload["confidence"]),
                )
            except (schemas.SchemaValidationError, ValueError) as exc:
                retry_reason = getattr(exc, "reason", "invalid-action")
        raise AgentFailure(
            f"apply-operation failed after {self.cfg.max_retries + 1} attempts "
            f"on element {element.element_id!r} ({retry_reason})"
        )
