"""Multi-objective reward over a revised claim.

Five components, each in [0, 1]:

* coverage: fraction of the originally disclosed elements that the
  revision pushed to NotDisclosed (removing an element is not covering it)
* scope_penalty: 1 - Jaccard similarity of the content-token sets of the
  original and revised claim text
* novelty: fraction of edited elements whose edits include a
  novelty-introducing operation and whose revised status is NotDisclosed
* consistency: readability times antecedent coherence heuristics
* uncertainty_penalty: mean epistemic uncertainty over the revised chains

The total is the weighted sum with subtractive scope and uncertainty
terms; it is intentionally unclamped, spanning [-0.8, 3.3] under the
default weights.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .agents import DisclosureStatus, ReasoningChain
from .claims import Claim, EditAction, EditOperationType
from .textutil import content_token_set

REMOVED = "removed"

NOVELTY_OPS = frozenset({
    EditOperationType.ADD_NOVEL_FEATURE,
    EditOperationType.ADD_LIMITATION,
    EditOperationType.REFRAME_VIA_FIGURE,
    EditOperationType.MODIFY_RELATIONSHIP,
})


class RewardInputError(ValueError):
    """Inputs disagree with each other (bad alignment, bad ranges)."""


@dataclass(frozen=True)
class RewardWeights:
    coverage: float = 1.0
    scope: float = 0.5
    novelty: float = 1.5
    consistency: float = 0.8
    uncertainty: float = 0.3

    def __post_init__(self) -> None:
        for name in ("coverage", "scope", "novelty", "consistency", "uncertainty"):
            if getattr(self, name) < 0:
                raise RewardInputError(f"weight {name} must be non-negative")

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "scope": self.scope,
            "novelty": self.novelty,
            "consistency": self.consistency,
            "uncertainty": self.uncertainty,
        }


@dataclass(frozen=True)
class RewardComponents:
    coverage: float
    scope_penalty: float
    novelty: float
    consistency: float
    uncertainty_penalty: float

    def to_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "scope_penalty": self.scope_penalty,
            "novelty": self.novelty,
            "consistency": self.consistency,
            "uncertainty_penalty": self.uncertainty_penalty,
        }


@dataclass(frozen=True)
class UncertaintyBreakdown:
    sigma_epi: float
    sigma_ale: float
    sigma_total: float


def aggregate(components: RewardComponents, weights: "RewardWeights | None" = None) -> float:
    w = weights or RewardWeights()
    return (
        w.coverage * components.coverage
        - w.scope * components.scope_penalty
        + w.novelty * components.novelty
        + w.consistency * components.consistency
        - w.uncertainty * components.uncertainty_penalty
    )


def decompose_uncertainty(sigma_epi: float, confidence: float) -> UncertaintyBreakdown:
    if not 0.0 <= sigma_epi <= 1.0:
        raise RewardInputError(f"sigma_epi {sigma_epi} outside [0, 1]")
    if not 0.0 <= confidence <= 1.0:
        raise RewardInputError(f"confidence {confidence} outside [0, 1]")
    sigma_ale = 1.0 - confidence
    return UncertaintyBreakdown(sigma_epi, sigma_ale, sigma_epi + sigma_ale)


# ---- components ---------------------------------------------------------

_POSITIVE = (DisclosureStatus.DISCLOSED, DisclosureStatus.PARTIALLY_DISCLOSED)


def compute_coverage(
    original: "Mapping[str, ReasoningChain]",
    revised: "Mapping[str, ReasoningChain]",
    alignment: "Mapping[str, str]",
) -> float:
    """Fraction of originally disclosed or partially disclosed elements
    whose aligned revision is NotDisclosed.  Removed elements count in
    the denominator but never in the numerator."""
    for key in alignment:
        if key not in original:
            raise RewardInputError(f"alignment references unknown element {key!r}")
    positives = [eid for eid, chain in original.items() if chain.status in _POSITIVE]
    if not positives:
        return 0.0
    covered = 0
    for eid in positives:
        if eid not in alignment:
            raise RewardInputError(f"alignment lacks element {eid!r}")
        target = alignment[eid]
        if target == REMOVED:
            continue
        if target not in revised:
            raise RewardInputError(f"alignment points to unknown revised element {target!r}")
        if revised[target].status == DisclosureStatus.NOT_DISCLOSED:
            covered += 1
    return covered / len(positives)


def compute_scope_penalty(original: Claim, revised: Claim) -> float:
    a = content_token_set(original.raw_text)
    b = content_token_set(revised.raw_text)
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def compute_novelty(
    actions: "Sequence[EditAction]",
    revised: "Mapping[str, ReasoningChain]",
    final_id_of: "Callable[[int, str], str] | None" = None,
    eligible_ops: "frozenset[EditOperationType]" = NOVELTY_OPS,
) -> float:
    """Fraction of edited elements that were edited with at least one
    novelty-introducing operation and ended up NotDisclosed.

    ``final_id_of(action_index, target_id)`` maps a target id at edit
    time to the id it carries in the revised claim (or REMOVED); the
    default assumes ids survive unchanged.
    """
    if not actions:
        return 0.0
    resolve = final_id_of or (lambda _k, tid: tid)
    edited: dict[str, bool] = {}
    for k, action in enumerate(actions):
        eligible = action.op_type in eligible_ops
        for tid in action.target_ids:
            # apply this action's own rename before chasing later ones
            if action.op_type == EditOperationType.DROP_ELEMENT:
                live = REMOVED
            elif action.op_type == EditOperationType.MERGE_ELEMENTS and tid in action.target_ids[1:]:
                live = action.target_ids[0]
            elif action.op_type == EditOperationType.SPLIT_ELEMENT:
                live = f"{tid}.1"
            else:
                live = tid
            final = resolve(k, live) if live != REMOVED else REMOVED
            key = final if final != REMOVED else f"{REMOVED}:{tid}"
            edited[key] = edited.get(key, False) or eligible
    hits = 0
    for final, eligible in edited.items():
        if not eligible or final.startswith(f"{REMOVED}:"):
            continue
        chain = revised.get(final)
        if chain is not None and chain.status == DisclosureStatus.NOT_DISCLOSED:
            hits += 1
    return hits / len(edited)


_PREAMBLE_PATTERN = re.compile(r"(?:A|An)\s")
_PREAMBLE_KEYWORD = re.compile(r"\b(?:comprising|consisting\s+of)\b", re.IGNORECASE)
_WORDISH = re.compile(r"[A-Za-z0-9]+")


def _readability(raw_text: str, element_texts: "Sequence[str]") -> float:
    preamble_ok = bool(_PREAMBLE_PATTERN.match(raw_text)) and bool(
        _PREAMBLE_KEYWORD.search(raw_text))
    if not element_texts:
        return 0.0
    ok = 0
    last = len(element_texts) - 1
    for i, text in enumerate(element_texts):
        n_tokens = len(text.split())
        terminated = i < last or text.rstrip().endswith((".", ";", ":"))
        if 3 <= n_tokens <= 80 and terminated:
            ok += 1
    return 0.5 * (1.0 if preamble_ok else 0.0) + 0.5 * (ok / len(element_texts))


def _coherence(raw_text: str) -> float:
    """Fraction of definite references ("the X") whose head noun was
    introduced earlier in the claim."""
    words = [w.lower() for w in _WORDISH.findall(raw_text)]
    refs = 0
    grounded = 0
    seen: set[str] = set()
    for i, word in enumerate(words):
        if word == "the" and i + 1 < len(words):
            refs += 1
            if words[i + 1] in seen:
                grounded += 1
        seen.add(word)
    if refs == 0:
        return 1.0
    return grounded / refs


def compute_consistency(claim: Claim) -> float:
    readability = _readability(claim.raw_text, [e.text for e in claim.elements])
    return readability * _coherence(claim.raw_text)


def compute_uncertainty_penalty(chains: "Iterable[ReasoningChain]") -> float:
    values = [c.uncertainty for c in chains]
    if not values:
        return 0.0
    return sum(values) / len(values)


# ---- alignment and scoring ----------------------------------------------

def alignment_from_actions(original: Claim, actions: "Sequence[EditAction]") -> "dict[str, str]":
    """Map each original element id to its id in the edited claim, or
    REMOVED when an edit dropped (or merged away) the element."""
    current = {eid: eid for eid in original.element_ids()}

    def retarget(old: str, new: str) -> None:
        for src, live in current.items():
            if live == old:
                current[src] = new

    for action in actions:
        op = action.op_type
        if op == EditOperationType.DROP_ELEMENT:
            retarget(action.target_element_id.strip(), REMOVED)
        elif op == EditOperationType.MERGE_ELEMENTS:
            targets = action.target_ids
            for gone in targets[1:]:
                retarget(gone, targets[0])
        elif op == EditOperationType.SPLIT_ELEMENT:
            target = action.target_element_id.strip()
            retarget(target, f"{target}.1")
    return current


def final_id_resolver(actions: "Sequence[EditAction]") -> "Callable[[int, str], str]":
    """Resolver for compute_novelty: where does the element targeted by
    actions[k] live after the remaining edits ran?"""

    def resolve(k: int, tid: str) -> str:
        live = tid
        for action in actions[k + 1:]:
            op = action.op_type
            if op == EditOperationType.DROP_ELEMENT and action.target_element_id.strip() == live:
                return REMOVED
            if op == EditOperationType.MERGE_ELEMENTS:
                targets = action.target_ids
                if live in targets[1:]:
                    live = targets[0]
            elif op == EditOperationType.SPLIT_ELEMENT and action.target_element_id.strip() == live:
                live = f"{live}.1"
        return live

    return resolve


@dataclass(frozen=True)
class RewardScorer:
    weights: RewardWeights = RewardWeights()
    novelty_ops: frozenset = NOVELTY_OPS

    def components(
        self,
        original_claim: Claim,
        original_chains: "Mapping[str, ReasoningChain]",
        revised_claim: Claim,
        revised_chains: "Mapping[str, ReasoningChain]",
        actions: "Sequence[EditAction]",
    ) -> RewardComponents:
        alignment = alignment_from_actions(original_claim, actions)
        return RewardComponents(
            coverage=compute_coverage(original_chains, revised_chains, alignment),
            scope_penalty=compute_scope_penalty(original_claim, revised_claim),
            novelty=compute_novelty(actions, revised_chains, final_id_resolver(actions),
                                    eligible_ops=self.novelty_ops),
            consistency=compute_consistency(revised_claim),
            uncertainty_penalty=compute_uncertainty_penalty(revised_chains.values()),
        )

    def score(
        self,
        original_claim: Claim,
        original_chains: "Mapping[str, ReasoningChain]",
        revised_claim: Claim,
        revised_chains: "Mapping[str, ReasoningChain]",
        actions: "Sequence[EditAction]",
    ) -> "tuple[RewardComponents, float]":
        comp = self.components(original_claim, original_chains,
                               revised_claim, revised_chains, actions)
        return comp, aggregate(comp, self.weights)
