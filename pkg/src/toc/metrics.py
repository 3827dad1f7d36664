"""Evaluation metrics: disclosure F1, text overlap scores, payload health.

All functions are pure and deterministic.  Text metrics tokenize on
whitespace after lowercasing; no stop-word filtering here, since these
compare full surface forms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .agents import DisclosureStatus, ReasoningChain
from .schemas import try_validate_agent_json


class MetricInputError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    coverage_f1: float
    delta_coverage: float
    rouge_l: float
    bleu: float
    json_completeness: float
    chain_entropy: float

    def to_dict(self) -> dict:
        return {
            "coverage_f1": self.coverage_f1,
            "delta_coverage": self.delta_coverage,
            "rouge_l": self.rouge_l,
            "bleu": self.bleu,
            "json_completeness": self.json_completeness,
            "chain_entropy": self.chain_entropy,
        }


_POSITIVE = (DisclosureStatus.DISCLOSED, DisclosureStatus.PARTIALLY_DISCLOSED)


def coverage_f1(predicted: "Sequence[DisclosureStatus]", gold: "Sequence[bool]") -> float:
    """F1 of disclosure detection; Disclosed and PartiallyDisclosed both
    count as positive predictions.  0.0 whenever precision or recall is
    undefined."""
    if len(predicted) != len(gold):
        raise MetricInputError(
            f"predicted ({len(predicted)}) and gold ({len(gold)}) lengths differ")
    tp = fp = fn = 0
    for status, label in zip(predicted, gold):
        positive = status in _POSITIVE
        if positive and label:
            tp += 1
        elif positive and not label:
            fp += 1
        elif not positive and label:
            fn += 1
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def delta_coverage(before: float, after: float) -> float:
    for name, value in (("before", before), ("after", after)):
        if not 0.0 <= value <= 1.0:
            raise MetricInputError(f"{name} coverage {value} outside [0, 1]")
    return after - before


def _lcs_length(a: "Sequence[str]", b: "Sequence[str]") -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[-1]))
        prev = row
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """Longest-common-subsequence F-measure over whitespace tokens."""
    cand = candidate.lower().split()
    ref = reference.lower().split()
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def _ngram_counts(tokens: "list[str]", n: int) -> "Counter[tuple[str, ...]]":
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str) -> float:
    """BLEU-4 with uniform weights, add-one smoothing for n >= 2, and the
    standard brevity penalty.  Single candidate/reference pair."""
    cand = candidate.lower().split()
    ref = reference.lower().split()
    if not cand or not ref:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        total = sum(cand_counts.values())
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        if n == 1:
            if matched == 0:
                return 0.0
            p = matched / total
        else:
            p = (matched + 1) / (total + 1)
        log_sum += 0.25 * math.log(p)
    if len(cand) > len(ref):
        brevity = 1.0
    else:
        brevity = math.exp(1 - len(ref) / len(cand))
    return brevity * math.exp(log_sum)


def json_completeness(raw_responses: "Sequence[str]", schema: str) -> float:
    """Fraction of raw payloads that pass strict validation; 1.0 for an
    empty batch."""
    if not raw_responses:
        return 1.0
    ok = sum(1 for raw in raw_responses if try_validate_agent_json(raw, schema)[0] is not None)
    return ok / len(raw_responses)


def chain_entropy(chains: "Iterable[ReasoningChain]") -> float:
    """Shannon entropy (natural log) of the status distribution; 0.0 for
    an empty batch, at most ln(3)."""
    counts = Counter(c.status for c in chains)
    total = sum(counts.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in counts.values():
        p = count / total
        entropy -= p * math.log(p)
    return entropy
