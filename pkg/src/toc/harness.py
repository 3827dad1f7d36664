"""Batch harnesses: module ablations, parameter sensitivity grids, and
reward-curve serialization.

Every run derives its seed from the base seed and the record id, so
the same record gets identical agent noise across variants and across
harnesses.  CSV output is byte-stable on re-run.
"""

from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass

from .agents import (
    AgentBackendConfig,
    AgentSuite,
    DisclosureStatus,
    ReasoningChain,
)
from .corpus import CorpusRecord
from .reward import RewardScorer, RewardWeights
from .search import InvariantViolation, SearchConfig, SearchEngine, SearchResult
from .textutil import split_sentences

ABLATION_VARIANTS = ("full", "no-gating", "no-widening", "single-agent")
NO_WIDENING_ALPHA = 1e9

ABLATION_HEADER = ("variant", "record_id", "seed", "coverage_f1",
                   "delta_coverage", "scope_retention", "novelty",
                   "consistency", "uncertainty", "best_reward")
SENSITIVITY_HEADER = ("sigma_max", "alpha", "t_max", "record_id",
                      "best_reward", "coverage")
CURVE_HEADER = ("iteration", "best_so_far")

MISSING = "n/a"


def derive_seed(base_seed: int, record_id: str) -> int:
    """Stable per-record seed shared by every harness and variant."""
    return (zlib.crc32(record_id.encode("utf-8")) + base_seed * 1000003) % (2 ** 31)


class SingleExaminerSuite:
    """Degenerate examiner for the single-agent ablation: every element
    is judged fully disclosed with total confidence, so consensus
    uncertainty never exists.  The editor is untouched."""

    def __init__(self, inner: AgentSuite):
        self.inner = inner

    def examine_claim(self, claim, prior_art):
        evidence = "the reference as a whole"
        if prior_art:
            sentences = split_sentences(prior_art[0].description)
            if sentences:
                evidence = sentences[0]
        return {
            element.element_id: ReasoningChain(
                status=DisclosureStatus.DISCLOSED,
                evidence_text=evidence,
                reasoning="single examiner treats every element as disclosed",
                confidence=1.0,
                uncertainty=0.0,
            )
            for element in claim.elements
        }

    def plan_edits(self, element, chain):
        return self.inner.plan_edits(element, chain)


@dataclass
class RunOutcome:
    record_id: str
    seed: int
    result: "SearchResult | None"
    engine: "SearchEngine | None"
    error: "str | None" = None


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(header: "tuple[str, ...]", rows: "list[tuple]") -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def _nd_fraction(chains) -> float:
    total = len(chains)
    if not total:
        return 0.0
    nd = sum(1 for c in chains.values()
             if c.status == DisclosureStatus.NOT_DISCLOSED)
    return nd / total


def _coverage_f1_for(record: CorpusRecord, chains) -> "float | str":
    if not record.labels:
        return MISSING
    from .metrics import coverage_f1
    predicted = []
    gold = []
    for label in record.labels:
        chain = chains.get(label.element_id)
        if chain is None:
            return MISSING
        predicted.append(chain.status)
        gold.append(label.disclosed)
    return coverage_f1(predicted, gold)


def _run_one(record: CorpusRecord, cfg: SearchConfig,
             backend: AgentBackendConfig, weights: RewardWeights,
             single_examiner: bool) -> RunOutcome:
    seed = cfg.seed
    suite = AgentSuite(dataclasses.replace(backend, seed=seed))
    if single_examiner:
        suite = SingleExaminerSuite(suite)
    engine = SearchEngine(record.claim, list(record.prior_art), cfg=cfg,
                          suite=suite, scorer=RewardScorer(weights=weights))
    try:
        result = engine.run()
    except Exception as exc:
        return RunOutcome(record.record_id, seed, None, None,
                          error=f"{type(exc).__name__}: {exc}")
    return RunOutcome(record.record_id, seed, result, engine)


def _variant_config(variant: str, base: SearchConfig, seed: int) -> SearchConfig:
    if variant in ("full", "single-agent"):
        return dataclasses.replace(base, seed=seed)
    if variant == "no-gating":
        return dataclasses.replace(base, sigma_max_epi=1.0, seed=seed)
    if variant == "no-widening":
        return dataclasses.replace(base, alpha=NO_WIDENING_ALPHA, seed=seed)
    raise ValueError(f"unknown ablation variant {variant!r}")


@dataclass
class AblationReport:
    rows: "list[tuple]"
    csv_text: str
    outcomes: "dict[tuple[str, str], RunOutcome]"


def run_ablation(records: "list[CorpusRecord]",
                 variants: "tuple[str, ...] | list[str]" = ABLATION_VARIANTS,
                 base_cfg: "SearchConfig | None" = None,
                 backend: "AgentBackendConfig | None" = None,
                 weights: "RewardWeights | None" = None,
                 seed: int = 0) -> AblationReport:
    """One search per (variant, record).  Failed records produce rows
    with missing metric cells; the run continues."""
    variants = tuple(variants)
    if "full" not in variants:
        raise ValueError("ablation variants must include 'full'")
    for variant in variants:
        if variant not in ABLATION_VARIANTS:
            raise ValueError(f"unknown ablation variant {variant!r}")
    base_cfg = base_cfg or SearchConfig()
    backend = backend or AgentBackendConfig(kind="mock")
    weights = weights or RewardWeights()
    rows = []
    outcomes = {}
    for variant in variants:
        for record in records:
            record_seed = derive_seed(seed, record.record_id)
            cfg = _variant_config(variant, base_cfg, record_seed)
            outcome = _run_one(record, cfg, backend, weights,
                               single_examiner=(variant == "single-agent"))
            outcomes[(variant, record.record_id)] = outcome
            if outcome.result is None:
                rows.append((variant, record.record_id, record_seed,
                             MISSING, MISSING, MISSING, MISSING, MISSING,
                             MISSING, MISSING))
                continue
            engine = outcome.engine
            result = outcome.result
            original_chains = engine.chain_cache[record.claim.raw_text]
            best_chains = engine.chain_cache[result.best_claim.raw_text]
            components = result.best_components
            rows.append((
                variant,
                record.record_id,
                record_seed,
                _coverage_f1_for(record, original_chains),
                _nd_fraction(best_chains) - _nd_fraction(original_chains),
                1.0 - components.scope_penalty,
                components.novelty,
                components.consistency,
                components.uncertainty_penalty,
                result.best_reward,
            ))
    return AblationReport(rows=rows, csv_text=_csv(ABLATION_HEADER, rows),
                          outcomes=outcomes)


@dataclass
class SensitivityReport:
    rows: "list[tuple]"
    csv_text: str
    outcomes: "dict[tuple[str, float, float, int], RunOutcome]"


def run_sensitivity(records: "list[CorpusRecord]",
                    sigma_max_values: "list[float]",
                    alpha_values: "list[float]",
                    t_max_values: "list[int]",
                    base_cfg: "SearchConfig | None" = None,
                    backend: "AgentBackendConfig | None" = None,
                    weights: "RewardWeights | None" = None,
                    seed: int = 0) -> SensitivityReport:
    """Grid sweep; one row per record per (sigma_max, alpha, t_max)
    cell, records outermost, cells in the given axis order."""
    if not (sigma_max_values and alpha_values and t_max_values):
        raise ValueError("every grid axis needs at least one value")
    base_cfg = base_cfg or SearchConfig()
    backend = backend or AgentBackendConfig(kind="mock")
    weights = weights or RewardWeights()
    cells = [(s, a, t) for s in sigma_max_values
             for a in alpha_values for t in t_max_values]
    rows = []
    outcomes = {}
    for record in records:
        record_seed = derive_seed(seed, record.record_id)
        for sigma_max, alpha, t_max in cells:
            cfg = dataclasses.replace(base_cfg, sigma_max_epi=sigma_max,
                                      alpha=alpha, t_max=t_max,
                                      seed=record_seed)
            outcome = _run_one(record, cfg, backend, weights,
                               single_examiner=False)
            outcomes[(record.record_id, sigma_max, alpha, t_max)] = outcome
            if outcome.result is None:
                rows.append((sigma_max, alpha, t_max, record.record_id,
                             MISSING, MISSING))
                continue
            result = outcome.result
            rows.append((sigma_max, alpha, t_max, record.record_id,
                         result.best_reward,
                         result.best_components.coverage))
    return SensitivityReport(rows=rows,
                             csv_text=_csv(SENSITIVITY_HEADER, rows),
                             outcomes=outcomes)


def reward_curve(trace: "list[tuple[int, float]]") -> str:
    """Serialize a best-so-far trace, refusing non-monotone input."""
    previous = None
    for iteration, best in trace:
        if previous is not None and best < previous:
            raise InvariantViolation(
                f"best_so_far decreased at iteration {iteration}")
        previous = best
    return _csv(CURVE_HEADER, [(i, r) for i, r in trace])
