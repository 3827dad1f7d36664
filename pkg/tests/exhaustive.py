"""Brute-force enumeration of every valid edit sequence up to a depth.

This is the independent oracle the search engine is measured against:
it shares the agents' candidate generation and the reward scorer but
performs plain depth-first enumeration with no tree statistics, no
widening, and no gating.  Keep it dumb; its value is being obviously
correct.
"""

from dataclasses import dataclass

from toc.agents import AgentSuite, DisclosureStatus, NothingToEditError
from toc.claims import (
    Claim,
    ClaimModelError,
    EditAction,
    DEFAULT_PRECEDENCE_RULES,
    apply_action,
    validate_sequence,
)
from toc.reward import RewardScorer

EDITABLE = (DisclosureStatus.DISCLOSED, DisclosureStatus.PARTIALLY_DISCLOSED)


@dataclass
class Enumeration:
    best_reward: float
    best_claims: "list[Claim]"        # every argmax claim, order found
    best_sequences: "list[tuple[EditAction, ...]]"
    sequence_count: int

    @property
    def best_texts(self) -> "list[str]":
        return [c.raw_text for c in self.best_claims]


class _Memo:
    """Per-claim-text caches so enumeration cost scales with distinct
    states, not with sequences."""

    def __init__(self, suite: AgentSuite, prior_art):
        self.suite = suite
        self.prior_art = list(prior_art)
        self.chains: dict[str, dict] = {}
        self.candidates: dict[str, list[EditAction]] = {}

    def chains_for(self, claim: Claim) -> dict:
        key = claim.raw_text
        if key not in self.chains:
            self.chains[key] = self.suite.examine_claim(claim, self.prior_art)
        return self.chains[key]

    def candidates_for(self, claim: Claim) -> "list[EditAction]":
        key = claim.raw_text
        if key not in self.candidates:
            chains = self.chains_for(claim)
            found: list[EditAction] = []
            for element in claim.elements:
                chain = chains[element.element_id]
                if chain.status not in EDITABLE:
                    continue
                try:
                    plan = self.suite.plan_edits(element, chain)
                except NothingToEditError:
                    continue
                found.extend(plan.actions)
            self.candidates[key] = found
        return self.candidates[key]


def all_not_disclosed(chains: dict) -> bool:
    return all(c.status == DisclosureStatus.NOT_DISCLOSED for c in chains.values())


def enumerate_sequences(claim: Claim, prior_art, suite: AgentSuite, max_depth: int,
                        rules=DEFAULT_PRECEDENCE_RULES):
    """Yield (actions, claim) for every valid sequence of length <=
    max_depth, starting with the empty sequence.  A sequence is valid
    when every prefix applies cleanly, respects the precedence rules,
    changes the claim text, and never extends a fully undisclosed
    claim."""
    memo = _Memo(suite, prior_art)

    def walk(current: Claim, history: "tuple[EditAction, ...]"):
        yield history, current
        if len(history) >= max_depth:
            return
        if all_not_disclosed(memo.chains_for(current)):
            return
        for action in memo.candidates_for(current):
            if validate_sequence(list(history) + [action], rules):
                continue
            try:
                nxt = apply_action(current, action)
            except ClaimModelError:
                continue
            if nxt.raw_text == current.raw_text:
                continue
            yield from walk(nxt, history + (action,))

    yield from walk(claim, ())


def best_by_enumeration(claim: Claim, prior_art, suite: AgentSuite,
                        scorer: "RewardScorer | None" = None, max_depth: int = 3,
                        tolerance: float = 1e-9) -> Enumeration:
    """Maximum reward over every enumerated sequence, with the full
    argmax set (ties are common: edit order often does not change the
    final token set)."""
    scorer = scorer or RewardScorer()
    memo = _Memo(suite, prior_art)
    original_chains = memo.chains_for(claim)
    best = float("-inf")
    claims: list[Claim] = []
    sequences: list[tuple[EditAction, ...]] = []
    count = 0
    for history, candidate in enumerate_sequences(claim, prior_art, suite, max_depth):
        count += 1
        revised_chains = memo.chains_for(candidate)
        _, reward = scorer.score(claim, original_chains, candidate,
                                 revised_chains, list(history))
        if reward > best + tolerance:
            best = reward
            claims = [candidate]
            sequences = [history]
        elif abs(reward - best) <= tolerance:
            claims.append(candidate)
            sequences.append(history)
    return Enumeration(best, claims, sequences, count)
