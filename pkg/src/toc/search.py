"""Tree search over claim edit sequences.

The engine grows a tree whose nodes are claim revisions.  Each
iteration selects a node by UCT descent, expands it with planner
candidates under a progressive widening limit, runs a short greedy
rollout from the new child, and backpropagates the aggregate reward of
the rollout's final claim.  Candidates whose triggering examiner chain
carries high epistemic uncertainty are gated: pruned outright, frozen
for human review, or allowed with the rollout switched to a
confidence-driven step policy, depending on the configured policy.

Everything observable (audit trail, reward trace, snapshots, results)
is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from .agents import (
    AgentBackendConfig,
    AgentFailure,
    AgentSuite,
    DisclosureStatus,
    NothingToEditError,
    ReasoningChain,
)
from .audit import AuditTrail
from .claims import (
    Claim,
    ClaimModelError,
    EditAction,
    PriorArtDocument,
    apply_action,
    validate_sequence,
)
from .reward import RewardComponents, RewardScorer, decompose_uncertainty


class SearchExhausted(Exception):
    """Selection cannot leave the root: it is saturated and every child
    is ineligible (gated, frozen, or rejected)."""


class InvariantViolation(AssertionError):
    """A debug-mode structural check failed."""


class InterventionNotFound(KeyError):
    pass


class InterventionConflict(Exception):
    """The intervention was already decided."""


class SimulationMode(str, Enum):
    ENTROPY_BASED = "entropy"
    CONFIDENCE_BASED = "confidence"
    HYBRID = "hybrid"


class GatingPolicy(str, Enum):
    PRUNE = "prune"
    FLAG_FOR_HUMAN = "flag-for-human"
    STRATEGY_SWITCH = "strategy-switch"


@dataclass(frozen=True)
class SearchConfig:
    exploration_c: float = 1.414
    sigma_max_epi: float = 0.2
    alpha: float = 2.0
    delta: float = 0.5
    t_max: int = 800
    epsilon: float = 0.01
    t_search_secs: float = 3600.0
    n_fail: int = 20
    rollout_depth: int = 3
    stall_window: int = 50
    sim_mode: SimulationMode = SimulationMode.HYBRID
    gating_policy: GatingPolicy = GatingPolicy.PRUNE
    hybrid_sigma_weight: float = 0.6
    hybrid_confidence_weight: float = 0.4
    intervention_timeout_iters: int = 100
    seed: int = 0
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if self.exploration_c < 0:
            raise ValueError("exploration_c must be >= 0")
        if not 0.0 <= self.sigma_max_epi <= 1.0:
            raise ValueError("sigma_max_epi must be in [0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.t_search_secs <= 0:
            raise ValueError("t_search_secs must be > 0")
        if self.n_fail < 1:
            raise ValueError("n_fail must be >= 1")
        if self.rollout_depth < 0:
            raise ValueError("rollout_depth must be >= 0")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")
        if self.intervention_timeout_iters < 1:
            raise ValueError("intervention_timeout_iters must be >= 1")
        total = self.hybrid_sigma_weight + self.hybrid_confidence_weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError("hybrid weights must sum to 1")
        if min(self.hybrid_sigma_weight, self.hybrid_confidence_weight) < 0:
            raise ValueError("hybrid weights must be >= 0")
        if not isinstance(self.sim_mode, SimulationMode):
            object.__setattr__(self, "sim_mode", SimulationMode(self.sim_mode))
        if not isinstance(self.gating_policy, GatingPolicy):
            object.__setattr__(self, "gating_policy", GatingPolicy(self.gating_policy))


# ---- tree structure -----------------------------------------------------


@dataclass
class SearchNode:
    node_id: int
    claim: Claim
    parent: "SearchNode | None" = None
    action: "EditAction | None" = None
    op_history: "tuple[EditAction, ...]" = ()
    chain: "ReasoningChain | None" = None
    sigma_epi: float = 0.0
    sigma_ale: float = 0.0
    q_value: float = 0.0
    visits: int = 0
    own_sims: int = 0
    creation_index: int = 0
    depth: int = 0
    terminal: bool = False
    intervention_state: str = "none"
    children: "list[SearchNode]" = field(default_factory=list)
    candidates: "list[CandidateEdit] | None" = None
    next_candidate: int = 0

    def mean_q(self) -> float:
        return self.q_value / self.visits if self.visits else 0.0

    def path_ids(self) -> "tuple[int, ...]":
        ids = []
        node: "SearchNode | None" = self
        while node is not None:
            ids.append(node.node_id)
            node = node.parent
        return tuple(reversed(ids))


@dataclass(frozen=True)
class CandidateEdit:
    """One planner action with its triggering chain, pre-applied."""

    action: EditAction
    chain: ReasoningChain
    sigma_epi: float
    sigma_ale: float
    result: "Claim | None"


def uct_score(node: SearchNode, parent_visits: int, exploration_c: float) -> float:
    """Mean value plus the exploration bonus; unvisited nodes sort first."""
    if node.visits == 0:
        return math.inf
    exploit = node.q_value / node.visits
    explore = exploration_c * math.sqrt(math.log(parent_visits) / node.visits)
    return exploit + explore


def widening_limit(visits: int, alpha: float, delta: float) -> int:
    """Maximum child count allowed for a node with the given visits."""
    return max(1, math.ceil(alpha * visits ** delta))


def _eligible(child: SearchNode, cfg: SearchConfig) -> bool:
    if child.intervention_state == "rejected":
        return False
    if child.intervention_state == "flagged":
        return False
    if child.intervention_state == "approved":
        return True
    return child.sigma_epi <= cfg.sigma_max_epi


def _expandable(node: SearchNode, cfg: SearchConfig) -> bool:
    if node.terminal:
        return False
    if node.candidates is None:
        return True
    if node.next_candidate >= len(node.candidates):
        return False
    return len(node.children) < widening_limit(node.visits, cfg.alpha, cfg.delta)


def select(root: SearchNode, cfg: SearchConfig) -> SearchNode:
    """Walk down by UCT until reaching a terminal, expandable, or
    dead-end node.  Ineligible children (frozen, rejected, or above the
    uncertainty gate without approval) never receive descents.  Ties
    break to the earliest-created child.

    Raises SearchExhausted when the root itself is saturated with no
    eligible child.
    """
    node = root
    while True:
        if node.terminal or _expandable(node, cfg):
            return node
        best = None
        best_score = -math.inf
        for child in node.children:
            if not _eligible(child, cfg):
                continue
            score = uct_score(child, node.visits, cfg.exploration_c)
            if score > best_score:
                best = child
                best_score = score
        if best is None:
            if node is root:
                raise SearchExhausted(
                    "root is saturated and every child is gated or rejected")
            return node
        node = best


def backpropagate(leaf: SearchNode, reward: float) -> "tuple[int, ...]":
    """Add the reward and one visit to every node from leaf to root.
    Returns the updated node ids leaf-first."""
    ids = []
    node: "SearchNode | None" = leaf
    while node is not None:
        node.q_value += reward
        node.visits += 1
        ids.append(node.node_id)
        node = node.parent
    return tuple(ids)


# ---- human interventions -------------------------------------------------


@dataclass
class InterventionItem:
    item_id: int
    node_id: int
    created_iteration: int
    sigma_epi: float
    action: dict
    chain: dict
    claim_text: str
    status: str = "pending"
    decided_by: str = ""

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "node_id": self.node_id,
            "created_iteration": self.created_iteration,
            "sigma_epi": self.sigma_epi,
            "action": self.action,
            "chain": self.chain,
            "claim_text": self.claim_text,
            "status": self.status,
            "decided_by": self.decided_by,
        }


class InterventionQueue:
    """Thread-safe queue of frozen nodes awaiting a reviewer decision.

    Decisions may arrive from any thread; the engine applies them at
    iteration boundaries.  Items pending longer than the configured
    timeout are decided as rejected."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: "dict[int, InterventionItem]" = {}
        self._unapplied: "list[int]" = []
        self._next_id = 1

    def add(self, node_id: int, iteration: int, sigma_epi: float,
            action: dict, chain: dict, claim_text: str) -> InterventionItem:
        with self._lock:
            item = InterventionItem(
                item_id=self._next_id,
                node_id=node_id,
                created_iteration=iteration,
                sigma_epi=sigma_epi,
                action=action,
                chain=chain,
                claim_text=claim_text,
            )
            self._items[item.item_id] = item
            self._next_id += 1
            return item

    def decide(self, item_id: int, decision: str) -> InterventionItem:
        if decision not in ("approved", "rejected"):
            raise ValueError(f"unknown decision {decision!r}")
        with self._lock:
            if item_id not in self._items:
                raise InterventionNotFound(item_id)
            item = self._items[item_id]
            if item.status != "pending":
                raise InterventionConflict(
                    f"intervention {item_id} already {item.status}")
            item.status = decision
            item.decided_by = "reviewer"
            self._unapplied.append(item_id)
            return item

    def expire(self, iteration: int, timeout_iters: int,
               default: str = "rejected") -> None:
        with self._lock:
            for item in self._items.values():
                if (item.status == "pending"
                        and iteration - item.created_iteration >= timeout_iters):
                    item.status = default
                    item.decided_by = "timeout"
                    self._unapplied.append(item.item_id)

    def take_resolved(self) -> "list[InterventionItem]":
        with self._lock:
            out = [self._items[i] for i in self._unapplied]
            self._unapplied = []
            return out

    def pending_count(self) -> int:
        with self._lock:
            return sum(1 for i in self._items.values() if i.status == "pending")

    def snapshot(self) -> "list[dict]":
        with self._lock:
            return [item.to_dict() for item in self._items.values()]


# ---- results -------------------------------------------------------------


@dataclass
class SearchResult:
    best_claim: Claim
    best_reward: float
    best_components: RewardComponents
    best_path: "tuple[EditAction, ...]"
    best_node_ids: "tuple[int, ...]"
    reward_trace: "list[tuple[int, float]]"
    termination_reason: str
    iterations: int
    simulations: int
    node_count: int
    flagged_node_ids: "tuple[int, ...]"

    def to_dict(self) -> dict:
        return {
            "best_claim": self.best_claim.to_dict(),
            "best_claim_text": self.best_claim.raw_text,
            "best_reward": self.best_reward,
            "best_components": self.best_components.to_dict(),
            "best_path": [a.to_dict() for a in self.best_path],
            "best_node_ids": list(self.best_node_ids),
            "reward_trace": [[i, r] for i, r in self.reward_trace],
            "termination_reason": self.termination_reason,
            "iterations": self.iterations,
            "simulations": self.simulations,
            "node_count": self.node_count,
            "flagged_node_ids": list(self.flagged_node_ids),
        }


@dataclass
class _Best:
    reward: float
    claim: Claim
    components: RewardComponents
    path: "tuple[EditAction, ...]"
    node_ids: "tuple[int, ...]"
    node_id: int


@dataclass
class _SimOutcome:
    claim: Claim
    reward: float
    components: RewardComponents
    rollout: "tuple[EditAction, ...]"
    steps: int
    mode: SimulationMode
    truncated: bool


# ---- engine ----------------------------------------------------------------


class SearchEngine:
    """Single-run search state.  Construct once per claim and call
    ``run``.  ``snapshot`` always holds the latest published tree view
    and may be read from other threads."""

    def __init__(self, claim: Claim, prior_art: "list[PriorArtDocument]",
                 cfg: "SearchConfig | None" = None,
                 suite: "AgentSuite | None" = None,
                 scorer: "RewardScorer | None" = None,
                 trail: "AuditTrail | None" = None,
                 queue: "InterventionQueue | None" = None,
                 iteration_delay_secs: float = 0.0):
        self.cfg = cfg or SearchConfig()
        self.suite = suite or AgentSuite(AgentBackendConfig(kind="mock", seed=self.cfg.seed))
        self.scorer = scorer or RewardScorer()
        self.trail = trail or AuditTrail()
        self.queue = queue or InterventionQueue()
        self.prior_art = list(prior_art)
        self.iteration_delay_secs = iteration_delay_secs

        self.root = SearchNode(node_id=0, claim=claim)
        self.nodes: "dict[int, SearchNode]" = {0: self.root}
        self.snapshot: dict = {}
        self.reward_trace: "list[tuple[int, float]]" = []
        self.chain_cache: "dict[str, dict[str, ReasoningChain]]" = {}
        self._plan_cache: "dict[tuple[str, str], tuple[EditAction, ...]]" = {}
        self._candidate_cache: "dict[str, tuple[CandidateEdit, ...]]" = {}
        self._claim_texts: "dict[int, str]" = {0: claim.raw_text}
        self._listeners: "list" = []
        self._flagged_ids: "list[int]" = []
        self._simulations = 0
        self._mode_switched = False
        self._abort = threading.Event()
        self._root_chains: "dict[str, ReasoningChain]" = {}
        self._best: "_Best | None" = None

    # -- external controls --

    def add_listener(self, callback) -> None:
        self._listeners.append(callback)

    def abort(self) -> None:
        self._abort.set()

    # -- agent access, cached per claim text --

    def _chains(self, claim: Claim) -> "dict[str, ReasoningChain]":
        cached = self.chain_cache.get(claim.raw_text)
        if cached is None:
            cached = self.suite.examine_claim(claim, self.prior_art)
            self.chain_cache[claim.raw_text] = cached
        return cached

    def _plan(self, claim: Claim, element_id: str,
              chain: ReasoningChain) -> "tuple[EditAction, ...]":
        key = (claim.raw_text, element_id)
        cached = self._plan_cache.get(key)
        if cached is None:
            element = claim.get(element_id)
            try:
                cached = self.suite.plan_edits(element, chain).actions
            except NothingToEditError:
                cached = ()
            self._plan_cache[key] = cached
        return cached

    def _claim_candidates(self, claim: Claim) -> "tuple[CandidateEdit, ...]":
        """All planner actions for the claim's disclosed or partially
        disclosed elements, pre-applied, ranked by confidence (stable
        over element then plan order)."""
        cached = self._candidate_cache.get(claim.raw_text)
        if cached is not None:
            return cached
        chains = self._chains(claim)
        out: "list[CandidateEdit]" = []
        for element in claim.elements:
            chain = chains[element.element_id]
            if chain.status == DisclosureStatus.NOT_DISCLOSED:
                continue
            split = decompose_uncertainty(chain.uncertainty, chain.confidence)
            for action in self._plan(claim, element.element_id, chain):
                try:
                    result = apply_action(claim, action)
                except ClaimModelError:
                    result = None
                if result is not None and result.raw_text == claim.raw_text:
                    result = None
                out.append(CandidateEdit(
                    action=action,
                    chain=chain,
                    sigma_epi=split.sigma_epi,
                    sigma_ale=split.sigma_ale,
                    result=result,
                ))
        out.sort(key=lambda c: -c.action.confidence)
        cached = tuple(out)
        self._candidate_cache[claim.raw_text] = cached
        return cached

    def _usable(self, claim: Claim, history: "list[EditAction]") -> "list[CandidateEdit]":
        """Candidates that apply cleanly, change the text, and keep the
        action sequence admissible under the precedence rules."""
        out = []
        for cand in self._claim_candidates(claim):
            if cand.result is None:
                continue
            if validate_sequence(history + [cand.action]):
                continue
            out.append(cand)
        return out

    # -- expansion --

    def _make_child(self, parent: SearchNode, cand: CandidateEdit) -> SearchNode:
        node_id = len(self.nodes)
        child = SearchNode(
            node_id=node_id,
            claim=cand.result,
            parent=parent,
            action=cand.action,
            op_history=parent.op_history + (cand.action,),
            chain=cand.chain,
            sigma_epi=cand.sigma_epi,
            sigma_ale=cand.sigma_ale,
            creation_index=node_id,
            depth=parent.depth + 1,
        )
        parent.children.append(child)
        self.nodes[node_id] = child
        self._claim_texts[node_id] = child.claim.raw_text
        return child

    def _expand(self, node: SearchNode, iteration: int) -> "list[SearchNode]":
        """Create children for the node up to its widening headroom.
        Gated candidates are pruned, frozen, or admitted with a rollout
        strategy switch depending on policy.  Marks the node terminal
        when it has no usable candidates at all."""
        cfg = self.cfg
        if node.candidates is None:
            node.candidates = self._usable(node.claim, list(node.op_history))
            if not node.candidates:
                node.terminal = True
                return []
        created: "list[SearchNode]" = []
        limit = widening_limit(node.visits, cfg.alpha, cfg.delta)
        while node.next_candidate < len(node.candidates) and len(node.children) < limit:
            rank = node.next_candidate
            cand = node.candidates[rank]
            node.next_candidate += 1
            gated = cand.sigma_epi > cfg.sigma_max_epi
            if gated and cfg.gating_policy == GatingPolicy.PRUNE:
                self.trail.emit(
                    iteration, "gate", node.node_id,
                    action=cand.action.to_dict(),
                    chain=cand.chain.to_dict(),
                    info={"decision": "pruned", "sigma_epi": cand.sigma_epi,
                          "policy": cfg.gating_policy.value},
                )
                continue
            child = self._make_child(node, cand)
            self.trail.emit(
                iteration, "expand", child.node_id,
                action=cand.action.to_dict(),
                claim_before=node.claim.raw_text,
                claim_after=child.claim.raw_text,
                chain=cand.chain.to_dict(),
                info={"parent_id": node.node_id, "rank": rank,
                      "sigma_epi": cand.sigma_epi},
            )
            if gated and cfg.gating_policy == GatingPolicy.FLAG_FOR_HUMAN:
                child.intervention_state = "flagged"
                self._flagged_ids.append(child.node_id)
                item = self.queue.add(
                    child.node_id, iteration, cand.sigma_epi,
                    cand.action.to_dict(), cand.chain.to_dict(),
                    child.claim.raw_text)
                self.trail.emit(
                    iteration, "gate", child.node_id,
                    action=cand.action.to_dict(),
                    chain=cand.chain.to_dict(),
                    info={"decision": "flagged", "sigma_epi": cand.sigma_epi,
                          "policy": cfg.gating_policy.value,
                          "item_id": item.item_id},
                )
            elif gated and cfg.gating_policy == GatingPolicy.STRATEGY_SWITCH:
                self._mode_switched = True
                self.trail.emit(
                    iteration, "gate", child.node_id,
                    action=cand.action.to_dict(),
                    chain=cand.chain.to_dict(),
                    info={"decision": "mode-switch", "sigma_epi": cand.sigma_epi,
                          "policy": cfg.gating_policy.value},
                )
            created.append(child)
        return created

    # -- simulation --

    def _step_scores(self, cands: "list[CandidateEdit]",
                     mode: SimulationMode) -> "list[float]":
        if mode == SimulationMode.ENTROPY_BASED:
            return [c.sigma_epi for c in cands]
        if mode == SimulationMode.CONFIDENCE_BASED:
            return [c.action.confidence for c in cands]
        sigmas = [c.sigma_epi for c in cands]
        lo, hi = min(sigmas), max(sigmas)
        span = hi - lo
        if span <= 0.0:
            norm = [1.0] * len(cands)
        else:
            norm = [(s - lo) / span for s in sigmas]
        w_s = self.cfg.hybrid_sigma_weight
        w_c = self.cfg.hybrid_confidence_weight
        return [w_s * n + w_c * c.action.confidence for n, c in zip(norm, cands)]

    def _rollout_filter(self, cands: "list[CandidateEdit]") -> "list[CandidateEdit]":
        if self.cfg.gating_policy == GatingPolicy.STRATEGY_SWITCH:
            return cands
        return [c for c in cands if c.sigma_epi <= self.cfg.sigma_max_epi]

    def _simulate(self, node: SearchNode, iteration: int) -> _SimOutcome:
        """Greedy rollout from the node's claim, at most rollout_depth
        steps, stopping early once every element is judged not
        disclosed.  Agent failures truncate the rollout at the last
        scorable claim.  Raises AgentFailure only when the node's own
        claim cannot be examined."""
        cfg = self.cfg
        mode = cfg.sim_mode
        if (cfg.gating_policy == GatingPolicy.STRATEGY_SWITCH
                and self._mode_switched):
            mode = SimulationMode.CONFIDENCE_BASED
        claim = node.claim
        chains = self._chains(claim)
        history = list(node.op_history)
        rollout: "list[EditAction]" = []
        truncated = False
        for _ in range(cfg.rollout_depth):
            if all(c.status == DisclosureStatus.NOT_DISCLOSED
                   for c in chains.values()):
                break
            try:
                cands = self._rollout_filter(self._usable(claim, history))
            except AgentFailure:
                truncated = True
                break
            if not cands:
                break
            step_mode = mode
            if (cfg.gating_policy == GatingPolicy.STRATEGY_SWITCH
                    and any(c.sigma_epi > cfg.sigma_max_epi for c in cands)):
                step_mode = SimulationMode.CONFIDENCE_BASED
                mode = step_mode
            scores = self._step_scores(cands, step_mode)
            best_i = 0
            for i in range(1, len(cands)):
                if scores[i] > scores[best_i]:
                    best_i = i
            pick = cands[best_i]
            try:
                next_chains = self._chains(pick.result)
            except AgentFailure:
                truncated = True
                break
            claim = pick.result
            chains = next_chains
            history.append(pick.action)
            rollout.append(pick.action)
        components, reward = self.scorer.score(
            self.root.claim, self._root_chains, claim, chains, history)
        return _SimOutcome(
            claim=claim,
            reward=reward,
            components=components,
            rollout=tuple(rollout),
            steps=len(rollout),
            mode=mode,
            truncated=truncated,
        )

    # -- interventions --

    def _drain_interventions(self, iteration: int) -> None:
        self.queue.expire(iteration, self.cfg.intervention_timeout_iters)
        for item in self.queue.take_resolved():
            node = self.nodes.get(item.node_id)
            if node is None:
                continue
            node.intervention_state = item.status
            self.trail.emit(
                iteration, "intervention", item.node_id,
                info={"item_id": item.item_id, "decision": item.status,
                      "decided_by": item.decided_by},
            )

    # -- bookkeeping --

    def _update_best(self, sim_node: SearchNode, outcome: _SimOutcome) -> None:
        if self._best is not None and outcome.reward <= self._best.reward:
            return
        self._best = _Best(
            reward=outcome.reward,
            claim=outcome.claim,
            components=outcome.components,
            path=sim_node.op_history + outcome.rollout,
            node_ids=sim_node.path_ids(),
            node_id=sim_node.node_id,
        )

    def _termination_reason(self, iterations_done: int, stall: int,
                            fails: int, started: float) -> "str | None":
        cfg = self.cfg
        if self._abort.is_set():
            return "human-abort"
        if iterations_done >= cfg.t_max:
            return "max-iterations"
        if stall >= cfg.stall_window:
            return "stall"
        if time.monotonic() - started > cfg.t_search_secs:
            return "time-budget"
        if fails >= cfg.n_fail:
            return "failure-budget"
        return None

    def _node_view(self, node: SearchNode) -> dict:
        return {
            "node_id": node.node_id,
            "parent_id": node.parent.node_id if node.parent else None,
            "depth": node.depth,
            "visits": node.visits,
            "own_sims": node.own_sims,
            "mean_q": node.mean_q(),
            "sigma_epi": node.sigma_epi,
            "sigma_ale": node.sigma_ale,
            "intervention_state": node.intervention_state,
            "terminal": node.terminal,
            "gated": node.sigma_epi > self.cfg.sigma_max_epi,
            "action": node.action.to_dict() if node.action else None,
            "claim_text": node.claim.raw_text,
        }

    def _publish(self, iteration: int, done: bool, reason: "str | None") -> None:
        snap = {
            "iteration": iteration,
            "done": done,
            "termination_reason": reason,
            "best_reward": self._best.reward if self._best else None,
            "best_node_id": self._best.node_id if self._best else None,
            "node_count": len(self.nodes),
            "pending_interventions": self.queue.pending_count(),
            "sigma_max_epi": self.cfg.sigma_max_epi,
            "gating_policy": self.cfg.gating_policy.value,
            "reward_trace": [[i, r] for i, r in self.reward_trace],
            "nodes": [self._node_view(self.nodes[i])
                      for i in sorted(self.nodes)],
        }
        self.snapshot = snap
        for callback in list(self._listeners):
            try:
                callback(snap)
            except Exception:
                pass

    def _check_invariants(self) -> None:
        for node in self.nodes.values():
            child_sum = sum(c.visits for c in node.children)
            if node.visits != child_sum + node.own_sims:
                raise InvariantViolation(
                    f"node {node.node_id}: visits {node.visits} != "
                    f"children {child_sum} + own {node.own_sims}")
            bound = widening_limit(node.visits, self.cfg.alpha, self.cfg.delta)
            if len(node.children) > bound:
                raise InvariantViolation(
                    f"node {node.node_id}: {len(node.children)} children "
                    f"exceed widening limit {bound}")
            if node.claim.raw_text != self._claim_texts[node.node_id]:
                raise InvariantViolation(
                    f"node {node.node_id}: claim text mutated")
        if self.root.visits != self._simulations:
            raise InvariantViolation(
                f"root visits {self.root.visits} != simulations "
                f"{self._simulations}")
        rewards = [r for _, r in self.reward_trace]
        if any(b < a for a, b in zip(rewards, rewards[1:])):
            raise InvariantViolation("reward trace decreased")

    # -- main loop --

    def run(self) -> SearchResult:
        cfg = self.cfg
        started = time.monotonic()
        self._root_chains = self._chains(self.root.claim)
        components, baseline = self.scorer.score(
            self.root.claim, self._root_chains, self.root.claim,
            self._root_chains, [])
        self._best = _Best(
            reward=baseline,
            claim=self.root.claim,
            components=components,
            path=(),
            node_ids=(0,),
            node_id=0,
        )
        self.reward_trace = [(0, baseline)]
        self.trail.emit(
            0, "simulate", 0,
            claim_before=self.root.claim.raw_text,
            claim_after=self.root.claim.raw_text,
            reward=baseline,
            reward_components=components.to_dict(),
            info={"baseline": True, "claim": self.root.claim.to_dict(),
                  "rollout_actions": []},
        )
        self.trail.flush()
        iteration = 0
        stall = 0
        fails = 0
        self._publish(0, done=False, reason=None)
        while True:
            reason = self._termination_reason(iteration, stall, fails, started)
            if reason is not None:
                break
            iteration += 1
            self._drain_interventions(iteration)
            self._mode_switched = False
            failure = False
            exhausted = False
            try:
                node = select(self.root, cfg)
            except SearchExhausted:
                node = self.root
                exhausted = True
                failure = True
            self.trail.emit(
                iteration, "select", node.node_id,
                info={"terminal": node.terminal,
                      "expandable": _expandable(node, cfg),
                      "exhausted": exhausted},
            )
            sim_node = node
            if not exhausted and not node.terminal:
                if _expandable(node, cfg):
                    try:
                        created = self._expand(node, iteration)
                    except AgentFailure as exc:
                        created = []
                        failure = True
                        self.trail.emit(
                            iteration, "expand", node.node_id,
                            info={"parent_id": node.node_id, "error": str(exc)},
                        )
                    else:
                        if not created:
                            failure = True
                        else:
                            live = [c for c in created
                                    if c.intervention_state != "flagged"]
                            if live:
                                sim_node = live[0]
                else:
                    failure = True
            try:
                outcome = self._simulate(sim_node, iteration)
            except AgentFailure as exc:
                outcome = None
                failure = True
                self.trail.emit(
                    iteration, "simulate", sim_node.node_id,
                    claim_before=sim_node.claim.raw_text,
                    info={"error": str(exc)},
                )
            if outcome is not None:
                self.trail.emit(
                    iteration, "simulate", sim_node.node_id,
                    claim_before=sim_node.claim.raw_text,
                    claim_after=outcome.claim.raw_text,
                    reward=outcome.reward,
                    reward_components=outcome.components.to_dict(),
                    info={"rollout_actions": [a.to_dict() for a in outcome.rollout],
                          "steps": outcome.steps,
                          "mode": outcome.mode.value,
                          "truncated": outcome.truncated},
                )
                path = backpropagate(sim_node, outcome.reward)
                sim_node.own_sims += 1
                self._simulations += 1
                self.trail.emit(
                    iteration, "backprop", sim_node.node_id,
                    reward=outcome.reward,
                    info={"path": list(path)},
                )
                self._update_best(sim_node, outcome)
            previous = self.reward_trace[-1][1]
            self.reward_trace.append((iteration, self._best.reward))
            if abs(self._best.reward - previous) < cfg.epsilon:
                stall += 1
            else:
                stall = 0
            fails = fails + 1 if failure else 0
            if cfg.debug_checks:
                self._check_invariants()
            self.trail.flush()
            self._publish(iteration, done=False, reason=None)
            if self.iteration_delay_secs > 0:
                time.sleep(self.iteration_delay_secs)
        self._publish(iteration, done=True, reason=reason)
        self.trail.flush()
        best = self._best
        return SearchResult(
            best_claim=best.claim,
            best_reward=best.reward,
            best_components=best.components,
            best_path=best.path,
            best_node_ids=best.node_ids,
            reward_trace=list(self.reward_trace),
            termination_reason=reason,
            iterations=iteration,
            simulations=self._simulations,
            node_count=len(self.nodes),
            flagged_node_ids=tuple(self._flagged_ids),
        )


def run_search(claim: Claim, prior_art: "list[PriorArtDocument]",
               cfg: "SearchConfig | None" = None,
               suite: "AgentSuite | None" = None,
               scorer: "RewardScorer | None" = None,
               trail: "AuditTrail | None" = None,
               queue: "InterventionQueue | None" = None) -> SearchResult:
    """Build an engine with defaults and run it to completion."""
    engine = SearchEngine(claim, prior_art, cfg=cfg, suite=suite,
                          scorer=scorer, trail=trail, queue=queue)
    return engine.run()
