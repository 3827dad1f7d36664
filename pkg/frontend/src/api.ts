// Typed client for the search service HTTP API.  The console is a pure
// reader: every number it shows comes from one of these payloads.

export interface NodeView {
  node_id: number;
  parent_id: number | null;
  depth: number;
  visits: number;
  own_sims: number;
  mean_q: number;
  sigma_epi: number;
  sigma_ale: number;
  intervention_state: string;
  terminal: boolean;
  gated: boolean;
  action: ActionView | null;
  claim_text: string;
}

export interface ActionView {
  op_type: string;
  target_element_id: string;
  modified_text: string;
  rationale: string;
  confidence: number;
}

export interface TreeSnapshot {
  iteration: number;
  done: boolean;
  termination_reason: string | null;
  best_reward: number;
  best_node_id: number;
  node_count: number;
  pending_interventions: number;
  sigma_max_epi: number;
  gating_policy: string;
  reward_trace: Array<[number, number]>;
  nodes: NodeView[];
}

export interface ChainView {
  status: string;
  evidence_text: string;
  reasoning: string;
  confidence: number;
  uncertainty: number;
  human_review: boolean;
}

export interface InterventionItem {
  item_id: number;
  node_id: number;
  created_iteration: number;
  sigma_epi: number;
  action: ActionView;
  chain: ChainView;
  claim_text: string;
  status: string;
  decided_by: string;
}

export interface RewardTrace {
  reward_trace: Array<[number, number]>;
  done: boolean;
  best_reward: number;
}

export interface AuditRecord {
  record_id: number;
  iteration: number;
  phase: string;
  node_id: number;
  info: Record<string, unknown>;
  [key: string]: unknown;
}

export type Decision = "approved" | "rejected";

export class DecisionConflict extends Error {
  item: InterventionItem;

  constructor(item: InterventionItem) {
    super(`item ${item.item_id} already ${item.status}`);
    this.item = item;
  }
}

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new ApiError(response.status, `GET ${url} -> ${response.status}`);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  readonly base: string;

  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  fetchTree(): Promise<TreeSnapshot> {
    return getJson<TreeSnapshot>(`${this.base}/tree`);
  }

  fetchTrace(): Promise<RewardTrace> {
    return getJson<RewardTrace>(`${this.base}/reward-trace`);
  }

  async fetchInterventions(): Promise<InterventionItem[]> {
    const payload = await getJson<{ interventions: InterventionItem[] }>(
      `${this.base}/interventions`,
    );
    return payload.interventions;
  }

  // a 409 means someone else decided first; fetch their decision so the
  // card can show the resolved state instead of a bare error
  async submitDecision(itemId: number, decision: Decision): Promise<InterventionItem> {
    const response = await fetch(`${this.base}/interventions/${itemId}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision }),
    });
    const body = await response.json().catch(() => null);
    if (response.status === 409) {
      const items = await this.fetchInterventions();
      const resolved = items.find((it) => it.item_id === itemId);
      if (resolved) {
        throw new DecisionConflict(resolved);
      }
    }
    if (!response.ok) {
      const detail = body && body.error ? String(body.error) : `status ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return (body as { item: InterventionItem }).item;
  }

  eventsUrl(): string {
    return `${this.base}/events`;
  }
}
