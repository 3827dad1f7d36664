// Flagged-node queue: one card per intervention item showing the
// examiner's evidence and reasoning next to the proposed edit, with
// approve/reject buttons.  Buttons disable on first click, so a
// double-click produces exactly one server mutation; a network failure
// re-enables them (retry affordance) without any optimistic state; a
// conflict locks the card to the server's resolved state.

import { ApiClient, Decision, DecisionConflict, InterventionItem } from "./api.js";

export interface InterventionCallbacks {
  onDecided?: (item: InterventionItem) => void;
}

function field(label: string, value: string, className = ""): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = `card-field ${className}`.trim();
  const tag = document.createElement("span");
  tag.className = "field-label";
  tag.textContent = label;
  const body = document.createElement("span");
  body.className = "field-value";
  body.textContent = value;
  wrap.append(tag, body);
  return wrap;
}

function lockCard(card: HTMLElement, item: InterventionItem): void {
  card.classList.add("resolved", item.status);
  card.querySelectorAll("button").forEach((b) => (b.disabled = true));
  const status = card.querySelector(".card-status") as HTMLElement;
  status.textContent = item.decided_by
    ? `${item.status} (by ${item.decided_by})`
    : item.status;
}

function renderCard(
  item: InterventionItem,
  api: ApiClient,
  callbacks: InterventionCallbacks,
): HTMLElement {
  const card = document.createElement("article");
  card.className = "intervention-card";
  card.dataset.itemId = String(item.item_id);

  const header = document.createElement("header");
  const title = document.createElement("strong");
  title.textContent = `#${item.item_id} node ${item.node_id} — ${item.action.op_type}`;
  const status = document.createElement("span");
  status.className = "card-status";
  status.textContent = item.status;
  header.append(title, status);
  card.appendChild(header);

  card.appendChild(field("element", item.action.target_element_id));
  card.appendChild(field("proposed edit", item.action.modified_text, "proposed"));
  card.appendChild(field("evidence", item.chain.evidence_text || "(none quoted)", "evidence"));
  card.appendChild(field("examiner reasoning", item.chain.reasoning, "reasoning"));
  card.appendChild(field("confidence", item.action.confidence.toFixed(2)));
  card.appendChild(field("uncertainty", item.sigma_epi.toFixed(4), "uncertainty"));

  const note = document.createElement("p");
  note.className = "card-note";
  card.appendChild(note);

  const actions = document.createElement("div");
  actions.className = "card-actions";
  const buttons: HTMLButtonElement[] = [];

  const submit = async (decision: Decision): Promise<void> => {
    buttons.forEach((b) => (b.disabled = true));
    note.textContent = "";
    try {
      const decided = await api.submitDecision(item.item_id, decision);
      lockCard(card, decided);
      callbacks.onDecided?.(decided);
    } catch (error) {
      if (error instanceof DecisionConflict) {
        note.textContent = "already resolved elsewhere";
        lockCard(card, error.item);
        callbacks.onDecided?.(error.item);
        return;
      }
      // network or server trouble: no state change, allow retry
      note.textContent = `decision failed, try again (${(error as Error).message})`;
      buttons.forEach((b) => (b.disabled = false));
    }
  };

  for (const decision of ["approved", "rejected"] as Decision[]) {
    const button = document.createElement("button");
    button.className = `decide-${decision}`;
    button.textContent = decision === "approved" ? "approve" : "reject";
    button.addEventListener("click", () => void submit(decision));
    buttons.push(button);
    actions.appendChild(button);
  }
  card.appendChild(actions);

  if (item.status !== "pending") {
    lockCard(card, item);
  }
  return card;
}

export function renderInterventions(
  container: HTMLElement,
  items: InterventionItem[],
  api: ApiClient,
  callbacks: InterventionCallbacks = {},
): void {
  container.replaceChildren();
  if (items.length === 0) {
    const empty = document.createElement("p");
    empty.className = "queue-empty";
    empty.textContent = "no flagged nodes";
    container.appendChild(empty);
    return;
  }
  const pendingFirst = [...items].sort((a, b) => {
    const rank = (i: InterventionItem): number => (i.status === "pending" ? 0 : 1);
    return rank(a) - rank(b) || a.item_id - b.item_id;
  });
  for (const item of pendingFirst) {
    container.appendChild(renderCard(item, api, callbacks));
  }
}
