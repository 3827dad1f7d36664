// Intervention cards: field display, the one-mutation double-click
// guard, conflict handling, and the retry affordance on network
// failure.  fetch is stubbed per test; no real server involved.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, InterventionItem } from "../src/api.js";
import { renderInterventions } from "../src/interventions.js";

function item(overrides: Partial<InterventionItem> = {}): InterventionItem {
  return {
    item_id: 1,
    node_id: 4,
    created_iteration: 9,
    sigma_epi: 0.31,
    action: {
      op_type: "NarrowScope",
      target_element_id: "e2",
      modified_text: "a cooling duct made of brass",
      rationale: "narrows around the cited pump",
      confidence: 0.55,
    },
    chain: {
      status: "PartiallyDisclosed",
      evidence_text: "the reference shows a duct",
      reasoning: "duct matches but material differs",
      confidence: 0.6,
      uncertainty: 0.31,
      human_review: true,
    },
    claim_text: "a device comprising a cooling duct",
    status: "pending",
    decided_by: "",
    ...overrides,
  };
}

function decidedResponse(status: string): Response {
  return new Response(
    JSON.stringify({ item: item({ status, decided_by: "reviewer" }) }),
    { status: 200, headers: { "Content-Type": "application/json" } },
  );
}

const api = new ApiClient("http://search.test");
let container: HTMLElement;

beforeEach(() => {
  container = document.createElement("div");
  document.body.replaceChildren(container);
});

afterEach(() => {
  vi.unstubAllGlobals();
});

function clickApprove(): HTMLButtonElement {
  const button = container.querySelector(".decide-approved") as HTMLButtonElement;
  button.click();
  return button;
}

// let the submit promise chain (fetch, body parse, follow-up fetch on
// conflict) run to completion; each macrotask turn drains all microtasks
async function settle(): Promise<void> {
  for (let i = 0; i < 3; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

describe("renderInterventions", () => {
  it("shows evidence, reasoning, proposed edit, confidence, uncertainty", () => {
    renderInterventions(container, [item()], api);
    const text = container.textContent!;
    expect(text).toContain("the reference shows a duct");
    expect(text).toContain("duct matches but material differs");
    expect(text).toContain("a cooling duct made of brass");
    expect(text).toContain("0.55");
    expect(text).toContain("0.3100");
  });

  it("renders an empty-queue note when there is nothing to review", () => {
    renderInterventions(container, [], api);
    expect(container.querySelector(".queue-empty")).not.toBeNull();
  });

  it("sends exactly one mutation on double-click and locks the card", async () => {
    const fetchMock = vi.fn(async () => decidedResponse("approved"));
    vi.stubGlobal("fetch", fetchMock);
    renderInterventions(container, [item()], api);

    const button = clickApprove();
    button.click();
    button.click();
    await settle();

    expect(fetchMock).toHaveBeenCalledTimes(1);
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://search.test/interventions/1/decision");
    expect(JSON.parse(init.body as string)).toEqual({ decision: "approved" });
    const card = container.querySelector(".intervention-card")!;
    expect(card.classList.contains("resolved")).toBe(true);
    expect(card.querySelector(".card-status")!.textContent).toContain("approved");
    container.querySelectorAll("button").forEach((b) => {
      expect((b as HTMLButtonElement).disabled).toBe(true);
    });
  });

  it("shows the server's resolved state on conflict without mutating", async () => {
    vi.stubGlobal("fetch", vi.fn(async (url: string, init?: RequestInit) => {
      if (init?.method === "POST") {
        return new Response(
          JSON.stringify({ error: "intervention 1 already rejected" }),
          { status: 409, headers: { "Content-Type": "application/json" } },
        );
      }
      expect(url).toBe("http://search.test/interventions");
      return new Response(
        JSON.stringify({
          interventions: [item({ status: "rejected", decided_by: "other" })],
        }),
        { status: 200, headers: { "Content-Type": "application/json" } },
      );
    }));
    renderInterventions(container, [item()], api);

    clickApprove();
    await settle();

    const card = container.querySelector(".intervention-card")!;
    expect(card.classList.contains("rejected")).toBe(true);
    expect(card.querySelector(".card-status")!.textContent).toContain("rejected");
    expect(card.querySelector(".card-note")!.textContent).toContain("already resolved");
  });

  it("re-enables buttons after a network failure, no optimistic state", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("network down");
    }));
    renderInterventions(container, [item()], api);

    const button = clickApprove();
    await settle();

    expect(button.disabled).toBe(false);
    const card = container.querySelector(".intervention-card")!;
    expect(card.classList.contains("resolved")).toBe(false);
    expect(card.querySelector(".card-status")!.textContent).toBe("pending");
    expect(card.querySelector(".card-note")!.textContent).toContain("try again");
  });

  it("renders already-resolved items locked", () => {
    renderInterventions(container, [item({ status: "approved", decided_by: "x" })], api);
    const card = container.querySelector(".intervention-card")!;
    expect(card.classList.contains("resolved")).toBe(true);
    container.querySelectorAll("button").forEach((b) => {
      expect((b as HTMLButtonElement).disabled).toBe(true);
    });
  });

  it("orders pending cards before resolved ones", () => {
    renderInterventions(container, [
      item({ item_id: 1, status: "rejected" }),
      item({ item_id: 2 }),
    ], api);
    const cards = [...container.querySelectorAll(".intervention-card")];
    expect(cards.map((c) => (c as HTMLElement).dataset.itemId)).toEqual(["2", "1"]);
  });
});
