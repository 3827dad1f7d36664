// Console wiring: initial fetch of all three views, then live refresh
// driven by the audit-record event stream.  The stream is a trigger
// only; every displayed value is re-fetched from its endpoint, so the
// UI never computes search state itself.  A dropped stream reconnects
// and forces a full refetch.

import { ApiClient } from "./api.js";
import { renderCurve } from "./curve.js";
import { renderInterventions } from "./interventions.js";
import { renderTree } from "./tree.js";

const REFRESH_MIN_MS = 250;
const RECONNECT_DELAY_MS = 1000;

type EventSourceFactory = (url: string) => EventSource;

export interface ConsoleElements {
  tree: HTMLElement;
  detail: HTMLElement;
  curve: HTMLElement;
  queue: HTMLElement;
  status: HTMLElement;
}

export class ReviewConsole {
  private readonly api: ApiClient;
  private readonly el: ConsoleElements;
  private readonly makeEventSource: EventSourceFactory;
  private stream: EventSource | null = null;
  private refreshTimer: ReturnType<typeof setTimeout> | null = null;
  private refreshQueued = false;
  private lastRefresh = 0;
  private done = false;

  constructor(
    api: ApiClient,
    elements: ConsoleElements,
    makeEventSource: EventSourceFactory = (url) => new EventSource(url),
  ) {
    this.api = api;
    this.el = elements;
    this.makeEventSource = makeEventSource;
  }

  async start(): Promise<void> {
    await this.refresh();
    this.connect();
  }

  stop(): void {
    this.stream?.close();
    this.stream = null;
    if (this.refreshTimer !== null) {
      clearTimeout(this.refreshTimer);
      this.refreshTimer = null;
    }
  }

  // collapse bursts of audit events into one refetch per window
  scheduleRefresh(): void {
    if (this.refreshQueued) {
      return;
    }
    const wait = Math.max(0, this.lastRefresh + REFRESH_MIN_MS - Date.now());
    this.refreshQueued = true;
    this.refreshTimer = setTimeout(() => {
      this.refreshQueued = false;
      void this.refresh();
    }, wait);
  }

  async refresh(): Promise<void> {
    this.lastRefresh = Date.now();
    try {
      const [snapshot, trace, items] = await Promise.all([
        this.api.fetchTree(),
        this.api.fetchTrace(),
        this.api.fetchInterventions(),
      ]);
      this.done = snapshot.done;
      renderTree(this.el.tree, this.el.detail, snapshot);
      renderCurve(this.el.curve, trace.reward_trace);
      renderInterventions(this.el.queue, items, this.api, {
        onDecided: () => this.scheduleRefresh(),
      });
      const state = snapshot.done
        ? `finished (${snapshot.termination_reason})`
        : "searching";
      this.el.status.textContent =
        `${state} — iteration ${snapshot.iteration}, ${snapshot.node_count} nodes, ` +
        `best ${snapshot.best_reward.toFixed(4)}, ` +
        `${snapshot.pending_interventions} pending decision(s)`;
    } catch (error) {
      this.el.status.textContent = `cannot reach search service: ${(error as Error).message}`;
    }
  }

  private connect(): void {
    this.stream = this.makeEventSource(this.api.eventsUrl());
    this.stream.onmessage = () => this.scheduleRefresh();
    this.stream.addEventListener("done", () => {
      this.stream?.close();
      this.stream = null;
      void this.refresh();
    });
    this.stream.onerror = () => {
      // dropped stream: reconnect with a full refetch unless finished
      this.stream?.close();
      this.stream = null;
      if (!this.done) {
        setTimeout(() => {
          void this.refresh().then(() => this.connect());
        }, RECONNECT_DELAY_MS);
      }
    };
  }
}

export function boot(doc: Document = document): ReviewConsole {
  const params = new URLSearchParams(doc.defaultView?.location.search ?? "");
  const base = params.get("api") ?? "";
  const api = new ApiClient(base || doc.defaultView?.location.origin || "");
  const byId = (id: string): HTMLElement => {
    const el = doc.getElementById(id);
    if (!el) {
      throw new Error(`missing #${id}`);
    }
    return el;
  };
  const consoleApp = new ReviewConsole(api, {
    tree: byId("tree"),
    detail: byId("detail"),
    curve: byId("curve"),
    queue: byId("queue"),
    status: byId("status"),
  });
  void consoleApp.start();
  return consoleApp;
}
