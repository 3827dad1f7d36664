// Search tree view: one SVG node per snapshot node, edges to parents,
// gated nodes visually distinct, click-to-inspect detail panel.  The
// snapshot is validated before anything is drawn; a malformed snapshot
// produces an error banner and no partial render.

import type { NodeView, TreeSnapshot } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const LEVEL_HEIGHT = 72;
const NODE_RADIUS = 14;
const MARGIN = 28;

export interface TreeCallbacks {
  onSelect?: (node: NodeView) => void;
}

export function validateSnapshot(snapshot: TreeSnapshot): string | null {
  const ids = new Set<number>();
  for (const node of snapshot.nodes) {
    ids.add(node.node_id);
  }
  if (ids.size !== snapshot.nodes.length) {
    return "snapshot contains duplicate node ids";
  }
  if (snapshot.nodes.length !== snapshot.node_count) {
    return `snapshot node_count ${snapshot.node_count} != ${snapshot.nodes.length} nodes`;
  }
  let roots = 0;
  for (const node of snapshot.nodes) {
    if (node.parent_id === null) {
      roots += 1;
    } else if (!ids.has(node.parent_id)) {
      return `node ${node.node_id} references missing parent ${node.parent_id}`;
    }
  }
  if (snapshot.nodes.length > 0 && roots !== 1) {
    return `snapshot has ${roots} roots, expected 1`;
  }
  return null;
}

interface Placed {
  node: NodeView;
  x: number;
  y: number;
}

// simple layered layout: nodes at the same depth share a row, spread
// evenly in creation order (node ids are creation-ordered)
function layout(nodes: NodeView[], width: number): Placed[] {
  const byDepth = new Map<number, NodeView[]>();
  for (const node of nodes) {
    const row = byDepth.get(node.depth) ?? [];
    row.push(node);
    byDepth.set(node.depth, row);
  }
  const placed: Placed[] = [];
  for (const [depth, row] of byDepth) {
    row.sort((a, b) => a.node_id - b.node_id);
    const step = (width - 2 * MARGIN) / (row.length + 1);
    row.forEach((node, index) => {
      placed.push({
        node,
        x: MARGIN + step * (index + 1),
        y: MARGIN + depth * LEVEL_HEIGHT,
      });
    });
  }
  return placed;
}

function describe(node: NodeView): string {
  const action = node.action
    ? `${node.action.op_type} @ ${node.action.target_element_id}`
    : "root";
  return [
    `node ${node.node_id} (${action})`,
    `visits ${node.visits}, own sims ${node.own_sims}`,
    `mean reward ${node.mean_q.toFixed(4)}`,
    `sigma_epi ${node.sigma_epi.toFixed(4)}, sigma_ale ${node.sigma_ale.toFixed(4)}`,
    `state ${node.intervention_state}${node.terminal ? ", terminal" : ""}`,
  ].join("\n");
}

function renderDetail(panel: HTMLElement, node: NodeView): void {
  panel.replaceChildren();
  const title = document.createElement("h3");
  title.textContent = node.action
    ? `Node ${node.node_id}: ${node.action.op_type}`
    : `Node ${node.node_id}: root claim`;
  panel.appendChild(title);

  const stats = document.createElement("pre");
  stats.className = "node-stats";
  stats.textContent = describe(node);
  panel.appendChild(stats);

  if (node.action) {
    const rationale = document.createElement("p");
    rationale.className = "node-rationale";
    rationale.textContent =
      `${node.action.rationale} (confidence ${node.action.confidence.toFixed(2)})`;
    panel.appendChild(rationale);
  }

  const claim = document.createElement("blockquote");
  claim.className = "node-claim";
  claim.textContent = node.claim_text;
  panel.appendChild(claim);
}

export function renderTree(
  container: HTMLElement,
  detailPanel: HTMLElement,
  snapshot: TreeSnapshot,
  callbacks: TreeCallbacks = {},
): void {
  container.replaceChildren();
  const problem = validateSnapshot(snapshot);
  if (problem !== null) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `cannot render tree: ${problem}`;
    container.appendChild(banner);
    return;
  }

  const width = Math.max(640, snapshot.nodes.length * 46);
  const depths = snapshot.nodes.map((n) => n.depth);
  const height = MARGIN * 2 + LEVEL_HEIGHT * (depths.length ? Math.max(...depths) : 0) + NODE_RADIUS * 2;

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "tree-svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));

  const placed = layout(snapshot.nodes, width);
  const at = new Map<number, Placed>();
  for (const p of placed) {
    at.set(p.node.node_id, p);
  }

  for (const p of placed) {
    if (p.node.parent_id === null) {
      continue;
    }
    const parent = at.get(p.node.parent_id)!;
    const edge = document.createElementNS(SVG_NS, "line");
    edge.setAttribute("class", "tree-edge");
    edge.setAttribute("x1", String(parent.x));
    edge.setAttribute("y1", String(parent.y));
    edge.setAttribute("x2", String(p.x));
    edge.setAttribute("y2", String(p.y));
    svg.appendChild(edge);
  }

  for (const p of placed) {
    const group = document.createElementNS(SVG_NS, "g");
    const classes = ["tree-node", `state-${p.node.intervention_state}`];
    if (p.node.gated) {
      classes.push("gated");
    }
    if (p.node.node_id === snapshot.best_node_id) {
      classes.push("best");
    }
    if (p.node.terminal) {
      classes.push("terminal");
    }
    group.setAttribute("class", classes.join(" "));
    group.setAttribute("data-node-id", String(p.node.node_id));

    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.x));
    circle.setAttribute("cy", String(p.y));
    circle.setAttribute("r", String(NODE_RADIUS));
    group.appendChild(circle);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(p.x));
    label.setAttribute("y", String(p.y + 4));
    label.setAttribute("text-anchor", "middle");
    label.textContent = String(p.node.node_id);
    group.appendChild(label);

    const hover = document.createElementNS(SVG_NS, "title");
    hover.textContent = describe(p.node);
    group.appendChild(hover);

    group.addEventListener("click", () => {
      svg.querySelectorAll(".tree-node.selected").forEach((el) =>
        el.classList.remove("selected"),
      );
      group.classList.add("selected");
      renderDetail(detailPanel, p.node);
      callbacks.onSelect?.(p.node);
    });
    svg.appendChild(group);
  }

  container.appendChild(svg);
}
