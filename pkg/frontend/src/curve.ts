// Reward evolution chart: best-so-far reward per iteration as an SVG
// step line with one dot per trace point.  Pure function of the trace
// payload; an empty trace renders an empty chart.

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 220;
const PAD = 34;

export function renderCurve(
  container: HTMLElement,
  trace: Array<[number, number]>,
): void {
  container.replaceChildren();
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "curve-svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  container.appendChild(svg);

  const axis = document.createElementNS(SVG_NS, "path");
  axis.setAttribute("class", "curve-axis");
  axis.setAttribute(
    "d",
    `M ${PAD} ${PAD} L ${PAD} ${HEIGHT - PAD} L ${WIDTH - PAD} ${HEIGHT - PAD}`,
  );
  svg.appendChild(axis);

  if (trace.length === 0) {
    return;
  }

  const iterations = trace.map(([i]) => i);
  const rewards = trace.map(([, r]) => r);
  const maxIter = Math.max(...iterations, 1);
  const low = Math.min(...rewards);
  const high = Math.max(...rewards);
  const span = high - low || 1;

  const x = (i: number): number => PAD + ((WIDTH - 2 * PAD) * i) / maxIter;
  const y = (r: number): number =>
    HEIGHT - PAD - ((HEIGHT - 2 * PAD) * (r - low)) / span;

  // best-so-far is a step function: hold the level until the next point
  let d = "";
  trace.forEach(([iter, reward], index) => {
    const px = x(iter);
    const py = y(reward);
    d += index === 0 ? `M ${px} ${py}` : ` H ${px} V ${py}`;
  });
  const lastX = x(maxIter);
  d += ` H ${lastX}`;
  const line = document.createElementNS(SVG_NS, "path");
  line.setAttribute("class", "curve-line");
  line.setAttribute("d", d);
  svg.appendChild(line);

  trace.forEach(([iter, reward], index) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", index === trace.length - 1 ? "curve-dot final" : "curve-dot");
    dot.setAttribute("cx", String(x(iter)));
    dot.setAttribute("cy", String(y(reward)));
    dot.setAttribute("r", "3");
    dot.setAttribute("data-iteration", String(iter));
    dot.setAttribute("data-reward", String(reward));
    const hover = document.createElementNS(SVG_NS, "title");
    hover.textContent = `iteration ${iter}: ${reward}`;
    dot.appendChild(hover);
    svg.appendChild(dot);
  });

  const label = document.createElementNS(SVG_NS, "text");
  label.setAttribute("class", "curve-label");
  label.setAttribute("x", String(WIDTH - PAD));
  label.setAttribute("y", String(y(rewards[rewards.length - 1]) - 8));
  label.setAttribute("text-anchor", "end");
  label.textContent = `best ${rewards[rewards.length - 1].toFixed(4)}`;
  svg.appendChild(label);
}
