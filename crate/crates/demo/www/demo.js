import init, { fitGraph, solveSepset, biasCurve } from "./pkg/sepset_demo.js";

const SVG = "http://www.w3.org/2000/svg";
const COVARIATES = ["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9"];
const $ = (id) => document.getElementById(id);
let selected = [];
let lastGraph = null;

function el(name, attrs, parent, text) {
  const node = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  parent.appendChild(node);
  return node;
}

// Let the status text paint before a blocking wasm call.
const later = (f) => new Promise((ok) => setTimeout(() => ok(f()), 20));

function key(a, b) {
  return a < b ? a + "|" + b : b + "|" + a;
}

function drawGraph(data) {
  const svg = $("graph");
  svg.replaceChildren();
  const nodes = data.graph.nodes;
  const cx = 220, cy = 200, r = 160;
  const pos = {};
  nodes.forEach((name, i) => {
    const a = (2 * Math.PI * i) / nodes.length - Math.PI / 2;
    pos[name] = [cx + r * Math.cos(a), cy + r * Math.sin(a)];
  });
  const truth = new Set(data.truth.edges.map((e) => key(e.from, e.to)));
  const found = new Set(data.graph.edges.map((e) => key(e.from, e.to)));
  for (const e of data.truth.edges) {
    if (found.has(key(e.from, e.to)) || !pos[e.from] || !pos[e.to]) continue;
    const [x1, y1] = pos[e.from], [x2, y2] = pos[e.to];
    el("line", { x1, y1, x2, y2, stroke: "#bbb", "stroke-dasharray": "4 4" }, svg);
  }
  for (const e of data.graph.edges) {
    const [x1, y1] = pos[e.from], [x2, y2] = pos[e.to];
    const isTrue = truth.has(key(e.from, e.to)) || e.from === "T" || e.to === "T";
    const w = 1 + 4 * Math.min(e.weight, 1);
    el("line", { x1, y1, x2, y2, stroke: isTrue ? "#2a8" : "#e80", "stroke-width": w }, svg);
  }
  for (const name of nodes) {
    const [x, y] = pos[name];
    const fill = selected.includes(name) ? "#fd4" : name === "Y" || name === "T" ? "#cde" : "#fff";
    el("circle", { cx: x, cy: y, r: 17, fill, stroke: "#333" }, svg);
    el("text", { x, y: y + 5, "text-anchor": "middle" }, svg, name);
  }
}

async function onFit() {
  $("graph-status").textContent = "fitting...";
  try {
    lastGraph = JSON.parse(await later(() => fitGraph(+$("n").value, +$("seed").value, $("rule").value)));
    drawGraph(lastGraph);
    $("graph-status").textContent = `${lastGraph.graph.edges.length} edges`;
  } catch (e) {
    $("graph-status").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

async function onSolve() {
  const out = $("solution");
  out.textContent = "solving...";
  const unmeasured = COVARIATES.filter((v) => $("u-" + v).checked).join(",");
  try {
    const r = JSON.parse(
      await later(() =>
        solveSepset(+$("n").value, +$("seed").value, $("mode").value, $("rule").value,
          $("sampling").value, $("heterogeneity").value, unmeasured)
      )
    );
    const s = r.solution;
    selected = s.selected;
    const rows = r.estimates
      .map((e) => `<tr><td>${e.estimator}</td><td>${e.point.toFixed(3)}</td><td>${(e.point - 5).toFixed(3)}</td></tr>`)
      .join("");
    out.innerHTML =
      `<p>status <b>${s.status}</b>; set {${s.selected.join(", ")}}` +
      (r.set_type ? `; type ${r.set_type.replace("_", " ")}` : "") + "</p>" +
      (rows ? `<table><tr><th>estimator</th><th>estimate</th><th>error</th></tr>${rows}</table>` : "");
    lastGraph = { graph: r.graph, truth: lastGraph?.truth ?? { edges: [] } };
    drawGraph(lastGraph);
  } catch (e) {
    out.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function drawCurve(data) {
  const svg = $("curve");
  svg.replaceChildren();
  const W = 640, H = 300, L = 50, R = 190, T = 15, B = 35;
  const pts = data.series.flatMap((s) => s.points);
  if (pts.length === 0) return;
  const ns = pts.map((p) => p.n);
  const lo = Math.min(0, ...pts.map((p) => p.bias - 2 * p.se / Math.sqrt(p.reps)));
  const hi = Math.max(0, ...pts.map((p) => p.bias + 2 * p.se / Math.sqrt(p.reps)));
  const [nmin, nmax] = [Math.min(...ns), Math.max(...ns)];
  const x = (n) => L + ((n - nmin) / Math.max(nmax - nmin, 1)) * (W - L - R);
  const y = (b) => T + ((hi - b) / Math.max(hi - lo, 1e-9)) * (H - T - B);
  el("line", { x1: L, x2: W - R, y1: y(0), y2: y(0), stroke: "#999" }, svg);
  el("line", { x1: L, x2: L, y1: T, y2: H - B, stroke: "#999" }, svg);
  el("text", { x: L - 6, y: y(hi) + 4, "text-anchor": "end" }, svg, hi.toFixed(2));
  el("text", { x: L - 6, y: y(lo) + 4, "text-anchor": "end" }, svg, lo.toFixed(2));
  el("text", { x: L - 6, y: y(0) + 4, "text-anchor": "end" }, svg, "0");
  for (const n of [...new Set(ns)]) el("text", { x: x(n), y: H - B + 18, "text-anchor": "middle" }, svg, n);
  const colors = ["#2a8", "#36c", "#c33"];
  data.series.forEach((s, k) => {
    const c = colors[k % colors.length];
    const d = s.points.map((p, i) => `${i ? "L" : "M"}${x(p.n)},${y(p.bias)}`).join(" ");
    el("path", { d, fill: "none", stroke: c, "stroke-width": 2 }, svg);
    for (const p of s.points) el("circle", { cx: x(p.n), cy: y(p.bias), r: 3, fill: c }, svg);
    el("rect", { x: W - R + 12, y: T + 20 * k, width: 12, height: 3, fill: c }, svg);
    el("text", { x: W - R + 30, y: T + 20 * k + 5, "font-size": 12 }, svg, s.label);
  });
}

async function onBias() {
  $("bias-status").textContent = "simulating...";
  try {
    const data = JSON.parse(await later(() => biasCurve($("sizes").value, +$("reps").value, +$("seed").value)));
    drawCurve(data);
    $("bias-status").textContent = "";
  } catch (e) {
    $("bias-status").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

await init();
for (const v of COVARIATES) {
  const label = document.createElement("label");
  label.innerHTML = `<input type="checkbox" id="u-${v}"> ${v}`;
  $("unmeasured").appendChild(label);
}
$("fit").onclick = onFit;
$("solve").onclick = onSolve;
$("bias").onclick = onBias;
onFit();
