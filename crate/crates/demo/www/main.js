// SPDX-License-Identifier: Apache-2.0
// Built with `wasm-pack build --target web --out-dir www/pkg` from crates/demo.
import init, { hull_coreset, sensitivity_sample, sensitivities, loss_curve, loss_factor } from "./pkg/projcore_demo.js";

const LOSSES = ["cauchy", "welsch", "huber", "geman-mcclure", "tukey", "l1-l2", "fair", "concave", "power"];
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"];
const GRID = 20;

const status = document.getElementById("status");
const $ = (id) => document.getElementById(id);

function report(f) {
  try {
    status.textContent = "";
    f();
  } catch (e) {
    status.textContent = String(e);
  }
}

// Points live on an integer grid so the k = 2 construction has a grid bound.
function gridView(canvas) {
  const sx = canvas.width / GRID, sy = canvas.height / GRID;
  return {
    toPx: (x, y) => [x * sx, canvas.height - y * sy],
    fromPx: (px, py) => [Math.round(px / sx), Math.round((canvas.height - py) / sy)],
  };
}

function randomPoints(n) {
  const xy = [];
  for (let i = 0; i < n; i++) {
    const t = Math.random() * 2 * Math.PI, r = 3 + Math.random() * 6;
    xy.push(Math.round(10 + r * Math.cos(t)), Math.round(10 + 0.6 * r * Math.sin(t)));
  }
  return xy;
}

function dot(ctx, x, y, r, fill) {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  if (fill) { ctx.fillStyle = fill; ctx.fill(); } else { ctx.stroke(); }
}

let hullPts = [];

function drawHull() {
  const canvas = $("hull"), ctx = canvas.getContext("2d"), view = gridView(canvas);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let i = 0; i < hullPts.length; i += 2) dot(ctx, ...view.toPx(hullPts[i], hullPts[i + 1]), 3, "#555");
  if (hullPts.length < 6) { $("hull-info").textContent = "add at least three points"; return; }
  const out = hull_coreset(new Float64Array(hullPts));
  const count = out[0];
  for (let a = 1; a <= count; a++) {
    const i = out[a];
    dot(ctx, ...view.toPx(hullPts[2 * i], hullPts[2 * i + 1]), 5, "#d00");
  }
  $("hull-info").textContent = `${hullPts.length / 2} points, coreset of ${count}`;
  if (out.length < count + 6) return;
  const [cx, cy, g11, g12, g22] = Array.from(out.slice(count + 1));
  // Boundary of (x-c)^T G (x-c) = 1 via the inverse square root of G.
  const tr = g11 + g22, det = g11 * g22 - g12 * g12;
  const disc = Math.sqrt(Math.max(tr * tr / 4 - det, 0));
  const l1 = tr / 2 + disc, l2 = tr / 2 - disc;
  const ang = Math.abs(g12) > 1e-12 ? Math.atan2(l1 - g11, g12) : (g11 >= g22 ? 0 : Math.PI / 2);
  ctx.strokeStyle = "#06c";
  ctx.beginPath();
  for (let s = 0; s <= 64; s++) {
    const t = (s / 64) * 2 * Math.PI;
    const u = Math.cos(t) / Math.sqrt(l1), v = Math.sin(t) / Math.sqrt(l2);
    const x = cx + u * Math.cos(ang) - v * Math.sin(ang);
    const y = cy + u * Math.sin(ang) + v * Math.cos(ang);
    const [px, py] = view.toPx(x, y);
    s === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  }
  ctx.stroke();
  ctx.strokeStyle = "#000";
}

let sensPts = randomPoints(60);

function drawSens(sample) {
  const canvas = $("sens"), ctx = canvas.getContext("2d"), view = gridView(canvas);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const j = Number($("sens-j").value), k = Number($("sens-k").value);
  const s = sensitivities(new Float64Array(sensPts), j, k);
  const smax = Math.max(...s);
  for (let i = 0; i < s.length; i++) {
    dot(ctx, ...view.toPx(sensPts[2 * i], sensPts[2 * i + 1]), 2 + 6 * Math.sqrt(s[i] / smax), "#888");
  }
  if (!sample) return;
  ctx.fillStyle = "#000";
  for (let a = 0; a < sample.length; a += 2) {
    const i = sample[a], [px, py] = view.toPx(sensPts[2 * i], sensPts[2 * i + 1]);
    ctx.strokeStyle = "#d00";
    dot(ctx, px, py, 10);
    ctx.fillText(sample[a + 1].toFixed(1), px + 11, py - 4);
  }
  ctx.strokeStyle = "#000";
  const total = s.reduce((x, y) => x + y, 0);
  $("sens-info").textContent = `total sensitivity ${total.toFixed(2)}, ${sample.length / 2} distinct points drawn`;
}

function drawLosses() {
  const canvas = $("loss"), ctx = canvas.getContext("2d");
  const lambda = Number($("loss-lambda").value), xMax = 4, steps = 200, yMax = 4;
  $("loss-lambda-v").textContent = lambda.toFixed(1);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(canvas.width / 2, 0); ctx.lineTo(canvas.width / 2, canvas.height);
  ctx.stroke();
  const list = $("loss-list");
  list.innerHTML = "";
  LOSSES.forEach((name, c) => {
    const ys = loss_curve(name, lambda, 2, xMax, steps);
    ctx.strokeStyle = COLORS[c];
    ctx.beginPath();
    ys.forEach((y, s) => {
      const px = (s / steps) * canvas.width, py = canvas.height - (Math.min(y, yMax) / yMax) * (canvas.height - 10);
      s === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
    const item = document.createElement("div");
    item.style.color = COLORS[c];
    item.textContent = `${name}: factor ${loss_factor(name, lambda, 2, 2).toExponential(2)} (d = 2)`;
    list.appendChild(item);
  });
  ctx.strokeStyle = "#000";
}

await init();

$("hull").addEventListener("click", (ev) => {
  const r = ev.target.getBoundingClientRect();
  hullPts.push(...gridView($("hull")).fromPx(ev.clientX - r.left, ev.clientY - r.top));
  report(drawHull);
});
$("hull-random").addEventListener("click", () => { hullPts = randomPoints(40); report(drawHull); });
$("hull-clear").addEventListener("click", () => { hullPts = []; report(drawHull); });
$("sens").addEventListener("click", (ev) => {
  const r = ev.target.getBoundingClientRect();
  sensPts.push(...gridView($("sens")).fromPx(ev.clientX - r.left, ev.clientY - r.top));
  report(() => drawSens());
});
$("sens-run").addEventListener("click", () => report(() => {
  const j = Number($("sens-j").value), k = Number($("sens-k").value);
  const m = Number($("sens-m").value), seed = Number($("sens-seed").value);
  drawSens(sensitivity_sample(new Float64Array(sensPts), j, k, m, seed));
}));
$("loss-lambda").addEventListener("input", () => report(drawLosses));

hullPts = randomPoints(40);
report(drawHull);
report(() => drawSens());
report(drawLosses);
