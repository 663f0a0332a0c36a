import init, { divide, Demo } from "./pkg/quadstab_web.js";

const SIZE = 480;
const px = (x) => x * SIZE;
const py = (y) => (1 - y) * SIZE;

function unitFromEvent(canvas, ev) {
  const r = canvas.getBoundingClientRect();
  const x = (ev.clientX - r.left) / r.width;
  const y = 1 - (ev.clientY - r.top) / r.height;
  return [Math.min(Math.max(x, 0.0005), 0.9995), Math.min(Math.max(y, 0.0005), 0.9995)];
}

function dot(ctx, [x, y], color, radius = 4) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(px(x), py(y), radius, 0, 2 * Math.PI);
  ctx.fill();
}

function arrow(ctx, a, b, color, offset) {
  const [x1, y1, x2, y2] = [px(a[0]), py(a[1]), px(b[0]), py(b[1])];
  const len = Math.hypot(x2 - x1, y2 - y1) || 1;
  const nx = (-(y2 - y1) / len) * offset;
  const ny = ((x2 - x1) / len) * offset;
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(x1 + nx, y1 + ny);
  ctx.lineTo(x2 + nx, y2 + ny);
  ctx.stroke();
  const ang = Math.atan2(y2 - y1, x2 - x1);
  const ex = x2 + nx - 6 * Math.cos(ang);
  const ey = y2 + ny - 6 * Math.sin(ang);
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.moveTo(ex + 5 * Math.cos(ang), ey + 5 * Math.sin(ang));
  ctx.lineTo(ex - 4 * Math.cos(ang) - 3 * Math.sin(ang), ey - 4 * Math.sin(ang) + 3 * Math.cos(ang));
  ctx.lineTo(ex - 4 * Math.cos(ang) + 3 * Math.sin(ang), ey - 4 * Math.sin(ang) - 3 * Math.cos(ang));
  ctx.fill();
}

// division panel

const divCanvas = document.getElementById("div-canvas");
const divCtx = divCanvas.getContext("2d");
const divOut = document.getElementById("div-out");
let points = [];

function drawDivision() {
  divCtx.clearRect(0, 0, SIZE, SIZE);
  if (points.length === 0) {
    divOut.textContent = "no points";
    return;
  }
  let result;
  try {
    result = JSON.parse(divide(JSON.stringify(points)));
  } catch (e) {
    points.pop();
    divOut.textContent = String(e);
    drawDivision();
    return;
  }
  divCtx.strokeStyle = "#999";
  for (const leaf of result.leaves) {
    const [[x0, x1], [y0, y1]] = leaf.bounds;
    divCtx.fillStyle = leaf.inhabitant === null ? "#f3f3f3" : "#e6efff";
    divCtx.fillRect(px(x0), py(y1), px(x1) - px(x0), py(y0) - py(y1));
    divCtx.strokeRect(px(x0), py(y1), px(x1) - px(x0), py(y0) - py(y1));
  }
  divCtx.setLineDash([4, 3]);
  divCtx.strokeStyle = "#555";
  divCtx.beginPath();
  result.order.forEach((i, k) => {
    const [x, y] = points[i];
    k === 0 ? divCtx.moveTo(px(x), py(y)) : divCtx.lineTo(px(x), py(y));
  });
  divCtx.stroke();
  divCtx.setLineDash([]);
  result.order.forEach((i, k) => {
    dot(divCtx, points[i], "#1f5fd1");
    divCtx.fillStyle = "#000";
    divCtx.fillText(String(k), px(points[i][0]) + 5, py(points[i][1]) - 5);
  });
  const empty = result.leaves.filter((l) => l.inhabitant === null).length;
  divOut.textContent =
    `${points.length} points, ${result.leaves.length} cells (${empty} empty)\n` +
    "cells by path: " + result.leaves.map((l) => l.path || "root").join(" ");
}

divCanvas.addEventListener("click", (ev) => {
  points.push(unitFromEvent(divCanvas, ev));
  drawDivision();
});
document.getElementById("div-clear").onclick = () => {
  points = [];
  drawDivision();
};
document.getElementById("div-random").onclick = () => {
  points = Array.from({ length: 10 }, () => [Math.random(), Math.random()]);
  drawDivision();
};

// overlay panel

const ovCanvas = document.getElementById("ov-canvas");
const ovCtx = ovCanvas.getContext("2d");
const ovOut = document.getElementById("ov-out");
let demo = null;
let frame = null;
let trail = null;
let target = null;

function drawOverlay() {
  ovCtx.clearRect(0, 0, SIZE, SIZE);
  if (!frame) return;
  ovCtx.lineWidth = 1;
  for (const [a, b] of frame.list) arrow(ovCtx, frame.nodes[a], frame.nodes[b], "#1f5fd1", 2);
  for (const [a, b] of frame.quad) arrow(ovCtx, frame.nodes[a], frame.nodes[b], "#d1331f", -2);
  if (trail) {
    ovCtx.lineWidth = 3;
    for (let k = 1; k < trail.path.length; k++) {
      arrow(ovCtx, frame.nodes[trail.path[k - 1]], frame.nodes[trail.path[k]], "#1a9c3a", 0);
    }
    ovCtx.lineWidth = 1;
    dot(ovCtx, target, "#1a9c3a", 6);
  }
  frame.nodes.forEach((p, i) => {
    dot(ovCtx, p, "#222");
    ovCtx.fillStyle = "#000";
    ovCtx.fillText(String(i), px(p[0]) + 5, py(p[1]) - 5);
  });
  let text =
    `round ${frame.round}, ${frame.legitimate ? "legitimate" : "not yet legitimate"}, ` +
    `${frame.in_flight} messages in flight`;
  if (trail) {
    text += `\nsearch ${trail.path.join(" -> ")} in ${trail.hops} hops, answer ${trail.result}`;
    text += trail.expected === null ? " (target cell is empty)" : ` (expected ${trail.expected})`;
  }
  ovOut.textContent = text;
}

function newDemo() {
  const n = Number(document.getElementById("ov-n").value);
  const seed = BigInt(document.getElementById("ov-seed").value);
  const init = document.getElementById("ov-init").value;
  try {
    demo = new Demo(n, seed, init);
    frame = JSON.parse(demo.frame());
    trail = null;
    drawOverlay();
  } catch (e) {
    ovOut.textContent = String(e);
  }
}

document.getElementById("ov-new").onclick = newDemo;
document.getElementById("ov-step").onclick = () => {
  if (!demo) return;
  frame = JSON.parse(demo.step());
  trail = null;
  drawOverlay();
};
document.getElementById("ov-run").onclick = () => {
  if (!demo) return;
  for (let i = 0; i < 5000 && !frame.legitimate; i++) frame = JSON.parse(demo.step());
  trail = null;
  drawOverlay();
};
ovCanvas.addEventListener("click", (ev) => {
  if (!demo) return;
  target = unitFromEvent(ovCanvas, ev);
  const from = Number(document.getElementById("ov-from").value);
  try {
    trail = JSON.parse(demo.search(from, target[0], target[1]));
  } catch (e) {
    trail = null;
    ovOut.textContent = String(e);
    return;
  }
  drawOverlay();
});

await init();
drawDivision();
newDemo();
