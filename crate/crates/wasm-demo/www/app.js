import init, { generateGraph, landscape, solve, falqon } from "./pkg/qaoa_wasm_demo.js";

const $ = (id) => document.getElementById(id);
let graph = null;

function call(f) {
  $("status").textContent = "";
  try {
    return JSON.parse(f());
  } catch (e) {
    $("status").textContent = String(e);
    return null;
  }
}

function graphJson() {
  return JSON.stringify({ n: graph.n, edges: graph.edges });
}

function drawGraph(g) {
  const c = $("graph"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const r = c.width / 2 - 24, cx = c.width / 2, cy = c.height / 2;
  const pos = [...Array(g.n).keys()].map((k) => {
    const t = (2 * Math.PI * k) / g.n - Math.PI / 2;
    return [cx + r * Math.cos(t), cy + r * Math.sin(t)];
  });
  const side = [...g.optimal_cut];
  for (const [i, j] of g.edges) {
    ctx.strokeStyle = side[i] !== side[j] ? "#c33" : "#bbb";
    ctx.lineWidth = side[i] !== side[j] ? 2 : 1;
    ctx.beginPath();
    ctx.moveTo(...pos[i]);
    ctx.lineTo(...pos[j]);
    ctx.stroke();
  }
  pos.forEach(([x, y], k) => {
    ctx.fillStyle = side[k] === "1" ? "#246" : "#fff";
    ctx.strokeStyle = "#246";
    ctx.beginPath();
    ctx.arc(x, y, 10, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
    ctx.fillStyle = side[k] === "1" ? "#fff" : "#246";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(k, x, y);
  });
}

function heat(v) {
  const t = Math.max(0, Math.min(1, v));
  return `rgb(${Math.round(255 * t)}, ${Math.round(80 + 120 * (1 - Math.abs(t - 0.5) * 2))}, ${Math.round(255 * (1 - t))})`;
}

function drawLandscape(l) {
  const c = $("land"), ctx = c.getContext("2d");
  const n = l.gammas.length, w = c.width / n, h = c.height / n;
  let lo = Infinity, hi = -Infinity;
  l.alpha.flat().forEach((v) => { lo = Math.min(lo, v); hi = Math.max(hi, v); });
  l.alpha.forEach((row, i) =>
    row.forEach((v, j) => {
      ctx.fillStyle = heat((v - lo) / (hi - lo || 1));
      ctx.fillRect(i * w, c.height - (j + 1) * h, w + 1, h + 1);
    }),
  );
  const [g, b] = l.best;
  ctx.strokeStyle = "#000";
  ctx.strokeRect((g / Math.PI) * c.width - 4, c.height - (b / (Math.PI / 2)) * c.height - 4, 8, 8);
}

function plot(canvas, ys, label) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pad = 30, W = canvas.width - 2 * pad, H = canvas.height - 2 * pad;
  const lo = Math.min(...ys), hi = Math.max(...ys, lo + 1e-9);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W, H);
  ctx.fillStyle = "#444";
  ctx.fillText(hi.toFixed(3), 2, pad);
  ctx.fillText(lo.toFixed(3), 2, pad + H);
  ctx.fillText(label, pad + 4, pad - 8);
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ys.forEach((y, k) => {
    const x = pad + (W * k) / Math.max(1, ys.length - 1);
    const yy = pad + H - (H * (y - lo)) / (hi - lo);
    k ? ctx.lineTo(x, yy) : ctx.moveTo(x, yy);
  });
  ctx.stroke();
}

function onGenerate() {
  const g = call(() => generateGraph($("family").value, +$("n").value, +$("seed").value));
  if (!g) return;
  graph = g;
  drawGraph(g);
  $("graph-info").textContent =
    `n = ${g.n}, m = ${g.edges.length}\nC_max = ${g.c_max}\noptimal cut ${g.optimal_cut}\n(red edges are cut)`;
}

function onScan() {
  const l = call(() => landscape(graphJson(), +$("res").value));
  if (!l) return;
  drawLandscape(l);
  const [g, b, a] = l.best;
  $("land-info").textContent =
    `gamma along x in [0, pi), beta along y in [0, pi/2)\nbest grid point:\n  gamma = ${g.toFixed(4)}\n  beta  = ${b.toFixed(4)}\n  alpha = ${a.toFixed(4)}`;
}

function onSolve() {
  const r = call(() => solve(graphJson(), $("variant").value, +$("p").value, +$("solve-seed").value));
  if (!r) return;
  plot($("trace"), r.trace, "alpha per iteration");
  const top = r.top.map(([b, p, c]) => `  ${b}  p=${p.toFixed(4)}  C=${c}`).join("\n");
  $("solve-info").textContent =
    `${r.variant}, p = ${r.p}\nalpha = ${r.alpha.toFixed(6)}\n<C> = ${r.value.toFixed(4)} of ${r.c_max}\n` +
    `circuit calls = ${r.circuit_calls}\nmost likely cuts:\n${top}`;
}

function onFalqon() {
  const r = call(() => falqon(graphJson(), +$("layers").value, +$("dt").value));
  if (!r) return;
  plot($("falqon-plot"), r.alpha, "alpha per layer");
  let drops = 0;
  for (let k = 1; k < r.alpha.length; k++) if (r.alpha[k] < r.alpha[k - 1] - 1e-9) drops++;
  $("falqon-info").textContent =
    `layers = ${r.betas.length}\nfinal alpha = ${r.alpha.at(-1).toFixed(6)}\n` +
    `decreasing steps = ${drops}\nlast beta = ${r.betas.at(-1).toFixed(4)}`;
}

await init();
$("gen").onclick = onGenerate;
$("scan").onclick = onScan;
$("solve").onclick = onSolve;
$("falqon").onclick = onFalqon;
onGenerate();
onScan();
