import init, { surface, taxonomy, classify_spec, example_spec } from "./pkg/liouville_web.js";

const $ = (id) => document.getElementById(id);

// heat map of log u, masked samples in grey
function drawSurface() {
  const data = JSON.parse(surface(+$("ex").value, +$("na").value, +$("nt").value));
  const cv = $("surface"), ctx = cv.getContext("2d");
  const rows = data.u, nt = rows.length, na = data.alpha.length;
  let lo = Infinity, hi = -Infinity;
  for (const row of rows) for (const u of row) if (u !== null) { const l = Math.log(u); lo = Math.min(lo, l); hi = Math.max(hi, l); }
  const w = cv.width / na, h = cv.height / nt;
  for (let j = 0; j < nt; j++) {
    for (let i = 0; i < na; i++) {
      const u = rows[j][i];
      if (u === null) { ctx.fillStyle = "#888"; }
      else {
        const s = hi > lo ? (Math.log(u) - lo) / (hi - lo) : 0;
        ctx.fillStyle = `hsl(${240 - 240 * s}, 80%, ${35 + 25 * s}%)`;
      }
      ctx.fillRect(i * w, cv.height - (j + 1) * h, w + 1, h + 1);
    }
  }
  const r = data.report;
  const when = r.t_star !== null ? `t* = ${r.t_star.toFixed(6)}` : "";
  $("surface-info").textContent =
    `${r.verdict} ${when}  M0 = ${r.m0}  t ∈ [0, ${data.t[nt - 1].toFixed(4)}] upward, α ∈ [0, 1] rightward, colour = ln u ∈ [${lo.toFixed(2)}, ${hi.toFixed(2)}]`;
}

// ln u(α, t) against -log10(1 - t)
function drawTaxonomy() {
  const beta = +$("beta").value;
  $("beta-val").textContent = beta;
  const data = JSON.parse(taxonomy(beta, +$("alpha").value));
  const cv = $("taxonomy"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const pts = data.curve.map(([t, u]) => [-Math.log10(1 - t + 1e-300), Math.log10(u)]);
  const ys = pts.map((p) => p[1]);
  const y0 = Math.min(...ys, -1), y1 = Math.max(...ys, 1);
  const X = (x) => 40 + (x / 6) * (cv.width - 60);
  const Y = (y) => cv.height - 20 - ((y - y0) / (y1 - y0)) * (cv.height - 40);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath(); ctx.moveTo(X(0), Y(0)); ctx.lineTo(X(6), Y(0)); ctx.stroke();
  ctx.strokeStyle = "#c22"; ctx.lineWidth = 2;
  ctx.beginPath();
  pts.forEach(([x, y], k) => (k ? ctx.lineTo(X(x), Y(y)) : ctx.moveTo(X(x), Y(y))));
  ctx.stroke();
  ctx.fillStyle = "#000";
  ctx.fillText(`log10 u ∈ [${y0.toFixed(1)}, ${y1.toFixed(1)}]`, 45, 14);
  ctx.fillText("-log10(1 - t) →", cv.width - 110, cv.height - 5);
  $("taxonomy-info").textContent = `case ${data.beta_case}, interior limit ${data.limit}`;
}

function runClassify() {
  try {
    $("report").textContent = JSON.stringify(JSON.parse(classify_spec($("spec").value)), null, 2);
  } catch (e) {
    $("report").textContent = String(e);
  }
}

await init();
$("draw").onclick = drawSurface;
$("beta").oninput = drawTaxonomy;
$("alpha").onchange = drawTaxonomy;
$("spec-ex").onchange = () => { $("spec").value = example_spec(+$("spec-ex").value); };
$("classify").onclick = runClassify;
$("spec").value = example_spec(4);
drawSurface();
drawTaxonomy();
