import init, {
  compareNormal, referenceDemo, fittedScale, publishedRows, defaultThresholds, classify,
} from "./pkg/edukl_wasm.js";

const $ = (id) => document.getElementById(id);

function show(input, text) {
  document.querySelector(`output[for=${input.id}]`).textContent = text ?? input.value;
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
}

function polyline(ctx, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(x, ys[i]) : ctx.moveTo(x, ys[i])));
  ctx.stroke();
}

function drawCurve(g) {
  const c = $("curve"), ctx = c.getContext("2d"), pad = 30, size = c.width - 2 * pad;
  axes(ctx, c.width, c.height, pad);
  const px = (r) => pad + r * size, py = (v) => c.height - pad - v * size;
  polyline(ctx, [0, 1].map(px), [0, 1].map(py), "#bbb");
  polyline(ctx, g.map((_, k) => px(k / (g.length - 1))), Array.from(g, py), "#1f5fa8");
  ctx.fillStyle = "#444";
  ctx.fillText("reference rank r", c.width / 2 - 40, c.height - 8);
  ctx.fillText("G(r)", 4, pad - 10);
}

function updateCompare() {
  const shift = +$("shift").value, scale = +$("scale").value;
  const n = Math.round(10 ** +$("n").value);
  show($("shift")); show($("scale")); show($("n"), n);
  try {
    const c = compareNormal(shift, scale, n, 1n);
    drawCurve(c.curve);
    $("compare-out").textContent =
      `signed KL ${c.signedKl.toFixed(4)}   rank area ${c.rankArea.toFixed(4)}   band ${c.label}`;
    c.free();
  } catch (e) {
    $("compare-out").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function updateReference() {
  const s = +$("s").value;
  show($("s"));
  const rows = publishedRows();
  const body = $("rows").tBodies[0];
  try {
    const d = referenceDemo(s, 100000, 7n);
    const table = d.table, sample = d.sampleTable, got = d.rows;
    const c = $("quantiles"), ctx = c.getContext("2d"), pad = 30;
    axes(ctx, c.width, c.height, pad);
    const lo = 100, hi = 500;
    const px = (p) => pad + (p / 100) * (c.width - 2 * pad);
    const py = (v) => c.height - pad - ((v - lo) / (hi - lo)) * (c.height - 2 * pad);
    const ps = Array.from({ length: 99 }, (_, i) => i + 1);
    polyline(ctx, ps.map(px), ps.map((p) => py(table[p])), "#1f5fa8");
    polyline(ctx, ps.map(px), ps.map((p) => py(sample[p])), "rgba(200,80,20,.6)");
    ctx.fillStyle = "#000";
    for (let i = 0; i < rows.length; i += 2) {
      ctx.beginPath();
      ctx.arc(px(rows[i]), py(rows[i + 1]), 3.5, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.fillText(`mean ${d.mean.toFixed(1)}, sd ${d.sd.toFixed(1)}`, pad + 6, pad + 14);
    body.innerHTML = "";
    for (let i = 0; i < rows.length; i += 2) {
      const p = rows[i];
      body.insertAdjacentHTML("beforeend",
        `<tr><td>${p}</td><td>${rows[i + 1]}</td><td>${got[i / 2].toFixed(1)}</td><td>${sample[p].toFixed(1)}</td></tr>`);
    }
    d.free();
  } catch (e) {
    body.innerHTML = `<tr><td colspan="4" class="err">${e.message ?? e}</td></tr>`;
  }
}

function updateClassify() {
  const t = $("thresholds").value.split(/[\s,]+/).filter(Boolean).map(Number);
  try {
    $("classify-out").textContent = `band: ${classify(+$("value").value, Float64Array.from(t))}`;
  } catch (e) {
    $("classify-out").innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

await init();
$("s").value = fittedScale().toFixed(1);
$("thresholds").value = Array.from(defaultThresholds()).join(", ");
for (const id of ["shift", "scale", "n"]) $(id).addEventListener("input", updateCompare);
$("s").addEventListener("input", updateReference);
for (const id of ["value", "thresholds"]) $(id).addEventListener("input", updateClassify);
updateCompare();
updateReference();
updateClassify();
