import init, { tau_curve, fourth_moment_sweep, analyze_config } from "./pkg/ulr_ident_wasm.js";

const $ = (id) => document.getElementById(id);

const presets = {
  "spherical": { independent: false, beta0: [3, 4], joint_structure: { kind: "spherical" } },
  "gaussian + exponential": {
    components: [{ family: "gaussian", mean: 1, variance: 1 }, { family: "exponential", rate: 1 }],
    beta0: [2, 3],
  },
  "scale swap": {
    components: [{ family: "exponential", rate: 1 }, { family: "exponential", rate: 2 }],
    beta0: [1, 1],
  },
  "gamma + gaussian": {
    components: [
      { family: "gamma", shape: 1, rate: 1 },
      { family: "gamma", shape: 2, rate: 1 },
      { family: "gaussian", mean: 0, variance: 1 },
    ],
    beta0: [1, 2, 3],
  },
};

const numbers = (s) => s.split(",").map((t) => Number(t.trim()));

function fail(el, e) {
  el.className = "err";
  el.textContent = String(e.message ?? e);
}

function plot(canvas, series, { yMin, yMax, xLabel, marks = [] }) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const ys = series.flatMap((s) => s.points.map((p) => p[1])).filter(Number.isFinite);
  const lo = yMin ?? Math.min(...ys), hi = yMax ?? Math.max(...ys);
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - lo) / (hi - lo || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  for (const m of marks) {
    if (m < lo || m > hi) continue;
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, sy(m));
    ctx.lineTo(w - pad, sy(m));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (!Number.isFinite(y) || y < lo || y > hi) { pen = false; continue; }
      pen ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      pen = true;
    }
    ctx.stroke();
  }
  ctx.fillStyle = "#333";
  ctx.fillText(`${x0}`, pad, h - pad + 14);
  ctx.fillText(`${x1} ${xLabel}`, w - pad - 40, h - pad + 14);
  ctx.fillText(hi.toPrecision(3), 2, pad + 4);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  series.forEach((s, i) => {
    ctx.fillStyle = s.color;
    ctx.fillText(s.name, w - pad - 60, pad + 14 + 14 * i);
  });
}

function runTau() {
  const out = $("tau-out");
  try {
    const res = JSON.parse(tau_curve(numbers($("tau-a").value), numbers($("tau-b").value), Number($("tau-xmax").value), 401));
    out.className = "";
    out.textContent = res.summary;
    const ys = res.rows.map((r) => r[1]);
    const span = Math.max(...ys.map(Math.abs)) || 1;
    plot($("tau-plot"), [{ name: "tau", color: "#1f5fbf", points: res.rows }], {
      yMin: -span, yMax: span, xLabel: "x", marks: [0],
    });
  } catch (e) {
    fail(out, e);
  }
}

function runSweep() {
  const out = $("fm-out");
  try {
    const rows = JSON.parse(fourth_moment_sweep(Number($("fm-m1").value), Number($("fm-m2").value), Number($("fm-step").value)));
    const ok = rows.filter((r) => !r.error);
    const w1 = ok.filter((r) => r.w1 != null).map((r) => [r.deg, r.w1]);
    const w2 = ok.filter((r) => r.w2 != null).map((r) => [r.deg, r.w2]);
    const flips = ok.filter((r) => r.verdict === "sign_flips_only").length;
    const worst = ok.reduce((m, r) => Math.max(m, Math.min(r.w1 ?? Infinity, r.w2 ?? Infinity)), -Infinity);
    out.className = "";
    out.textContent = `${ok.length} angles, ${flips} with sign flips only; max over angles of min(w1, w2) = ${worst.toFixed(6)}`
      + (rows.length > ok.length ? `\n${rows.length - ok.length} angles failed: ${rows.find((r) => r.error).error}` : "");
    plot($("fm-plot"), [
      { name: "w1", color: "#1f5fbf", points: w1 },
      { name: "w2", color: "#bf5f1f", points: w2 },
    ], { yMin: -4, yMax: 4, xLabel: "deg", marks: [0, 1] });
  } catch (e) {
    fail(out, e);
  }
}

function runConfig() {
  const out = $("cfg-out");
  out.className = "";
  out.textContent = "running...";
  setTimeout(() => {
    try {
      const res = JSON.parse(analyze_config($("cfg-text").value, Number($("cfg-n").value), Number($("cfg-seed").value) >>> 0));
      out.textContent = res.text;
    } catch (e) {
      fail(out, e);
    }
  }, 0);
}

await init();
const sel = $("cfg-preset");
for (const name of Object.keys(presets)) sel.add(new Option(name, name));
const load = () => { $("cfg-text").value = JSON.stringify(presets[sel.value], null, 2); };
sel.addEventListener("change", load);
load();
$("tau-run").addEventListener("click", runTau);
$("fm-run").addEventListener("click", runSweep);
$("cfg-run").addEventListener("click", runConfig);
runTau();
runSweep();
