import init, { coverageCurve, credibleInterval, monteCarlo } from "./pkg/hpdcov_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("plot");
const ctx = canvas.getContext("2d");
const pad = { left: 56, right: 16, top: 16, bottom: 40 };

let curve = null;
let interval = null;

function model() {
  return { family: $("family").value, alpha: Number($("alpha").value) };
}

function fail(err) {
  $("status").textContent = String(err && err.message ? err.message : err);
}

function scales() {
  const w = canvas.width - pad.left - pad.right;
  const h = canvas.height - pad.top - pad.bottom;
  const tmax = curve.points[curve.points.length - 1].theta;
  const lowest = Math.min(curve.bracket[0], curve.min.coverage);
  const yMin = Math.max(0, lowest - 0.25 * (1 - lowest));
  const yMax = 1;
  return {
    x: (t) => pad.left + (t / tmax) * w,
    y: (c) => pad.top + (1 - (c - yMin) / (yMax - yMin)) * h,
    tmax, yMin, yMax,
  };
}

function axes(s) {
  ctx.strokeStyle = "#444";
  ctx.fillStyle = "#444";
  ctx.lineWidth = 1;
  ctx.font = "12px system-ui, sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad.left, pad.top);
  ctx.lineTo(pad.left, canvas.height - pad.bottom);
  ctx.lineTo(canvas.width - pad.right, canvas.height - pad.bottom);
  ctx.stroke();
  ctx.textAlign = "center";
  const step = s.tmax > 20 ? 5 : s.tmax > 8 ? 2 : 1;
  for (let t = 0; t <= s.tmax + 1e-9; t += step) {
    ctx.fillText(t.toFixed(0), s.x(t), canvas.height - pad.bottom + 16);
  }
  ctx.fillText("θ", (pad.left + canvas.width - pad.right) / 2, canvas.height - 6);
  ctx.textAlign = "right";
  const ticks = 5;
  for (let i = 0; i <= ticks; i++) {
    const c = s.yMin + ((s.yMax - s.yMin) * i) / ticks;
    ctx.fillText(c.toFixed(3), pad.left - 6, s.y(c) + 4);
  }
}

function hline(s, c, color, dash) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(pad.left, s.y(c));
  ctx.lineTo(canvas.width - pad.right, s.y(c));
  ctx.stroke();
  ctx.setLineDash([]);
}

function vline(s, t, label) {
  if (t > s.tmax) return;
  ctx.strokeStyle = "#bbb";
  ctx.setLineDash([2, 3]);
  ctx.beginPath();
  ctx.moveTo(s.x(t), pad.top);
  ctx.lineTo(s.x(t), canvas.height - pad.bottom);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = "#777";
  ctx.textAlign = "left";
  ctx.fillText(label, s.x(t) + 3, pad.top + 12);
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!curve) return;
  const s = scales();

  ctx.fillStyle = "rgba(208, 128, 0, 0.18)";
  const top = s.y(curve.bracket[1]);
  ctx.fillRect(pad.left, top, canvas.width - pad.left - pad.right, s.y(curve.bracket[0]) - top);
  hline(s, curve.nominal, "#888", [6, 4]);

  const c = curve.constants;
  vline(s, c.two_d0, "2d₀");
  vline(s, c.d1, "d₁");
  if (c.a > 0 && Math.abs(c.a - c.d1) > 1e-9) vline(s, c.a, "a");

  // a left/right pair at the same theta is a jump: do not connect it
  ctx.strokeStyle = "#1f5fbf";
  ctx.lineWidth = 2;
  ctx.beginPath();
  let prev = null;
  for (const p of curve.points) {
    const px = s.x(p.theta), py = s.y(p.coverage);
    if (prev === null || (prev.side === "left" && p.side === "right")) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
    prev = p;
  }
  ctx.stroke();
  ctx.lineWidth = 1;

  ctx.fillStyle = "#1f5fbf";
  ctx.beginPath();
  ctx.arc(s.x(curve.min.theta), s.y(curve.min.coverage), 4, 0, 2 * Math.PI);
  ctx.fill();

  if (interval) {
    const y = canvas.height - pad.bottom - 6;
    const lo = Math.min(interval.lower, s.tmax), hi = Math.min(interval.upper, s.tmax);
    ctx.strokeStyle = "#c33";
    ctx.lineWidth = 4;
    ctx.beginPath();
    ctx.moveTo(s.x(lo), y);
    ctx.lineTo(s.x(hi), y);
    ctx.stroke();
    ctx.lineWidth = 1;
  }
  axes(s);
}

function summary() {
  const c = curve.constants;
  const rows = [
    ["d₀", c.d0], ["d₁", c.d1], ["d₂", c.d2], ["2d₀", c.two_d0], ["a", c.a],
    ["min coverage", `${curve.min.coverage.toFixed(6)} at θ = ${curve.min.theta.toFixed(4)}`],
    ["bracket", `[${curve.bracket[0].toFixed(6)}, ${curve.bracket[1].toFixed(6)}]`],
    ["older bound", curve.legacy_lower_bound.toFixed(6)],
  ];
  $("summary").innerHTML = rows
    .map(([k, v]) => `<tr><td>${k}</td><td>${typeof v === "number" ? v.toFixed(6) : v}</td></tr>`)
    .join("");
}

function refreshCurve() {
  const { family, alpha } = model();
  $("alpha-out").textContent = alpha.toFixed(2);
  try {
    curve = JSON.parse(coverageCurve(family, alpha, 0, 400));
    $("status").textContent = "";
    summary();
  } catch (e) {
    curve = null;
    fail(e);
  }
  refreshInterval();
}

function refreshInterval() {
  const { family, alpha } = model();
  const x = Number($("x").value);
  $("x-out").textContent = x.toFixed(2);
  try {
    interval = JSON.parse(credibleInterval(family, alpha, x));
    $("interval").textContent =
      `[${interval.lower.toFixed(4)}, ${interval.upper.toFixed(4)}]  posterior mass ${interval.posterior_mass.toFixed(6)}`;
  } catch (e) {
    interval = null;
    fail(e);
  }
  draw();
}

function simulate() {
  const { family, alpha } = model();
  const theta = Number($("theta").value);
  const n = Number($("n").value);
  $("mc").textContent = "running…";
  // let the label paint before the synchronous simulation blocks the thread
  setTimeout(() => {
    try {
      const r = JSON.parse(monteCarlo(family, alpha, theta, n, 42));
      $("mc").textContent =
        `simulated ${r.estimate.toFixed(5)} ± ${r.std_error.toFixed(5)}, exact ${r.exact.toFixed(5)} ` +
        `(${r.deviation_se.toFixed(2)} standard errors)`;
    } catch (e) {
      $("mc").textContent = "";
      fail(e);
    }
  }, 10);
}

await init();
$("family").addEventListener("change", refreshCurve);
$("alpha").addEventListener("input", refreshCurve);
$("x").addEventListener("input", refreshInterval);
$("simulate").addEventListener("click", simulate);
refreshCurve();
