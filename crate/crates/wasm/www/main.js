import init, { toySolve, portionCurve, windowCurve } from "./pkg/gridflex_wasm.js";

const $ = (id) => document.getElementById(id);
const money = (v) => (v == null ? "-" : "$" + v.toLocaleString(undefined, { maximumFractionDigits: 2 }));

function runToy() {
  $("toy-portion-val").textContent = Number($("toy-portion").value).toFixed(2);
  const out = $("toy-out");
  try {
    const r = JSON.parse(toySolve(Number($("toy-load").value), Number($("toy-portion").value), Number($("toy-line").value)));
    out.classList.remove("error");
    if (r.total_cost == null) {
      out.textContent = `No feasible plan: ${r.status}`;
      return;
    }
    out.textContent = [
      `total       ${money(r.total_cost)}`,
      `investment  ${money(r.investment_cost)}  (${r.added_mw.toFixed(2)} MW added at b2)`,
      `operating   ${money(r.operating_cost)}`,
      `shifting    ${money(r.shift_cost)}  (${r.shifted_mw.toFixed(2)} MW moved to b1)`,
      `dispatch    b1 ${r.dispatch_mw[0].toFixed(2)} MW, b2 ${r.dispatch_mw[1].toFixed(2)} MW`,
      `line flow   ${r.flow_mw.toFixed(2)} MW`,
    ].join("\n");
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e);
  }
}

// Line chart of total and investment cost; points without a solution are skipped.
function plot(canvas, points, xLabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 80, r: 20, t: 20, b: 40 };
  ctx.clearRect(0, 0, w, h);
  const ok = points.filter((p) => p.total_cost != null);
  if (ok.length === 0) return;
  const xs = points.map((p) => p.x);
  const ys = ok.flatMap((p) => [p.total_cost, p.investment_cost]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [0, Math.max(...ys) * 1.05];
  const sx = (x) => pad.l + ((x - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r);
  const sy = (y) => h - pad.b - ((y - y0) / (y1 - y0 || 1)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const y = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(Math.round(y).toLocaleString(), 4, sy(y) + 4);
  }
  for (const x of xs) ctx.fillText(String(+x.toFixed(2)), sx(x) - 8, h - pad.b + 16);
  ctx.fillText(xLabel, w / 2 - 40, h - 6);

  const series = [
    ["total_cost", "#1f5fa8", "total"],
    ["investment_cost", "#d0701c", "investment"],
  ];
  series.forEach(([key, color, name], k) => {
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.beginPath();
    ok.forEach((p, i) => (i === 0 ? ctx.moveTo(sx(p.x), sy(p[key])) : ctx.lineTo(sx(p.x), sy(p[key]))));
    ctx.stroke();
    ok.forEach((p) => ctx.fillRect(sx(p.x) - 2, sy(p[key]) - 2, 4, 4));
    ctx.fillText(name, w - pad.r - 90, pad.t + 14 * (k + 1));
  });
}

function runCurve(fn, args, canvas, msg, xLabel) {
  msg.textContent = "Solving...";
  msg.classList.remove("error");
  // Let the message paint before the solver blocks the thread.
  setTimeout(() => {
    try {
      const t = performance.now();
      const points = JSON.parse(fn(...args));
      plot(canvas, points, xLabel);
      const failed = points.filter((p) => p.total_cost == null).length;
      msg.textContent = `${points.length} solves in ${((performance.now() - t) / 1000).toFixed(1)} s` +
        (failed ? `, ${failed} without a feasible plan` : "");
    } catch (e) {
      msg.classList.add("error");
      msg.textContent = String(e);
    }
  }, 10);
}

async function main() {
  await init();
  $("loading").remove();
  for (const id of ["toy-load", "toy-portion", "toy-line"]) $(id).addEventListener("input", runToy);
  runToy();
  $("pc-run").addEventListener("click", () =>
    runCurve(portionCurve, [Number($("pc-growth").value), Number($("pc-lines").value), 10], $("pc-canvas"), $("pc-msg"), "movable share"));
  $("wc-run").addEventListener("click", () =>
    runCurve(windowCurve, [Number($("wc-max").value), Number($("wc-lines").value)], $("wc-canvas"), $("wc-msg"), "window (h)"));
}

main().catch((e) => {
  $("loading").textContent = "Could not load the solver: " + e;
});
