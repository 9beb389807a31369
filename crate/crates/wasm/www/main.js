import init, { confint_curve, poisson_ecdf, tols_histogram } from "./pkg/defstat_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xr, yr) {
  const ctx = canvas.getContext("2d");
  const pad = 36;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0])) * w;
  const sy = (y) => pad + h - ((y - yr[0]) / (yr[1] - yr[0])) * h;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  for (const x of [xr[0], (xr[0] + xr[1]) / 2, xr[1]]) ctx.fillText(x.toFixed(2), sx(x) - 12, pad + h + 14);
  for (const y of [yr[0], yr[1]]) ctx.fillText(y.toFixed(2), 2, sy(y) + 4);
  return { ctx, sx, sy };
}

function line(ctx, xs, ys, sx, sy, color, step = false) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  xs.forEach((x, i) => {
    if (i === 0) ctx.moveTo(sx(x), sy(ys[i]));
    else {
      if (step) ctx.lineTo(sx(x), sy(ys[i - 1]));
      ctx.lineTo(sx(x), sy(ys[i]));
    }
  });
  ctx.stroke();
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = "error: " + (e.message ?? e);
  }
}

function runCi() {
  guard("ci-out", () => {
    const r = JSON.parse(confint_curve(num("ci-seed"), num("ci-n"), num("ci-p"), num("ci-alpha"), $("ci-quantile").checked));
    const abs = r.statistic.map(Math.abs);
    const top = Math.max(r.critical * 1.5, ...abs);
    const { ctx, sx, sy } = frame($("ci-plot"), [r.grid[0], r.grid[r.grid.length - 1]], [0, top]);
    ctx.fillStyle = "rgba(21,101,192,0.12)";
    ctx.fillRect(sx(r.lower), sy(top), sx(r.upper) - sx(r.lower), sy(0) - sy(top));
    line(ctx, [r.grid[0], r.grid[r.grid.length - 1]], [r.critical, r.critical], sx, sy, "#c62828");
    line(ctx, r.grid, abs, sx, sy, "#1565c0");
    if (r.truth >= r.grid[0] && r.truth <= r.grid[r.grid.length - 1]) {
      line(ctx, [r.truth, r.truth], [0, top], sx, sy, "#2e7d32");
    }
    $("ci-out").textContent =
      `interval [${r.lower.toFixed(4)}, ${r.upper.toFixed(4)}]  truth ${r.truth}  ` +
      `covers: ${r.lower <= r.truth && r.truth <= r.upper}  evaluations ${r.evaluations}`;
  });
}

function runEcdf() {
  guard("ec-out", () => {
    const r = JSON.parse(poisson_ecdf(num("ec-sigma"), num("ec-reps"), num("ec-seed")));
    const { ctx, sx, sy } = frame($("ec-plot"), [0, 1], [0, 1]);
    line(ctx, [0, 1], [0, 1], sx, sy, "#bbb");
    const rates = [];
    for (const [key, color] of [["corrected", "#1565c0"], ["naive", "#c62828"], ["quasi", "#2e7d32"]]) {
      const p = r[key];
      const m = p.length;
      line(ctx, [0, ...p, 1], [0, ...p.map((_, i) => (i + 1) / m), 1], sx, sy, color, true);
      rates.push(`${key} ${(p.filter((v) => v <= 0.05).length / m).toFixed(3)}`);
    }
    $("ec-out").textContent = `rejection at 5%: ${rates.join("  ")}  failed fits ${r.failures}`;
  });
}

function runHist() {
  guard("h-out", () => {
    const r = JSON.parse(tols_histogram(num("h-reps"), num("h-seed"), num("h-bins"), $("h-alt").checked));
    const total = r.counts.reduce((a, b) => a + b, 0);
    const width = r.edges[1] - r.edges[0];
    const dens = r.counts.map((c) => c / (total * width));
    const lo = r.edges[0];
    const hi = r.edges[r.edges.length - 1];
    const { ctx, sx, sy } = frame($("h-plot"), [lo, hi], [0, Math.max(0.45, ...dens)]);
    ctx.fillStyle = "rgba(21,101,192,0.35)";
    dens.forEach((d, i) => {
      const x0 = sx(r.edges[i]);
      ctx.fillRect(x0, sy(d), sx(r.edges[i + 1]) - x0 - 1, sy(0) - sy(d));
    });
    const xs = Array.from({ length: 201 }, (_, i) => lo + ((hi - lo) * i) / 200);
    line(ctx, xs, xs.map((x) => Math.exp(-x * x / 2) / Math.sqrt(2 * Math.PI)), sx, sy, "#c62828");
    $("h-out").textContent =
      `KS vs N(0,1) ${r.ks.toFixed(4)}  rejection at 5% ${r.rejection_rate.toFixed(3)}  mean coefficient ${r.mean_theta.toFixed(4)}`;
  });
}

await init();
$("ci-run").onclick = runCi;
$("ec-run").onclick = runEcdf;
$("h-run").onclick = runHist;
runCi();
