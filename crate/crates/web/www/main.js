import init, { growth, sequences, Stepper } from './pkg/ncsim_web.js';

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const model = () => [num('N'), num('p'), num('q'), num('r')];
const seed = () => BigInt(Math.max(0, Math.floor(num('seed'))));
const COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e'];

function report(where, fn) {
  try {
    $(where).className = '';
    fn();
  } catch (e) {
    $(where).className = 'err';
    $(where).textContent = String(e.message ?? e);
  }
}

function alphaOf(N, p, q, r) {
  return (1 - p) * q + ((N - 1) / N) * p * r;
}

// Axes with optional log scaling; series are arrays of [x, y].
function plot(canvas, series, { logX, logY, xLabel, yLabel, guides = [] }) {
  const ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height, L = 60, R = 150, T = 15, B = 40;
  ctx.clearRect(0, 0, W, H);
  const tx = (x) => (logX ? Math.log10(x) : x);
  const ty = (y) => (logY ? Math.log10(y) : y);
  const pts = series.flatMap((s) => s.points).filter(([x, y]) => (!logX || x > 0) && (!logY || y > 0));
  if (!pts.length) return;
  let [x0, x1] = [Math.min(...pts.map((p) => tx(p[0]))), Math.max(...pts.map((p) => tx(p[0])))];
  let [y0, y1] = [Math.min(...pts.map((p) => ty(p[1]))), Math.max(...pts.map((p) => ty(p[1])))];
  for (const g of guides) { y0 = Math.min(y0, ty(g.y)); y1 = Math.max(y1, ty(g.y)); }
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) { y0 -= 0.5; y1 += 0.5; }
  const px = (x) => L + ((tx(x) - x0) / (x1 - x0)) * (W - L - R);
  const py = (y) => H - B - ((ty(y) - y0) / (y1 - y0)) * (H - T - B);

  ctx.strokeStyle = '#888';
  ctx.strokeRect(L, T, W - L - R, H - T - B);
  ctx.fillStyle = '#444';
  ctx.font = '11px sans-serif';
  const tick = (v, log) => (log ? '1e' + v.toFixed(1).replace(/\.0$/, '') : v.toPrecision(3));
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + ((x1 - x0) * i) / 4, yv = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(tick(xv, logX), L + ((W - L - R) * i) / 4 - 12, H - B + 14);
    ctx.fillText(tick(yv, logY), 4, H - B - ((H - T - B) * i) / 4 + 4);
  }
  ctx.fillText(xLabel, (W - R) / 2, H - 6);
  ctx.save();
  ctx.translate(12, T + 12);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  for (const g of guides) {
    ctx.strokeStyle = '#aaa';
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(L, py(g.y));
    ctx.lineTo(W - R, py(g.y));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  series.forEach((s, i) => {
    ctx.strokeStyle = s.color ?? COLORS[i % COLORS.length];
    ctx.beginPath();
    let first = true;
    for (const [x, y] of s.points) {
      if ((logX && x <= 0) || (logY && y <= 0)) continue;
      if (first) ctx.moveTo(px(x), py(y)); else ctx.lineTo(px(x), py(y));
      first = false;
    }
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.name, W - R + 10, T + 14 + 16 * i);
  });
}

function runGrowth() {
  report('growInfo', () => {
    const t = performance.now();
    const g = JSON.parse(growth(...model(), BigInt(num('steps')), seed()));
    const pts = g.points.filter((p) => p.n > 0);
    const last = g.points[g.points.length - 1];
    const a = g.alpha;
    const ref = pts.map((p) => [p.n, Math.pow(p.n, a) * (last.max_weight / Math.pow(last.n, a))]);
    plot($('growPlot'), [
      { name: 'V', points: pts.map((p) => [p.n, p.vertices]) },
      { name: 'max weight', points: pts.map((p) => [p.n, p.max_weight]) },
      { name: 'max degree', points: pts.map((p) => [p.n, p.max_degree]) },
      { name: 'W of vertex 0', points: pts.map((p) => [p.n, p.weight0]) },
      { name: 'n^alpha (scaled)', points: ref, color: '#999' },
    ], { logX: true, logY: true, xLabel: 'n', yLabel: 'count' });
    const ratio = last.weight0 ? (last.degree0 / last.weight0).toFixed(3) : 'n/a';
    $('growInfo').textContent =
      `alpha = ${a.toFixed(4)}; D/W of vertex 0 = ${ratio}` +
      (g.ratio_limit == null ? '' : ` (limit ${g.ratio_limit.toFixed(3)})`) +
      `; ${((performance.now() - t) / 1000).toFixed(2)} s`;
  });
}

let stepper = null;

function drawGraph(view) {
  const canvas = $('graph'), ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height, c = W / 2, rad = W / 2 - 30;
  ctx.clearRect(0, 0, W, H);
  const n = view.labels.length;
  const pos = new Map(view.labels.map((l, i) => {
    const t = (2 * Math.PI * i) / n - Math.PI / 2;
    return [l, [c + rad * Math.cos(t), c + rad * Math.sin(t)]];
  }));
  ctx.strokeStyle = '#bbb';
  for (const [a, b] of view.edges) {
    ctx.beginPath();
    ctx.moveTo(...pos.get(a));
    ctx.lineTo(...pos.get(b));
    ctx.stroke();
  }
  const maxPi = Math.max(...view.participation);
  view.labels.forEach((l, i) => {
    const [x, y] = pos.get(l);
    const shade = Math.round(230 - 180 * (view.participation[i] / maxPi));
    ctx.fillStyle = `rgb(${shade}, ${shade}, 255)`;
    ctx.beginPath();
    ctx.arc(x, y, 6 + 3 * Math.log2(1 + view.weights[i]), 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = '#000';
    ctx.font = '11px sans-serif';
    ctx.fillText(String(l), x - 3, y + 4);
  });
}

function showView(view) {
  drawGraph(view);
  const lines = [`step ${view.step}, ${view.labels.length} vertices`, '', 'vertex  weight  P(takes part next step)'];
  view.labels.forEach((l, i) =>
    lines.push(`${String(l).padStart(6)}  ${String(view.weights[i]).padStart(6)}  ${view.participation[i].toFixed(6)}`));
  if (!view.outcomes.length) {
    lines.push('', `exact outcome list shown only up to ${view.enumeration_cap} vertices`);
  } else {
    lines.push('', `next-step outcomes (${view.outcomes.length}, most likely first):`);
  }
  for (const o of view.outcomes.slice(0, 40)) {
    lines.push(`${o.probability.toFixed(6)}  {${o.vertices.join(', ')}}  ${o.branch}`);
  }
  if (view.outcomes.length > 40) lines.push('...');
  $('law').textContent = lines.join('\n');
}

function resetStepper() {
  report('stepInfo', () => {
    stepper?.free();
    stepper = new Stepper(...model(), seed());
    showView(JSON.parse(stepper.view()));
    $('stepInfo').textContent = '';
  });
}

function stepOnce() {
  report('stepInfo', () => {
    if (!stepper) resetStepper();
    showView(JSON.parse(stepper.step()));
  });
}

function runSequences() {
  report('seqInfo', () => {
    const a = alphaOf(...model());
    const s = JSON.parse(sequences(a, BigInt(num('k')), BigInt(num('nmax'))));
    plot($('seqPlot'), [
      { name: `b[n,${s.k}] ratio`, points: s.n.map((n, i) => [n, s.b_ratio[i]]) },
      { name: 'e[n] ratio', points: s.n.map((n, i) => [n, s.e_ratio[i]]).filter((p) => p[1] != null) },
    ], { logX: true, logY: false, xLabel: 'n', yLabel: 'ratio to asymptote', guides: [{ y: 1 }] });
    const lastB = s.b_ratio[s.b_ratio.length - 1], lastE = s.e_ratio[s.e_ratio.length - 1];
    $('seqInfo').textContent = `alpha = ${a.toFixed(4)}; at n = ${s.n[s.n.length - 1]}: ` +
      `b ratio ${lastB.toFixed(6)}, e ratio ${lastE == null ? 'n/a' : lastE.toFixed(6)}`;
  });
}

function showCoeffs() {
  const [N, p, q, r] = model();
  const a = alphaOf(N, p, q, r), a2 = ((N - 1) / N) * p * r;
  $('coeffs').textContent = `alpha = ${a.toFixed(4)}, alpha2/alpha = ${a > 0 ? (a2 / a).toFixed(4) : 'n/a'}`;
}

await init();
$('grow').onclick = runGrowth;
$('reset').onclick = resetStepper;
$('step').onclick = stepOnce;
$('seq').onclick = runSequences;
for (const id of ['N', 'p', 'q', 'r', 'seed']) $(id).addEventListener('change', () => { showCoeffs(); resetStepper(); });
showCoeffs();
resetStepper();
runSequences();
