import init, { Demo, scenario_names } from "./pkg/perimeter_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("map");
const ctx = canvas.getContext("2d");
const out = $("out");

let demo = null;
let base = null;
let shown = { oracle: null, agent: null };

function toCanvas([x, y]) {
  return [(x * canvas.width) / demo.width(), (y * canvas.height) / demo.height()];
}

function draw() {
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(base, 0, 0, canvas.width, canvas.height);
  const v = demo.vertices();
  ctx.fillStyle = "#fff";
  for (let i = 0; i < v.length; i += 2) {
    const [x, y] = toCanvas([v[i], v[i + 1]]);
    ctx.fillRect(x - 3, y - 3, 6, 6);
  }
  for (const [key, color, dash] of [["oracle", "#0f9", []], ["agent", "#f0f", [6, 4]]]) {
    const ring = shown[key];
    if (!ring || ring.length < 2) continue;
    ctx.strokeStyle = color;
    ctx.lineWidth = 3;
    ctx.setLineDash(dash);
    ctx.beginPath();
    ring.forEach((p, i) => {
      const [x, y] = toCanvas(p);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

async function load(name) {
  demo = new Demo(name);
  const img = new ImageData(new Uint8ClampedArray(demo.heatmap_rgba()), demo.width(), demo.height());
  base = await createImageBitmap(img);
  shown = { oracle: null, agent: null };
  $("info").textContent = `${demo.width()}×${demo.height()} px, ${demo.vertices().length / 2} vertices`;
  draw();
}

// let the status text paint before a long synchronous call
function busy(message, work) {
  out.textContent = message;
  setTimeout(() => {
    try {
      work();
    } catch (e) {
      out.textContent = `error: ${e}`;
    }
    draw();
  }, 20);
}

function solve() {
  const lambda = $("lambda").value;
  busy(`enumerating subsets at λ=${lambda}…`, () => {
    const s = JSON.parse(demo.solve(lambda));
    shown.oracle = s.hull;
    out.textContent =
      `optimum at λ=${lambda}\nselected ${JSON.stringify(s.selected)}\n` +
      `value ${s.value} (${s.value_float.toFixed(4)})\n` +
      `${s.enclosed_pixels} pixels enclosed, ${s.zero_pixels_enclosed} of them zero\n` +
      `${s.evaluated} subsets evaluated`;
  });
}

function train() {
  const lambda = $("lambda").value;
  const seed = Number($("seed").value) >>> 0;
  const episodes = Number($("episodes").value) >>> 0;
  busy(`training at λ=${lambda}, seed ${seed}…`, () => {
    const t = performance.now();
    const doc = JSON.parse(demo.train(lambda, seed, episodes, $("pinned").checked));
    shown.agent = doc.hull;
    out.textContent =
      `agent at λ=${lambda}, seed ${seed}, ${doc.episodes} episodes ` +
      `(${((performance.now() - t) / 1000).toFixed(1)} s)\n` +
      `selected ${JSON.stringify(doc.selected)}\n` +
      `value ${doc.value.num}/${doc.value.den} (${doc.value.float.toFixed(4)})\n` +
      `${doc.enclosed_pixels} pixels enclosed, ${doc.zero_pixels_enclosed} of them zero`;
  });
}

await init();
for (const name of scenario_names()) {
  $("scenario").add(new Option(name, name));
}
$("scenario").value = "fork";
$("scenario").onchange = (e) => load(e.target.value).catch((err) => (out.textContent = `error: ${err}`));
document.querySelectorAll("[data-lambda]").forEach((b) => (b.onclick = () => ($("lambda").value = b.dataset.lambda)));
$("solve").onclick = solve;
$("train").onclick = train;
await load("fork");
out.textContent = "ready";
