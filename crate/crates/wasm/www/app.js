import init, { collision_curve, parse, random_restriction_string, Demo } from "./pkg/looksearch_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = { red: "#d33", green: "#3a3", blue: "#36c", orange: "#e90" };

function plotCurve() {
  const r = Number($("curve-r").value), n = Number($("curve-n").value);
  const out = JSON.parse(collision_curve(r, n, 24, 7));
  const cv = $("curve"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  if (out.ok === false) {
    g.fillStyle = "#b00";
    g.fillText(out.message, 10, 20);
    return;
  }
  const pad = 30, w = cv.width - 2 * pad, h = cv.height - 2 * pad;
  const px = (theta) => pad + (theta / Math.PI) * w;
  const py = (p) => pad + (1 - p) * h;
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  g.fillStyle = "#555";
  g.fillText("0", pad - 4, cv.height - 12);
  g.fillText("π", pad + w - 4, cv.height - 12);
  g.fillText("1", 10, pad + 4);

  g.strokeStyle = "#36c";
  g.beginPath();
  for (let i = 0; i <= 200; i++) {
    const t = (Math.PI * i) / 200;
    const y = py(Math.pow(1 - t / Math.PI, r));
    i ? g.lineTo(px(t), y) : g.moveTo(px(t), y);
  }
  g.stroke();
  g.fillStyle = "#d33";
  for (const p of out.points) {
    g.beginPath();
    g.arc(px(p.theta), py(p.measured), 3, 0, 2 * Math.PI);
    g.fill();
  }
}

function showTree(node, depth = 0) {
  const pad = "  ".repeat(depth);
  if (!node.children) {
    return node.op === "ALL" ? `${pad}(everything)\n` : `${pad}${node.name} ${node.op} ${node.value}\n`;
  }
  return `${pad}${node.op}\n` + node.children.map((c) => showTree(c, depth + 1)).join("");
}

function showParse() {
  const text = $("parse-text").value, out = JSON.parse(parse(text)), el = $("parse-out");
  if (out.ok) {
    el.className = "";
    el.textContent = `canonical: ${out.canonical}\n\n` + showTree(out.tree);
  } else {
    el.className = "err";
    el.textContent = `${text}\n${" ".repeat(out.offset)}^\n${out.message}`;
  }
}

let demo, points, query = [0.6, 0.4];

function drawPlane(results, allowed) {
  const cv = $("plane"), g = cv.getContext("2d"), s = cv.width / 2;
  const at = (x, y) => [s + x * s * 0.95, s - y * s * 0.95];
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#eee";
  g.beginPath();
  g.moveTo(0, s); g.lineTo(cv.width, s); g.moveTo(s, 0); g.lineTo(s, cv.height);
  g.stroke();
  const hit = new Set(results.map((r) => r.id));
  for (const p of points) {
    const [x, y] = at(p.x, p.y);
    g.globalAlpha = allowed(p) ? 1 : 0.15;
    g.fillStyle = COLORS[p.attributes.color] || "#888";
    const size = { S: 2, M: 3, L: 4 }[p.attributes.size] || 3;
    g.beginPath();
    g.arc(x, y, size, 0, 2 * Math.PI);
    g.fill();
    if (hit.has(p.id)) {
      g.strokeStyle = "#000";
      g.beginPath();
      g.arc(x, y, size + 4, 0, 2 * Math.PI);
      g.stroke();
    }
  }
  g.globalAlpha = 1;
  const [qx, qy] = at(query[0], query[1]);
  g.strokeStyle = "#000";
  g.setLineDash([4, 4]);
  g.beginPath();
  g.moveTo(s, s); g.lineTo(qx, qy);
  g.stroke();
  g.setLineDash([]);
  g.fillStyle = "#000";
  g.fillRect(qx - 4, qy - 4, 8, 8);
}

function runSearch() {
  const text = $("search-text").value, k = Number($("search-k").value);
  const out = JSON.parse(demo.search(query[0], query[1], text, k, 400));
  const table = $("search-results"), msg = $("search-msg");
  table.innerHTML = "";
  if (!out.ok) {
    msg.className = "err";
    msg.textContent = out.offset === undefined ? out.message : `at ${out.offset}: ${out.message}`;
    drawPlane([], () => true);
    return;
  }
  const admitted = new Set(JSON.parse(demo.matching(text)).ids);
  msg.className = "";
  msg.textContent = `${out.results.length} results; the restriction admits ${admitted.size} of ${points.length} points`;
  table.innerHTML = "<tr><th>id</th><th>color</th><th>size</th><th>price</th><th>distance</th></tr>";
  const byId = new Map(points.map((p) => [p.id, p]));
  for (const r of out.results) {
    const a = byId.get(r.id).attributes;
    const row = table.insertRow();
    for (const v of [r.id, a.color, a.size, a.price, r.distance.toFixed(4)]) row.insertCell().textContent = v;
  }
  drawPlane(out.results, (p) => admitted.has(p.id));
}

await init();
$("status").remove();
demo = new Demo(400, 11);
points = JSON.parse(demo.points());

$("curve-run").onclick = plotCurve;
$("parse-text").oninput = showParse;
$("search-text").oninput = runSearch;
$("search-k").oninput = runSearch;
$("search-random").onclick = () => {
  $("search-text").value = random_restriction_string((Math.random() * 2 ** 32) >>> 0);
  runSearch();
};
$("plane").onclick = (e) => {
  const cv = $("plane"), s = cv.width / 2, rect = cv.getBoundingClientRect();
  query = [(e.clientX - rect.left - s) / (s * 0.95), (s - (e.clientY - rect.top)) / (s * 0.95)];
  runSearch();
};

plotCurve();
showParse();
runSearch();
