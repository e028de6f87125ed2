import init, { corner_exponent, mesh, adapt } from "./pkg/afw2d_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(outId, f) {
  try {
    $(outId).classList.remove("error");
    f();
  } catch (e) {
    $(outId).classList.add("error");
    $(outId).textContent = String(e);
  }
}

function showMesh(report, svgId) {
  $(svgId).innerHTML = report.svg;
  const svg = $(svgId).querySelector("svg");
  svg.setAttribute("viewBox", `0 0 ${svg.getAttribute("width")} ${svg.getAttribute("height")}`);
  svg.removeAttribute("width");
  svg.removeAttribute("height");
}

await init();

$("c-run").onclick = () => guard("c-out", () => {
  const l = corner_exponent(num("c-angle"), num("c-nu"), $("c-faces").value);
  $("c-out").textContent = `displacement ~ r^${l.toFixed(8)}\nstress       ~ r^${(l - 1).toFixed(8)}`;
});

$("m-run").onclick = () => guard("m-out", () => {
  const r = JSON.parse(mesh($("m-domain").value, num("m-levels")));
  showMesh(r, "m-svg");
  $("m-out").textContent =
    `triangles   ${r.triangles}\nh           ${r.h.toExponential(4)}\n` +
    `c_h         ${r.c_h.toExponential(4)}\nshape ratio ${r.shape_ratio.toFixed(4)}`;
});

$("a-run").onclick = () => guard("a-out", () => {
  const r = JSON.parse(adapt($("a-domain").value, num("a-order"), num("a-steps"), num("a-frac")));
  showMesh(r, "a-svg");
  const lines = ["step   ndof   error %   best %"];
  for (const row of r.rows) {
    lines.push(`${String(row.step).padStart(4)} ${String(row.ndof).padStart(6)} ${row.total_pct.toFixed(4).padStart(9)} ${row.best_pct.toFixed(4).padStart(8)}`);
  }
  $("a-out").textContent = lines.join("\n");
});

$("c-run").click();
$("m-run").click();
