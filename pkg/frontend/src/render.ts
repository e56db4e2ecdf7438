// HTML string renderers, kept pure so tests can pin them without a browser.
// Numbers pass through fmt() exactly once and each value cell carries the
// raw API number in data-raw, so any displayed figure is traceable to the
// response it came from.

import type { HistoryEntry } from "./api.js";
import type { ControlVM, DraftErrors, StatusVM } from "./viewmodel.js";

export function fmt(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return v.toFixed(3).replace(/0+$/, "").replace(/\.$/, "");
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function ageText(ageS: number | null): string {
  if (ageS === null) return "never";
  return `${fmt(ageS)} s ago`;
}

export function renderStatusWindow(vm: StatusVM): string {
  const banner = vm.alarm
    ? `<div class="banner alarm">Sensor fault: check flagged rows</div>`
    : "";
  const rows = vm.rows
    .map((r) => {
      const cls = [r.alarm ? "alarm" : "", r.stale ? "stale" : ""]
        .filter(Boolean)
        .join(" ");
      const tags =
        (r.standby ? `<span class="tag">standby</span>` : "") +
        (r.stale ? `<span class="tag">stale</span>` : "");
      return (
        `<tr data-sensor="${esc(r.sensor)}"${cls ? ` class="${cls}"` : ""}>` +
        `<td>${esc(r.name)}</td>` +
        `<td class="num" data-raw="${r.value}">${fmt(r.value)} ${esc(r.unit)}</td>` +
        `<td data-raw="${r.testAgeS ?? ""}">${ageText(r.testAgeS)}</td>` +
        `<td><span class="pill ${r.alarm ? "bad" : "ok"}">${esc(r.status)}</span>${tags}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<section class="window" id="status-window">` +
    `<h2>Status <span class="sim-time" data-raw="${vm.simTime}">t=${fmt(vm.simTime)} s</span></h2>` +
    banner +
    `<table><thead><tr><th>Sensor</th><th>Present data</th>` +
    `<th>Test done before</th><th>Test status</th></tr></thead>` +
    `<tbody>${rows}</tbody></table></section>`
  );
}

export function renderControlWindow(vm: ControlVM): string {
  const rows = vm.rows
    .map((r) => {
      const spinner = r.pending ? `<span class="spinner">sending</span>` : "";
      const remaining =
        r.remainingS !== null && r.remainingS > 0
          ? `<span class="countdown" data-raw="${r.remainingS}">${fmt(r.remainingS)} s left</span>`
          : "";
      return (
        `<tr data-device="${esc(r.device)}">` +
        `<td>${esc(r.name)}</td>` +
        `<td class="present">${esc(r.present)}</td>` +
        `<td>${r.command === null ? "-" : esc(r.command)}${spinner}</td>` +
        `<td data-raw="${r.durationS ?? ""}">${r.durationS === null ? "-" : fmt(r.durationS)}</td>` +
        `<td>${remaining}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<section class="window" id="control-window">` +
    `<h2>Control <span class="sim-time" data-raw="${vm.simTime}">t=${fmt(vm.simTime)} s</span></h2>` +
    `<table><thead><tr><th>Device</th><th>Present status</th>` +
    `<th>Command</th><th>Duration (s)</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table></section>`
  );
}

export function renderLoginForm(error = ""): string {
  const banner = error ? `<div class="banner alarm">${esc(error)}</div>` : "";
  return (
    `<section class="window" id="login-window"><h2>Sign in</h2>${banner}` +
    `<form id="login-form">` +
    `<label>User <input name="username" autocomplete="username"></label>` +
    `<label>Password <input name="password" type="password" autocomplete="current-password"></label>` +
    `<button type="submit">Log in</button></form></section>`
  );
}

export function renderDraftErrors(errors: DraftErrors): string {
  const fields = Object.entries(errors)
    .map(([field, msg]) => `<li data-field="${esc(field)}">${esc(msg ?? "")}</li>`)
    .join("");
  return fields ? `<ul class="field-errors">${fields}</ul>` : "";
}

const CHART_W = 640;
const CHART_H = 180;
const PAD = 8;

/**
 * Inline SVG time series. Points whose flags carry the self-test error bit
 * get their own marker class; a constant series draws as a flat midline.
 */
export function renderHistoryChart(
  kind: string,
  entries: HistoryEntry[],
): string {
  if (entries.length === 0) {
    return `<div class="empty" id="history-chart">no data in range</div>`;
  }
  const ts = entries.map((e) => e[0]);
  const vs = entries.map((e) => e[1]);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const vMin = Math.min(...vs);
  const vMax = Math.max(...vs);
  const x = (t: number): number =>
    tMax === tMin
      ? CHART_W / 2
      : PAD + ((t - tMin) / (tMax - tMin)) * (CHART_W - 2 * PAD);
  const y = (v: number): number =>
    vMax === vMin
      ? CHART_H / 2
      : CHART_H - PAD - ((v - vMin) / (vMax - vMin)) * (CHART_H - 2 * PAD);
  const pts = entries
    .map((e) => `${x(e[0]).toFixed(1)},${y(e[1]).toFixed(1)}`)
    .join(" ");
  const errDots = entries
    .filter((e) => (e[2] & 0x02) !== 0)
    .map(
      (e) =>
        `<circle class="err-point" cx="${x(e[0]).toFixed(1)}" ` +
        `cy="${y(e[1]).toFixed(1)}" r="3" data-raw="${e[1]}"/>`,
    )
    .join("");
  return (
    `<figure id="history-chart" data-kind="${esc(kind)}" data-points="${entries.length}">` +
    `<figcaption>${esc(kind)}: ${fmt(vMin)} to ${fmt(vMax)}</figcaption>` +
    `<svg viewBox="0 0 ${CHART_W} ${CHART_H}" role="img">` +
    `<polyline fill="none" class="series" points="${pts}"/>` +
    errDots +
    `</svg></figure>`
  );
}
