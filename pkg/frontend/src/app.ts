// Page wiring: login, live tables fed by the event stream (polling when the
// stream is down), the command form, and the per-sensor history chart.

import { ApiError, Client } from "./api.js";
import {
  renderControlWindow,
  renderDraftErrors,
  renderHistoryChart,
  renderLoginForm,
  renderStatusWindow,
} from "./render.js";
import {
  buildControlView,
  buildStatusView,
  draftToCommand,
  validateDraft,
  type Draft,
} from "./viewmodel.js";

const POLL_FALLBACK_MS = 5_000;

const client = new Client("");
const root = document.getElementById("app") as HTMLElement;

// The unsent command draft survives a forced re-login.
let draft: Draft = { device: "", action: "ON", duration: "", target: "" };
let draftErrors = {};
let loggedIn = false;
let selectedSensor: string | null = null;
let streamAbort: AbortController | null = null;
let pollTimer: number | null = null;

function readDraftFromForm(): void {
  const form = document.getElementById("command-form") as HTMLFormElement | null;
  if (form === null) return;
  const data = new FormData(form);
  draft = {
    device: String(data.get("device") ?? ""),
    action: String(data.get("action") ?? "ON"),
    duration: String(data.get("duration") ?? ""),
    target: String(data.get("target") ?? ""),
  };
}

function commandFormHtml(devices: { device: string; name: string }[]): string {
  const options = devices
    .map(
      (d) =>
        `<option value="${d.device}"${d.device === draft.device ? " selected" : ""}>${d.name}</option>`,
    )
    .join("");
  const sel = (a: string): string => (draft.action === a ? " selected" : "");
  return (
    `<section class="window" id="command-window"><h2>Issue command</h2>` +
    `<form id="command-form">` +
    `<label>Device <select name="device"><option value=""></option>${options}</select></label>` +
    `<label>Command <select name="action">` +
    `<option${sel("ON")}>ON</option><option${sel("OFF")}>OFF</option>` +
    `<option${sel("ConnectStandby")}>ConnectStandby</option></select></label>` +
    `<label>Duration (s) <input name="duration" value="${draft.duration}"></label>` +
    `<label>Target sensor <input name="target" value="${draft.target}"></label>` +
    `<button type="submit">Send</button></form>` +
    `<div id="command-errors">${renderDraftErrors(draftErrors)}</div></section>`
  );
}

async function refreshTables(): Promise<void> {
  const [status, control] = await Promise.all([client.status(), client.control()]);
  const statusEl = document.getElementById("status-slot");
  const controlEl = document.getElementById("control-slot");
  const formEl = document.getElementById("command-slot");
  if (statusEl === null || controlEl === null || formEl === null) return;
  readDraftFromForm();
  statusEl.innerHTML = renderStatusWindow(buildStatusView(status));
  controlEl.innerHTML = renderControlWindow(buildControlView(control));
  formEl.innerHTML = commandFormHtml(
    control.rows.map((r) => ({ device: r.device, name: r.name })),
  );
  bindCommandForm();
  bindRowSelection();
  if (selectedSensor !== null) await refreshChart(selectedSensor);
}

async function refreshChart(kind: string): Promise<void> {
  const slot = document.getElementById("chart-slot");
  if (slot === null) return;
  const entries = await client.history(kind, 500);
  slot.innerHTML = renderHistoryChart(kind, entries);
}

function bindRowSelection(): void {
  for (const tr of root.querySelectorAll<HTMLElement>("#status-window tr[data-sensor]")) {
    tr.addEventListener("click", () => {
      selectedSensor = tr.dataset.sensor ?? null;
      if (selectedSensor !== null) void refreshChart(selectedSensor);
    });
  }
}

function bindCommandForm(): void {
  const form = document.getElementById("command-form") as HTMLFormElement | null;
  if (form === null) return;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    readDraftFromForm();
    draftErrors = validateDraft(draft);
    const errorsEl = document.getElementById("command-errors");
    if (errorsEl !== null) errorsEl.innerHTML = renderDraftErrors(draftErrors);
    if (Object.keys(draftErrors).length > 0) return;
    void client
      .issue(draftToCommand(draft))
      .then(() => {
        draft = { device: "", action: "ON", duration: "", target: "" };
        return refreshTables();
      })
      .catch(handleApiFailure);
  });
}

function handleApiFailure(err: unknown): void {
  if (err instanceof ApiError && err.status === 401) {
    // session expired: back to login, keeping the unsent draft
    stopLive();
    loggedIn = false;
    client.token = null;
    showLogin("session expired, sign in again");
    return;
  }
  const errorsEl = document.getElementById("command-errors");
  if (errorsEl !== null && err instanceof Error) {
    errorsEl.innerHTML = `<div class="banner alarm">${err.message}</div>`;
  }
}

function stopLive(): void {
  streamAbort?.abort();
  streamAbort = null;
  if (pollTimer !== null) {
    window.clearTimeout(pollTimer);
    pollTimer = null;
  }
}

function schedulePoll(): void {
  pollTimer = window.setTimeout(() => {
    void refreshTables().catch(handleApiFailure);
    void startStream(); // try to get the stream back
  }, POLL_FALLBACK_MS);
}

async function startStream(): Promise<void> {
  if (!loggedIn) return;
  streamAbort = new AbortController();
  try {
    await client.events((ev) => {
      if (ev.type === "status" || ev.type === "command") {
        void refreshTables().catch(handleApiFailure);
      }
    }, streamAbort.signal);
  } catch {
    // fall through to polling below
  }
  if (loggedIn) schedulePoll();
}

function showLogin(error = ""): void {
  root.innerHTML = renderLoginForm(error);
  const form = document.getElementById("login-form") as HTMLFormElement;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const data = new FormData(form);
    void client
      .login(String(data.get("username") ?? ""), String(data.get("password") ?? ""))
      .then(() => {
        loggedIn = true;
        showMain();
      })
      .catch((err: unknown) => {
        showLogin(err instanceof ApiError ? err.message : "login failed");
      });
  });
}

function showMain(): void {
  root.innerHTML =
    `<div id="status-slot"></div><div id="control-slot"></div>` +
    `<div id="command-slot"></div><div id="chart-slot"></div>` +
    `<p><button id="logout">Log out</button></p>`;
  document.getElementById("logout")?.addEventListener("click", () => {
    void client.logout().finally(() => {
      stopLive();
      loggedIn = false;
      showLogin();
    });
  });
  void refreshTables().catch(handleApiFailure);
  void startStream();
}

showLogin();
