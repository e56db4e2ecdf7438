// Typed client for the control server HTTP API. The dashboard computes
// nothing of its own: every number it shows arrives through these calls.

import { readEventStream } from "./sse.js";

export interface StatusRow {
  sensor: string;
  name: string;
  value: number;
  unit: string;
  status: string;
  standby_active: boolean;
  test_done_before_s: number | null;
}

export interface StatusSnapshot {
  sim_time: number;
  rows: StatusRow[];
}

export interface ControlRow {
  device: string;
  name: string;
  command: string | null;
  command_state: string | null;
  duration_s: number | null;
  remaining_s: number | null;
  present_status: string;
}

export interface ControlSnapshot {
  sim_time: number;
  rows: ControlRow[];
}

export interface CommandEnvelope {
  id: number;
  device: string;
  action: string;
  duration_s: number | null;
  target: string | null;
  issued_by: string;
  state: string;
  created_t: number;
  dispatched_t: number | null;
  acked_t: number | null;
  closed_t: number | null;
  reason: string | null;
  ack_ok: boolean | null;
}

export interface CommandDraft {
  device: string;
  action: string;
  duration_s?: number;
  target?: string;
}

/** time, value, flags, seq; tuples arrive as JSON arrays */
export type HistoryEntry = [number, number, number, number];

export interface ServerEvent {
  type: string;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class Client {
  token: string | null = null;

  constructor(readonly base: string = "") {}

  private async req(path: string, init: RequestInit = {}): Promise<Response> {
    const headers = new Headers(init.headers);
    if (this.token !== null) headers.set("Authorization", `Bearer ${this.token}`);
    if (init.body !== undefined) headers.set("Content-Type", "application/json");
    const resp = await fetch(this.base + path, { ...init, headers });
    if (!resp.ok) {
      let detail: string = resp.statusText || `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (body.detail !== undefined) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  async login(username: string, password: string): Promise<void> {
    const resp = await this.req("/api/login", {
      method: "POST",
      body: JSON.stringify({ username, password }),
    });
    const body = (await resp.json()) as { token: string };
    this.token = body.token;
  }

  async logout(): Promise<void> {
    try {
      await this.req("/api/logout", { method: "POST" });
    } finally {
      this.token = null;
    }
  }

  async status(): Promise<StatusSnapshot> {
    return (await this.req("/api/status")).json();
  }

  async control(): Promise<ControlSnapshot> {
    return (await this.req("/api/control")).json();
  }

  async commands(): Promise<CommandEnvelope[]> {
    const body = (await (await this.req("/api/commands")).json()) as {
      commands: CommandEnvelope[];
    };
    return body.commands;
  }

  async issue(draft: CommandDraft): Promise<CommandEnvelope> {
    const resp = await this.req("/api/command", {
      method: "POST",
      body: JSON.stringify(draft),
    });
    return resp.json();
  }

  async history(kind: string, limit = 500): Promise<HistoryEntry[]> {
    const resp = await this.req(
      `/api/history/${encodeURIComponent(kind)}?limit=${limit}`,
    );
    const body = (await resp.json()) as { entries: HistoryEntry[] };
    return body.entries;
  }

  async health(): Promise<{ ok: boolean; sim_time: number }> {
    return (await this.req("/api/health")).json();
  }

  /**
   * Subscribe to the server event stream. Resolves when the stream ends;
   * rejects on connection failure or abort. Callers fall back to polling.
   */
  async events(
    onEvent: (ev: ServerEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const resp = await fetch(this.base + "/api/events", { signal });
    if (!resp.ok || resp.body === null) {
      throw new ApiError(resp.status, "event stream unavailable");
    }
    await readEventStream(resp.body, (ev) => {
      let parsed: ServerEvent;
      try {
        parsed = JSON.parse(ev.data) as ServerEvent;
      } catch {
        return; // skip malformed frames, the stream carries on
      }
      onEvent(parsed);
    });
  }
}
