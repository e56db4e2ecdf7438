// View models between raw API snapshots and the renderer. They classify
// (alarm, staleness, in-flight commands) and validate drafts, but never
// transform a number the server sent.

import type {
  ControlRow,
  ControlSnapshot,
  StatusSnapshot,
} from "./api.js";

/** A self test this old (or never run) marks the row stale. */
export const STALE_TEST_AGE_S = 3600;

export interface StatusRowVM {
  sensor: string;
  name: string;
  value: number;
  unit: string;
  status: string;
  alarm: boolean;
  standby: boolean;
  stale: boolean;
  testAgeS: number | null;
}

export interface StatusVM {
  simTime: number;
  rows: StatusRowVM[];
  alarm: boolean;
}

export function buildStatusView(
  snap: StatusSnapshot,
  staleAfterS: number = STALE_TEST_AGE_S,
): StatusVM {
  const rows = snap.rows.map((r) => ({
    sensor: r.sensor,
    name: r.name,
    value: r.value,
    unit: r.unit,
    status: r.status,
    alarm: r.status !== "OK",
    standby: r.standby_active,
    stale: r.test_done_before_s === null || r.test_done_before_s > staleAfterS,
    testAgeS: r.test_done_before_s,
  }));
  return {
    simTime: snap.sim_time,
    rows,
    alarm: rows.some((r) => r.alarm),
  };
}

export interface ControlRowVM {
  device: string;
  name: string;
  /** acked server state only; an in-flight command never changes this */
  present: string;
  command: string | null;
  commandState: string | null;
  durationS: number | null;
  remainingS: number | null;
  pending: boolean;
}

export interface ControlVM {
  simTime: number;
  rows: ControlRowVM[];
}

function inFlight(r: ControlRow): boolean {
  return r.command_state === "pending" || r.command_state === "dispatched";
}

export function buildControlView(snap: ControlSnapshot): ControlVM {
  return {
    simTime: snap.sim_time,
    rows: snap.rows.map((r) => ({
      device: r.device,
      name: r.name,
      present: r.present_status,
      command: r.command,
      commandState: r.command_state,
      durationS: r.duration_s,
      remainingS: r.remaining_s,
      pending: inFlight(r),
    })),
  };
}

// -- command draft validation ----------------------------------------------

export interface Draft {
  device: string;
  action: string;
  /** raw text from the duration field */
  duration: string;
  target: string;
}

export const MAX_DURATION_S = 7 * 86_400;

export type DraftErrors = Partial<Record<keyof Draft, string>>;

/**
 * Field-level validation mirroring the server's command rules, so obvious
 * mistakes are caught before a round trip. Returns an empty object when the
 * draft is sendable.
 */
export function validateDraft(d: Draft): DraftErrors {
  const errors: DraftErrors = {};
  if (!d.device) errors.device = "pick a device";
  if (d.action !== "ON" && d.action !== "OFF" && d.action !== "ConnectStandby") {
    errors.action = "command must be ON, OFF or ConnectStandby";
  }
  const wantsDuration = d.action === "ON" || d.action === "ConnectStandby";
  if (wantsDuration) {
    if (d.duration.trim() === "") {
      errors.duration = "duration is required";
    } else {
      const secs = Number(d.duration);
      if (!Number.isFinite(secs)) errors.duration = "duration must be a number";
      else if (secs <= 0) errors.duration = "duration must be positive";
      else if (secs > MAX_DURATION_S) errors.duration = "duration is over 7 days";
    }
  } else if (d.action === "OFF" && d.duration.trim() !== "") {
    errors.duration = "OFF takes no duration";
  }
  if (d.action === "ConnectStandby") {
    if (d.device !== "standby_selector") {
      errors.device = "ConnectStandby goes to the standby selector";
    }
    if (d.target.trim() === "") errors.target = "pick a sensor";
  } else if (d.device === "standby_selector") {
    errors.action = "the standby selector only takes ConnectStandby";
  }
  return errors;
}

/** Convert a validated draft to the request body shape. */
export function draftToCommand(d: Draft): {
  device: string;
  action: string;
  duration_s?: number;
  target?: string;
} {
  const body: { device: string; action: string; duration_s?: number; target?: string } = {
    device: d.device,
    action: d.action,
  };
  if (d.duration.trim() !== "") body.duration_s = Number(d.duration);
  if (d.target.trim() !== "") body.target = d.target;
  return body;
}
