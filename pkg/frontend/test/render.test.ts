import { describe, expect, it } from "vitest";

import type { HistoryEntry } from "../src/api.js";
import {
  fmt,
  renderControlWindow,
  renderDraftErrors,
  renderHistoryChart,
  renderLoginForm,
  renderStatusWindow,
} from "../src/render.js";
import type { ControlVM, StatusVM } from "../src/viewmodel.js";

describe("fmt", () => {
  it("keeps integers whole and trims float noise to 3 decimals", () => {
    expect(fmt(40)).toBe("40");
    expect(fmt(2.4911570549011230)).toBe("2.491");
    expect(fmt(0.5)).toBe("0.5");
    expect(fmt(2.5001)).toBe("2.5");
    expect(fmt(20.605480866)).toBe("20.605");
  });
});

function statusVM(over: Partial<StatusVM["rows"][0]> = {}, alarm = false): StatusVM {
  return {
    simTime: 120,
    alarm,
    rows: [
      {
        sensor: "tank_level",
        name: "Overhead tank water level",
        value: 2.5,
        unit: "m",
        status: "OK",
        alarm: false,
        standby: false,
        stale: false,
        testAgeS: 20,
        ...over,
      },
    ],
  };
}

describe("renderStatusWindow", () => {
  it("renders a clean row with the raw value attached", () => {
    const html = renderStatusWindow(statusVM());
    expect(html).toContain('data-sensor="tank_level"');
    expect(html).toContain('data-raw="2.5"');
    expect(html).toContain(">2.5 m<");
    expect(html).toContain("20 s ago");
    expect(html).not.toContain("banner");
    expect(html).not.toContain('class="alarm');
  });

  it("shows the alarm banner and flags the faulty row", () => {
    const html = renderStatusWindow(
      statusVM({ status: "Error", alarm: true, standby: true }, true),
    );
    expect(html).toContain('class="banner alarm"');
    expect(html).toMatch(/<tr[^>]*class="alarm"/);
    expect(html).toContain('"pill bad">Error<');
    expect(html).toContain(">standby</span>");
  });

  it("marks stale rows and a never-tested age", () => {
    const html = renderStatusWindow(statusVM({ stale: true, testAgeS: null }));
    expect(html).toMatch(/<tr[^>]*class="stale"/);
    expect(html).toContain(">never<");
    expect(html).toContain(">stale</span>");
  });

  it("escapes names", () => {
    const html = renderStatusWindow(statusVM({ name: "a<b>&c" }));
    expect(html).toContain("a&lt;b&gt;&amp;c");
  });
});

function controlVM(over: Partial<ControlVM["rows"][0]> = {}): ControlVM {
  return {
    simTime: 300,
    rows: [
      {
        device: "lake_pump",
        name: "Lake pump",
        present: "OFF",
        command: null,
        commandState: null,
        durationS: null,
        remainingS: null,
        pending: false,
        ...over,
      },
    ],
  };
}

describe("renderControlWindow", () => {
  it("renders an idle row with dashes", () => {
    const html = renderControlWindow(controlVM());
    expect(html).toContain('data-device="lake_pump"');
    expect(html).toContain('class="present">OFF<');
    expect(html).not.toContain("spinner");
    expect(html).not.toContain("countdown");
  });

  it("spins while a command is in flight", () => {
    const html = renderControlWindow(
      controlVM({ command: "ON", commandState: "pending", pending: true }),
    );
    expect(html).toContain('class="spinner"');
    expect(html).toContain(">ON<span");
  });

  it("counts down an acked timed ON", () => {
    const html = renderControlWindow(
      controlVM({
        command: "ON",
        commandState: "acked",
        present: "ON",
        durationS: 30,
        remainingS: 12.5,
      }),
    );
    expect(html).toContain('class="present">ON<');
    expect(html).toContain("12.5 s left");
    expect(html).toContain('data-raw="12.5"');
    expect(html).not.toContain("spinner");
  });
});

describe("renderLoginForm", () => {
  it("renders fields and only shows a banner on error", () => {
    const clean = renderLoginForm();
    expect(clean).toContain('name="username"');
    expect(clean).toContain('name="password"');
    expect(clean).not.toContain("banner");
    expect(renderLoginForm("bad credentials")).toContain("bad credentials");
  });
});

describe("renderDraftErrors", () => {
  it("renders one item per field and nothing when clean", () => {
    expect(renderDraftErrors({})).toBe("");
    const html = renderDraftErrors({ duration: "duration is required" });
    expect(html).toContain('data-field="duration"');
    expect(html).toContain("duration is required");
  });
});

describe("renderHistoryChart", () => {
  it("shows an empty state without data", () => {
    expect(renderHistoryChart("tank_level", [])).toContain("no data in range");
  });

  it("draws a constant series as a flat midline", () => {
    const entries: HistoryEntry[] = [
      [0, 2.5, 0, 1],
      [30, 2.5, 0, 2],
      [60, 2.5, 0, 3],
    ];
    const html = renderHistoryChart("tank_level", entries);
    const ys = [...html.matchAll(/,([0-9.]+)/g)].map((m) => Number(m[1]));
    expect(ys.length).toBe(3);
    expect(new Set(ys).size).toBe(1); // every point at the same height
    expect(html).toContain('data-points="3"');
  });

  it("marks error-flagged points distinctly", () => {
    const entries: HistoryEntry[] = [
      [0, 2.5, 0, 1],
      [30, 2.4, 2, 2],
      [60, 2.3, 3, 3],
      [90, 2.2, 1, 4],
    ];
    const html = renderHistoryChart("tank_level", entries);
    const dots = [...html.matchAll(/class="err-point"/g)];
    expect(dots.length).toBe(2); // only flags with the error bit set
  });

  it("spans the value range in the caption", () => {
    const entries: HistoryEntry[] = [
      [0, 1, 0, 1],
      [10, 3, 0, 2],
    ];
    const html = renderHistoryChart("lake_level", entries);
    expect(html).toContain("lake_level: 1 to 3");
  });
});
