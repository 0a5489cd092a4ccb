/** Session view-model rules: run-box visibility, paging, download URL. */

import { describe, expect, it } from "vitest";

import { ApiClient, withToken } from "../src/api.js";
import {
  SubmitGuard,
  greetingView,
  pageCount,
  prependRun,
  shouldShowRunBox,
  tokenFromUrl,
} from "../src/state.js";
import { RunRecord, StatusPayload } from "../src/types.js";

const status = (over: Partial<StatusPayload> = {}): StatusPayload => ({
  label: "rbg",
  spent: 30,
  accrued: 200,
  balance: 170,
  can_run: true,
  current_week: 2,
  total_weeks: 13,
  ...over,
});

describe("run box visibility", () => {
  it("is shown exactly when /status reports can_run", () => {
    expect(shouldShowRunBox(status({ can_run: true }))).toBe(true);
    expect(shouldShowRunBox(status({ can_run: false }))).toBe(false);
    // gated but positive-looking numbers elsewhere never override the flag
    expect(shouldShowRunBox(status({ can_run: false, balance: 999 }))).toBe(false);
  });
});

describe("greeting block", () => {
  it("shows spent, accrued, and balance", () => {
    const view = greetingView(status());
    expect(view.heading).toContain("rbg");
    expect(view.lines.join(" ")).toContain("Spent 30 of 200");
    expect(view.lines.join(" ")).toContain("Balance: 170");
  });
});

describe("history paging", () => {
  it("pages of 10: 23 runs -> 3 pages", () => {
    expect(pageCount(23, 10)).toBe(3);
    expect(pageCount(0, 10)).toBe(1);
    expect(pageCount(40, 10)).toBe(4);
  });

  it("new runs go to the top of the table", () => {
    const run = (id: number): RunRecord => ({
      run_id: id, week: 1, N: 1, P: 1, K: 1, Na: 1, Ca: 1, Mg: 1, Nx: 1,
      reps: 1, cost: 10, yields: [12.5],
    });
    const rows = prependRun([run(1), run(2)], run(3));
    expect(rows.map((r) => r.run_id)).toEqual([3, 1, 2]);
  });
});

describe("token handling", () => {
  it("reads ?token= from the page URL", () => {
    expect(tokenFromUrl("?token=rbg4036")).toBe("rbg4036");
    expect(tokenFromUrl("?foo=1&token=ab1234")).toBe("ab1234");
    expect(tokenFromUrl("")).toBeNull();
    expect(tokenFromUrl("?token=")).toBeNull();
  });
});

describe("download link", () => {
  it("points straight at the server download endpoint (no re-serialization)", () => {
    const api = new ApiClient("", "rbg4036");
    expect(api.downloadUrl()).toBe("/download?token=rbg4036");
  });

  it("escapes the token and keeps existing query parts", () => {
    expect(withToken("http://x", "/history?page=2", "ab1234"))
      .toBe("http://x/history?page=2&token=ab1234");
  });
});

describe("submit guard", () => {
  it("admits exactly one in-flight submission", () => {
    const guard = new SubmitGuard();
    expect(guard.begin()).toBe(true);
    expect(guard.begin()).toBe(false); // the double click
    guard.end();
    expect(guard.begin()).toBe(true);
  });
});
