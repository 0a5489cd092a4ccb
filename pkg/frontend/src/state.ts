/**
 * View-model logic for the session page, kept DOM-free so the rules the
 * game cares about (run box visibility, paging, newest-first ordering,
 * the no-double-submit guard) are directly testable.
 */

import { RunRecord, StatusPayload } from "./types.js";

/** The run block exists exactly when the account is in the black. */
export function shouldShowRunBox(status: StatusPayload): boolean {
  return status.can_run === true;
}

export interface GreetingView {
  heading: string;
  lines: string[];
}

export function greetingView(status: StatusPayload): GreetingView {
  return {
    heading: `Hello ${status.label}`,
    lines: [
      `Week ${status.current_week} of ${status.total_weeks}`,
      `Spent ${status.spent} of ${status.accrued} accrued units`,
      `Balance: ${status.balance}`,
      status.can_run
        ? "You are in the black: new runs are open."
        : "Balance is not positive: runs unlock after the next weekly allowance.",
    ],
  };
}

export function pageCount(total: number, pageSize: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}

/** Insert a freshly stored run at the top of the table model. */
export function prependRun(rows: RunRecord[], run: RunRecord): RunRecord[] {
  return [run, ...rows];
}

export function tokenFromUrl(search: string): string | null {
  const params = new URLSearchParams(search);
  const token = params.get("token");
  return token && token.length > 0 ? token : null;
}

/** Guard that makes double-clicking Run submit exactly once. */
export class SubmitGuard {
  private inFlight = false;

  begin(): boolean {
    if (this.inFlight) return false;
    this.inFlight = true;
    return true;
  }

  end(): void {
    this.inFlight = false;
  }

  get busy(): boolean {
    return this.inFlight;
  }
}
