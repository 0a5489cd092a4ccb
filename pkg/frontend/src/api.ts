/**
 * Thin fetch client for the game API. The token travels in the query
 * string (the login URL is simply app-url?token=...).
 *
 * Downloads are deliberately NOT fetched and re-serialized: the
 * Download button links straight to the server endpoint so the saved
 * file is byte-identical to what the server emits.
 */

import {
  ApiError,
  HistoryPage,
  LeaderboardPayload,
  RunRecord,
  StatusPayload,
} from "./types.js";

export class ApiFailure extends Error {
  constructor(
    public status: number,
    public body: ApiError,
  ) {
    super(body.message || body.error || `HTTP ${status}`);
  }

  get kind(): string {
    return this.body.error ?? "unknown";
  }

  get field(): string | undefined {
    return this.body.field;
  }
}

export function withToken(base: string, path: string, token: string): string {
  const sep = path.includes("?") ? "&" : "?";
  return `${base}${path}${sep}token=${encodeURIComponent(token)}`;
}

export class ApiClient {
  constructor(
    private base: string,
    private token: string,
    private fetcher: typeof fetch = fetch,
  ) {}

  private async call<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetcher(withToken(this.base, path, this.token), init);
    if (!response.ok) {
      let body: ApiError;
      try {
        body = (await response.json()) as ApiError;
      } catch {
        body = { error: "unknown", message: `HTTP ${response.status}` };
      }
      throw new ApiFailure(response.status, body);
    }
    return (await response.json()) as T;
  }

  status(): Promise<StatusPayload> {
    return this.call<StatusPayload>("/status");
  }

  history(page: number): Promise<HistoryPage> {
    return this.call<HistoryPage>(`/history?page=${page}`);
  }

  async submitRun(
    fields: Record<string, number>,
    reps: number,
  ): Promise<RunRecord> {
    const body = JSON.stringify({ ...fields, reps });
    const out = await this.call<{ run: RunRecord }>("/run", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body,
    });
    return out.run;
  }

  leaderboard(view: string): Promise<LeaderboardPayload> {
    // public endpoint: no token required, harmless to include none
    return fetchJson<LeaderboardPayload>(
      `${this.base}/leaderboard?view=${encodeURIComponent(view)}`,
      this.fetcher,
    );
  }

  /** Direct server URL for the Download anchor (no client re-serialization). */
  downloadUrl(): string {
    return withToken(this.base, "/download", this.token);
  }
}

async function fetchJson<T>(url: string, fetcher: typeof fetch): Promise<T> {
  const response = await fetcher(url);
  if (!response.ok) {
    throw new ApiFailure(response.status, {
      error: "unknown",
      message: `HTTP ${response.status}`,
    });
  }
  return (await response.json()) as T;
}
