/** Payload shapes of the game's HTTP API. */

export const NUTRIENTS = ["N", "P", "K", "Na", "Ca", "Mg", "Nx"] as const;
export type Nutrient = (typeof NUTRIENTS)[number];

export interface StatusPayload {
  label: string;
  spent: number;
  accrued: number;
  balance: number;
  can_run: boolean;
  current_week: number;
  total_weeks: number;
}

export interface RunRecord {
  run_id: number;
  week: number;
  N: number;
  P: number;
  K: number;
  Na: number;
  Ca: number;
  Mg: number;
  Nx: number;
  reps: number;
  cost: number;
  yields: number[];
}

export interface HistoryPage {
  page: number;
  pages: number;
  page_size: number;
  total: number;
  runs: RunRecord[];
}

export interface LeaderboardSeries {
  label: string;
  points: [number, number][];
}

export interface LeaderboardPayload {
  view: string;
  series: LeaderboardSeries[];
}

export interface ApiError {
  error: string;
  message: string;
  field?: string;
}
