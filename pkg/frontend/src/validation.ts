/**
 * Run-form validation, mirroring the server's rules exactly.
 *
 * The server and this client share one decimal-number grammar (plain
 * decimals with optional sign and exponent; no hex, NaN or Infinity
 * spellings) and one acceptance rule: every coordinate present, strictly
 * positive, finite, and at most the configured cap; replicates an
 * integer from 1 to 10. Parity is enforced by the shared test-vector
 * file consumed by both test suites.
 */

import { NUTRIENTS, Nutrient } from "./types.js";

export const MAX_INPUT = 1000;
export const MIN_REPS = 1;
export const MAX_REPS = 10;

const NUMBER_RE = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;

export interface FieldCheck {
  ok: boolean;
  value?: number;
  message?: string;
}

/** Validate one coordinate as typed (string) or as a JSON number. */
export function checkField(
  name: string,
  raw: string | number | null | undefined,
  maxInput: number = MAX_INPUT,
): FieldCheck {
  if (raw === null || raw === undefined) {
    return { ok: false, message: `${name} is missing` };
  }
  let value: number;
  if (typeof raw === "string") {
    const text = raw.trim();
    if (text === "") {
      return { ok: false, message: `${name} is empty` };
    }
    if (!NUMBER_RE.test(text)) {
      return { ok: false, message: `${name} is not a number` };
    }
    value = Number(text);
  } else if (typeof raw === "number") {
    value = raw;
  } else {
    return { ok: false, message: `${name} is not a number` };
  }
  if (!Number.isFinite(value)) {
    return { ok: false, message: `${name} must be finite` };
  }
  if (value <= 0) {
    return { ok: false, message: `${name} must be positive` };
  }
  if (value > maxInput) {
    return { ok: false, message: `${name} exceeds the maximum of ${maxInput}` };
  }
  return { ok: true, value };
}

export function checkReps(raw: unknown): FieldCheck {
  let value: number;
  if (typeof raw === "number") {
    value = raw;
  } else if (typeof raw === "string" && /^[+-]?\d+$/.test(raw.trim())) {
    value = Number(raw.trim());
  } else {
    return { ok: false, message: "reps must be an integer" };
  }
  if (!Number.isInteger(value) || value < MIN_REPS || value > MAX_REPS) {
    return {
      ok: false,
      message: `reps must be between ${MIN_REPS} and ${MAX_REPS}`,
    };
  }
  return { ok: true, value };
}

export interface FormValidation {
  valid: boolean;
  /** First offending field in canonical order (N..Nx, then reps). */
  field: string | null;
  messages: Partial<Record<Nutrient | "reps", string>>;
  values: Partial<Record<Nutrient, number>>;
  reps?: number;
}

/** Validate a whole form; reports every field's message plus the first offender. */
export function validateRunForm(
  fields: Partial<Record<string, string | number | null>>,
  reps: unknown,
  maxInput: number = MAX_INPUT,
): FormValidation {
  const messages: FormValidation["messages"] = {};
  const values: FormValidation["values"] = {};
  let firstBad: string | null = null;
  for (const name of NUTRIENTS) {
    const check = checkField(name, fields[name], maxInput);
    if (check.ok) {
      values[name] = check.value!;
    } else {
      messages[name] = check.message!;
      if (firstBad === null) firstBad = name;
    }
  }
  const repsCheck = checkReps(reps);
  if (!repsCheck.ok) {
    messages.reps = repsCheck.message!;
    if (firstBad === null) firstBad = "reps";
  }
  return {
    valid: firstBad === null,
    field: firstBad,
    messages,
    values,
    reps: repsCheck.value,
  };
}

/** Slider semantics: always an integer clamped into [1, 10]. */
export function clampReps(value: number): number {
  if (!Number.isFinite(value)) return MIN_REPS;
  return Math.min(MAX_REPS, Math.max(MIN_REPS, Math.round(value)));
}
