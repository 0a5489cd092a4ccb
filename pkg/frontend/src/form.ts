/**
 * Run-form state: raw text per coordinate, the replicate slider value,
 * per-field messages, and the submit-enabled flag. Mirrors the server's
 * validation through validateRunForm, so the Run button can only be
 * pressed on submissions the server would accept.
 */

import { NUTRIENTS, Nutrient } from "./types.js";
import { FormValidation, clampReps, validateRunForm } from "./validation.js";

export class RunFormState {
  fields: Record<Nutrient, string>;
  reps: number;

  constructor(maxInput: number = 1000) {
    this.maxInput = maxInput;
    this.fields = Object.fromEntries(NUTRIENTS.map((n) => [n, ""])) as Record<
      Nutrient,
      string
    >;
    this.reps = 1;
  }

  private maxInput: number;

  setField(name: Nutrient, raw: string): void {
    this.fields[name] = raw;
  }

  setReps(value: number): void {
    this.reps = clampReps(value);
  }

  validate(): FormValidation {
    return validateRunForm(this.fields, this.reps, this.maxInput);
  }

  get submitEnabled(): boolean {
    return this.validate().valid;
  }

  /** Message to show beside a field, empty when the field is fine. */
  messageFor(name: Nutrient | "reps"): string {
    return this.validate().messages[name] ?? "";
  }

  /** Values as the server expects them, only when valid. */
  payload(): { fields: Record<string, number>; reps: number } | null {
    const v = this.validate();
    if (!v.valid) return null;
    return { fields: v.values as Record<string, number>, reps: v.reps! };
  }
}
