// Client-side checks for the scenario form. Error keys use the same field
// paths the server reports, so 422 responses can be rendered in place.
// The server remains the authority; this only gates the submit button.

import type { PolicyDraft, ScenarioDraft } from "./scenario-form";

export type FieldErrors = Record<string, string>;

function parsed(value: string): number | null {
  const trimmed = value.trim();
  if (trimmed === "") return null;
  const n = Number(trimmed);
  return Number.isFinite(n) ? n : null;
}

function checkNumber(
  errors: FieldErrors,
  path: string,
  value: string,
  opts: { min?: number; max?: number; maxExclusive?: number; minExclusive?: number; integer?: boolean },
): number | null {
  const n = parsed(value);
  if (n === null) {
    errors[path] = "enter a number";
    return null;
  }
  if (opts.integer && !Number.isInteger(n)) {
    errors[path] = "must be a whole number";
    return null;
  }
  if (opts.min !== undefined && n < opts.min) {
    errors[path] = `must be at least ${opts.min}`;
    return null;
  }
  if (opts.minExclusive !== undefined && n <= opts.minExclusive) {
    errors[path] = `must be greater than ${opts.minExclusive}`;
    return null;
  }
  if (opts.max !== undefined && n > opts.max) {
    errors[path] = `must be at most ${opts.max}`;
    return null;
  }
  if (opts.maxExclusive !== undefined && n >= opts.maxExclusive) {
    errors[path] = `must be below ${opts.maxExclusive}`;
    return null;
  }
  return n;
}

export function validateDraft(draft: ScenarioDraft): FieldErrors {
  const errors: FieldErrors = {};
  const size = checkNumber(errors, "population.population_size", draft.populationSize, {
    min: 100,
    integer: true,
  });
  checkNumber(errors, "population.unemployment_rate", draft.unemploymentRate, { min: 0, max: 1 });
  const ocSize = checkNumber(errors, "population.oc_seed.member_count", draft.ocSeedSize, {
    min: 0,
    integer: true,
  });
  if (size !== null && ocSize !== null && ocSize >= size / 10) {
    errors["population.oc_seed.member_count"] = "must stay below a tenth of the population";
  }
  checkNumber(errors, "h", draft.hopRadius, { min: 1, max: 3, integer: true });
  checkNumber(errors, "recovery_fraction", draft.recoveryFraction, { min: 0, max: 1 });
  checkNumber(errors, "horizon_ticks", draft.horizonTicks, { min: 12, integer: true });
  checkNumber(errors, "seed", draft.seed, { integer: true });
  draft.policies.forEach((policy, i) => validatePolicy(errors, policy, `policies[${i}]`));
  return errors;
}

function validatePolicy(errors: FieldErrors, policy: PolicyDraft, path: string): void {
  const start = checkNumber(errors, `${path}.start_tick`, policy.startTick, { min: 0, integer: true });
  const end = checkNumber(errors, `${path}.end_tick`, policy.endTick, { min: 1, integer: true });
  if (start !== null && end !== null && start >= end) {
    errors[`${path}.start_tick`] = "must start before the end tick";
  }
  checkNumber(errors, `${path}.target_share`, policy.targetShare, { min: 0, max: 1 });
  checkNumber(errors, `${path}.scrutiny_factor`, policy.scrutinyFactor, {
    minExclusive: 0,
    max: 1,
  });
  checkNumber(errors, `${path}.repression_multiplier`, policy.repressionMultiplier, { min: 1 });
  checkNumber(errors, `${path}.tie_weakening_factor`, policy.tieWeakeningFactor, { min: 0, max: 1 });
  checkNumber(errors, `${path}.friends_to_add`, policy.friendsToAdd, { min: 0, integer: true });
  checkNumber(errors, `${path}.ties_to_remove`, policy.tiesToRemove, { min: 0, integer: true });
}

export function hasErrors(errors: FieldErrors): boolean {
  return Object.keys(errors).length > 0;
}
