import { describe, expect, it } from "vitest";

import { defaultDraft, emptyPolicyDraft } from "../src/scenario-form";
import { hasErrors, validateDraft } from "../src/validation";

describe("scenario form validation", () => {
  it("default draft is valid", () => {
    expect(hasErrors(validateDraft(defaultDraft()))).toBe(false);
  });

  it("unemployment rate above 1 is rejected with its field path", () => {
    const draft = defaultDraft();
    draft.unemploymentRate = "1.5";
    const errors = validateDraft(draft);
    expect(errors["population.unemployment_rate"]).toBeTruthy();
  });

  it("non-numeric and fractional inputs are caught", () => {
    const draft = defaultDraft();
    draft.populationSize = "lots";
    draft.hopRadius = "2.5";
    const errors = validateDraft(draft);
    expect(errors["population.population_size"]).toBe("enter a number");
    expect(errors["h"]).toBe("must be a whole number");
  });

  it("oc seed must stay below a tenth of the population", () => {
    const draft = defaultDraft();
    draft.populationSize = "200";
    draft.ocSeedSize = "30";
    const errors = validateDraft(draft);
    expect(errors["population.oc_seed.member_count"]).toContain("tenth");
  });

  it("policy windows and parameters are checked per policy path", () => {
    const draft = defaultDraft();
    const policy = emptyPolicyDraft("law_enforcement");
    policy.startTick = "50";
    policy.endTick = "10";
    policy.scrutinyFactor = "0";
    policy.repressionMultiplier = "0.5";
    draft.policies.push(policy);
    const errors = validateDraft(draft);
    expect(errors["policies[0].start_tick"]).toContain("before");
    expect(errors["policies[0].scrutiny_factor"]).toBeTruthy();
    expect(errors["policies[0].repression_multiplier"]).toBeTruthy();
  });
});
