// Form state for the scenario builder. The draft keeps user input as
// strings (what the inputs hold); serialization merges the typed values
// back into the full default payload, so everything the form does not
// expose passes through unchanged and the default draft round-trips to
// the bundled scenario exactly.

import { DEFAULT_SCENARIO } from "./default-scenario";
import type { PolicyKind, PolicyPayload, ScenarioPayload } from "./types";

export interface PolicyDraft {
  kind: PolicyKind;
  startTick: string;
  endTick: string;
  targetShare: string;
  components: string[];
  scrutinyFactor: string;
  repressionMultiplier: string;
  tieWeakeningFactor: string;
  friendsToAdd: string;
  tiesToRemove: string;
}

export interface ScenarioDraft {
  populationSize: string;
  unemploymentRate: string;
  ocSeedSize: string;
  hopRadius: string;
  recoveryFraction: string;
  horizonTicks: string;
  seed: string;
  policies: PolicyDraft[];
}

export const POLICY_COMPONENTS: Record<PolicyKind, string[]> = {
  primary_socialisation: ["weaken_family_tie", "add_friends", "education_track", "mother_job"],
  secondary_socialisation: [
    "education_guarantee",
    "prosocial_support",
    "social_activities",
    "class_reassignment",
    "mother_job",
    "child_job",
  ],
  law_enforcement: ["scrutiny", "repression", "facilitators"],
};

export function defaultDraft(base: ScenarioPayload = DEFAULT_SCENARIO): ScenarioDraft {
  return {
    populationSize: String(base.population.population_size),
    unemploymentRate: String(base.population.unemployment_rate),
    ocSeedSize: String(base.population.oc_seed.member_count),
    hopRadius: String(base.h),
    recoveryFraction: String(base.recovery_fraction),
    horizonTicks: String(base.horizon_ticks),
    seed: String(base.seed),
    policies: base.policies.map(policyDraftFrom),
  };
}

export function policyDraftFrom(p: PolicyPayload): PolicyDraft {
  return {
    kind: p.kind,
    startTick: String(p.start_tick),
    endTick: String(p.end_tick),
    targetShare: String(p.target_share),
    components: [...p.components],
    scrutinyFactor: String(p.scrutiny_factor),
    repressionMultiplier: String(p.repression_multiplier),
    tieWeakeningFactor: String(p.tie_weakening_factor),
    friendsToAdd: String(p.friends_to_add),
    tiesToRemove: String(p.ties_to_remove),
  };
}

export function emptyPolicyDraft(kind: PolicyKind): PolicyDraft {
  return {
    kind,
    startTick: "0",
    endTick: String(DEFAULT_SCENARIO.horizon_ticks),
    targetShare: "0.5",
    components: [],
    scrutinyFactor: "0.5",
    repressionMultiplier: "2",
    tieWeakeningFactor: "0.5",
    friendsToAdd: "2",
    tiesToRemove: "2",
  };
}

export function toPayload(
  draft: ScenarioDraft,
  base: ScenarioPayload = DEFAULT_SCENARIO,
): ScenarioPayload {
  const payload: ScenarioPayload = JSON.parse(JSON.stringify(base));
  payload.population.population_size = int(draft.populationSize);
  payload.population.unemployment_rate = num(draft.unemploymentRate);
  payload.population.oc_seed.member_count = int(draft.ocSeedSize);
  payload.h = int(draft.hopRadius);
  payload.recovery_fraction = num(draft.recoveryFraction);
  payload.horizon_ticks = int(draft.horizonTicks);
  payload.seed = int(draft.seed);
  payload.policies = draft.policies.map((p) => ({
    kind: p.kind,
    start_tick: int(p.startTick),
    end_tick: int(p.endTick),
    target_share: num(p.targetShare),
    components: [...p.components],
    scrutiny_factor: num(p.scrutinyFactor),
    repression_multiplier: num(p.repressionMultiplier),
    tie_weakening_factor: num(p.tieWeakeningFactor),
    friends_to_add: int(p.friendsToAdd),
    ties_to_remove: int(p.tiesToRemove),
  }));
  return payload;
}

function num(value: string): number {
  return Number(value.trim());
}

function int(value: string): number {
  return Math.trunc(Number(value.trim()));
}
