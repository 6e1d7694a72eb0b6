// Generated by scripts/sync-default-scenario.mjs; do not edit by hand.
import type { ScenarioPayload } from "./types";

export const DEFAULT_SCENARIO: ScenarioPayload = {
  "schema_version": 1,
  "seed": 1,
  "horizon_ticks": 120,
  "ticks_per_year": 12,
  "h": 2,
  "recovery_fraction": 0.5,
  "population": {
    "population_size": 10000,
    "unemployment_rate": 0.12,
    "facilitator_share": 0.05,
    "random_seed": null,
    "propensity": {
      "mu": 0,
      "sigma": 0.5,
      "threshold_percentile": 0.9
    },
    "oc_seed": {
      "member_count": 30,
      "topology": "clique",
      "tree_branching": 3,
      "gender_table": "oc_gender",
      "age_table": "oc_age"
    },
    "distributions": {
      "bundle": "builtin"
    }
  },
  "lifecycle": {
    "friendship_make_rate": 0.4,
    "friendship_break_rate": 0.15,
    "unemployment_target": 0.12,
    "high_school_completion": 0.75,
    "graduation_ages": {
      "primary": 11,
      "secondary": 14,
      "high_school": 19
    },
    "newborn_propensity": "fresh"
  },
  "crime": {
    "baseline_table": "default",
    "risk_factors": "default",
    "facilitator_crime_multiplier": 1.2
  },
  "policies": []
} as ScenarioPayload;
