// Wire types mirroring the control service's JSON schemas. The server is
// the validation authority; these types only describe the shapes.

export type PolicyKind =
  | "primary_socialisation"
  | "secondary_socialisation"
  | "law_enforcement";

export interface PolicyPayload {
  kind: PolicyKind;
  start_tick: number;
  end_tick: number;
  target_share: number;
  components: string[];
  scrutiny_factor: number;
  repression_multiplier: number;
  tie_weakening_factor: number;
  friends_to_add: number;
  ties_to_remove: number;
}

export interface ScenarioPayload {
  schema_version: number;
  seed: number;
  horizon_ticks: number;
  ticks_per_year: number;
  h: number;
  recovery_fraction: number;
  population: {
    population_size: number;
    unemployment_rate: number;
    facilitator_share: number;
    random_seed: number | null;
    propensity: { mu: number; sigma: number; threshold_percentile: number };
    oc_seed: {
      member_count: number;
      topology: string;
      tree_branching: number;
      gender_table: string;
      age_table: string;
    };
    distributions: Record<string, unknown>;
  };
  lifecycle: Record<string, unknown>;
  crime: Record<string, unknown>;
  policies: PolicyPayload[];
}

export interface RunHandle {
  run_id: string;
  status: "queued" | "running" | "finished" | "failed";
  progress: { tick: number; horizon: number };
  scenario_id: string;
  scenario_hash: string;
  seed: number;
  replications: number;
  error?: string;
}

// one row per finished tick; 16 per-class columns follow the fixed fields
export interface MetricsFrame {
  tick: number;
  crimes: number;
  crime_rate_100k: number;
  oc_members: number;
  recruits: number;
  incarcerated: number;
  mean_r: number;
  interventions: number;
  [classColumn: string]: number;
}

export interface MetricsResponse {
  run_id: string;
  from_tick: number;
  frames: MetricsFrame[];
}

export interface CompareResponse {
  a: string;
  b: string;
  ticks: number[];
  differences: Record<string, number[]>;
}

export interface FieldError {
  path: string;
  message: string;
}
