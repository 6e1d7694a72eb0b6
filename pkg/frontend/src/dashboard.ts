// DOM wiring for the single-page dashboard: scenario builder on the left,
// live run charts and the baseline-vs-treatment comparison on the right.
// All numbers on screen come from service payload fields.

import { ApiClient, ApiError } from "./api";
import { chartSvg, compareSeries, frameSeries } from "./charts";
import { MetricsPoller } from "./poller";
import {
  POLICY_COMPONENTS,
  ScenarioDraft,
  defaultDraft,
  emptyPolicyDraft,
  toPayload,
} from "./scenario-form";
import type { MetricsFrame, PolicyKind, RunHandle } from "./types";
import { hasErrors, validateDraft } from "./validation";

const CHART_KEYS: (keyof MetricsFrame & string)[] = [
  "crime_rate_100k",
  "oc_members",
  "recruits",
  "mean_r",
  "incarcerated",
];

const POLICY_LABELS: Record<PolicyKind, string> = {
  primary_socialisation: "Primary socialisation (OC-family juveniles)",
  secondary_socialisation: "Secondary socialisation (crime-prone pupils)",
  law_enforcement: "Law enforcement targeting",
};

export class Dashboard {
  private draft: ScenarioDraft = defaultDraft();
  private poller: MetricsPoller | null = null;
  private currentRun: RunHandle | null = null;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {}

  mount(): void {
    this.root.innerHTML = `
      <section class="panel" id="builder">
        <h2>Scenario</h2>
        <div id="fields"></div>
        <h3>Policies</h3>
        <div id="policies"></div>
        <div class="row" id="policy-buttons"></div>
        <button id="submit" class="primary">Create scenario & launch run</button>
        <div id="form-status" class="status"></div>
      </section>
      <section class="panel" id="monitor">
        <h2>Run <span id="run-id"></span></h2>
        <div class="progress"><div id="progress-fill"></div></div>
        <div id="run-status" class="status"></div>
        <button id="cancel" disabled>Cancel run</button>
        <div id="charts" class="charts"></div>
        <h3>Compare (treatment minus baseline)</h3>
        <div class="row">
          <input id="compare-a" placeholder="treatment run id" />
          <input id="compare-b" placeholder="baseline run id" />
          <button id="compare-go">Compare</button>
        </div>
        <div id="compare-charts" class="charts"></div>
      </section>
    `;
    this.renderForm();
    this.bind();
  }

  private field(path: string, label: string, value: string): string {
    return `
      <label class="field" data-path="${path}">
        <span>${label}</span>
        <input name="${path}" value="${value}" />
        <em class="error" data-error-for="${path}"></em>
      </label>`;
  }

  private renderForm(): void {
    const fields = this.root.querySelector<HTMLElement>("#fields")!;
    fields.innerHTML =
      this.field("population.population_size", "Population size", this.draft.populationSize) +
      this.field("population.unemployment_rate", "Unemployment rate", this.draft.unemploymentRate) +
      this.field("population.oc_seed.member_count", "OC seed size", this.draft.ocSeedSize) +
      this.field("h", "Neighborhood radius h", this.draft.hopRadius) +
      this.field("recovery_fraction", "Tie recovery after prison", this.draft.recoveryFraction) +
      this.field("horizon_ticks", "Horizon (ticks)", this.draft.horizonTicks) +
      this.field("seed", "Seed", this.draft.seed);

    const policies = this.root.querySelector<HTMLElement>("#policies")!;
    policies.innerHTML = this.draft.policies
      .map((policy, i) => {
        const comps = POLICY_COMPONENTS[policy.kind]
          .map(
            (c) => `
            <label class="comp"><input type="checkbox" data-policy="${i}" data-component="${c}"
              ${policy.components.includes(c) ? "checked" : ""}/>${c}</label>`,
          )
          .join("");
        return `
        <fieldset class="policy" data-index="${i}">
          <legend>${POLICY_LABELS[policy.kind]}
            <button class="remove-policy" data-index="${i}" title="remove">x</button>
          </legend>
          ${this.field(`policies[${i}].start_tick`, "Start tick", policy.startTick)}
          ${this.field(`policies[${i}].end_tick`, "End tick", policy.endTick)}
          ${this.field(`policies[${i}].target_share`, "Target share", policy.targetShare)}
          ${
            policy.kind === "law_enforcement"
              ? this.field(`policies[${i}].scrutiny_factor`, "Scrutiny factor", policy.scrutinyFactor) +
                this.field(
                  `policies[${i}].repression_multiplier`,
                  "Repression multiplier",
                  policy.repressionMultiplier,
                )
              : ""
          }
          ${
            policy.kind === "primary_socialisation"
              ? this.field(
                  `policies[${i}].tie_weakening_factor`,
                  "Tie weakening factor",
                  policy.tieWeakeningFactor,
                )
              : ""
          }
          <div class="comps">${comps}</div>
        </fieldset>`;
      })
      .join("");

    const buttons = this.root.querySelector<HTMLElement>("#policy-buttons")!;
    buttons.innerHTML = (Object.keys(POLICY_LABELS) as PolicyKind[])
      .map((kind) => `<button class="add-policy" data-kind="${kind}">+ ${POLICY_LABELS[kind]}</button>`)
      .join("");
    this.refreshValidation();
  }

  private bind(): void {
    this.root.addEventListener("input", (event) => {
      const target = event.target as HTMLInputElement;
      if (target.name) {
        this.applyFieldEdit(target.name, target.value);
        this.refreshValidation();
      }
      if (target.dataset.component !== undefined) {
        const policy = this.draft.policies[Number(target.dataset.policy)];
        const comp = target.dataset.component!;
        policy.components = target.checked
          ? [...policy.components, comp]
          : policy.components.filter((c) => c !== comp);
      }
    });
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.classList.contains("add-policy")) {
        this.draft.policies.push(emptyPolicyDraft(target.dataset.kind as PolicyKind));
        this.renderForm();
      } else if (target.classList.contains("remove-policy")) {
        this.draft.policies.splice(Number(target.dataset.index), 1);
        this.renderForm();
      } else if (target.id === "submit") {
        void this.submit();
      } else if (target.id === "cancel") {
        void this.cancel();
      } else if (target.id === "compare-go") {
        void this.compare();
      }
    });
  }

  private applyFieldEdit(path: string, value: string): void {
    const simple: Record<string, (v: string) => void> = {
      "population.population_size": (v) => (this.draft.populationSize = v),
      "population.unemployment_rate": (v) => (this.draft.unemploymentRate = v),
      "population.oc_seed.member_count": (v) => (this.draft.ocSeedSize = v),
      h: (v) => (this.draft.hopRadius = v),
      recovery_fraction: (v) => (this.draft.recoveryFraction = v),
      horizon_ticks: (v) => (this.draft.horizonTicks = v),
      seed: (v) => (this.draft.seed = v),
    };
    if (simple[path]) {
      simple[path](value);
      return;
    }
    const match = path.match(/^policies\[(\d+)\]\.(.+)$/);
    if (!match) return;
    const policy = this.draft.policies[Number(match[1])];
    const setter: Record<string, (v: string) => void> = {
      start_tick: (v) => (policy.startTick = v),
      end_tick: (v) => (policy.endTick = v),
      target_share: (v) => (policy.targetShare = v),
      scrutiny_factor: (v) => (policy.scrutinyFactor = v),
      repression_multiplier: (v) => (policy.repressionMultiplier = v),
      tie_weakening_factor: (v) => (policy.tieWeakeningFactor = v),
    };
    setter[match[2]]?.(value);
  }

  refreshValidation(errors = validateDraft(this.draft)): void {
    for (const em of this.root.querySelectorAll<HTMLElement>(".error")) {
      em.textContent = errors[em.dataset.errorFor ?? ""] ?? "";
    }
    const submit = this.root.querySelector<HTMLButtonElement>("#submit")!;
    submit.disabled = hasErrors(errors);
  }

  private setStatus(selector: string, message: string, isError = false): void {
    const el = this.root.querySelector<HTMLElement>(selector)!;
    el.textContent = message;
    el.classList.toggle("error-banner", isError);
  }

  private async submit(): Promise<void> {
    const errors = validateDraft(this.draft);
    this.refreshValidation(errors);
    if (hasErrors(errors)) return;
    try {
      const payload = toPayload(this.draft);
      const { id } = await this.api.postScenario(payload);
      const handle = await this.api.startRun(id);
      this.setStatus("#form-status", `scenario ${id}, run ${handle.run_id} started`);
      this.watch(handle);
    } catch (error) {
      if (error instanceof ApiError && error.fieldErrors.length > 0) {
        const mapped: Record<string, string> = {};
        for (const fe of error.fieldErrors) mapped[fe.path] = fe.message;
        this.refreshValidation({ ...validateDraft(this.draft), ...mapped });
        this.setStatus("#form-status", "server rejected the scenario", true);
      } else {
        this.setStatus("#form-status", `request failed: ${String(error)}`, true);
      }
    }
  }

  watch(handle: RunHandle): void {
    this.poller?.stop();
    this.currentRun = handle;
    this.root.querySelector("#run-id")!.textContent = handle.run_id;
    this.root.querySelector<HTMLButtonElement>("#cancel")!.disabled = false;
    this.poller = new MetricsPoller(this.api, handle.run_id, {
      onStatus: (h) => this.renderProgress(h),
      onFrames: (_fresh, all) => this.renderCharts(all),
      onDone: (h) => {
        this.renderProgress(h);
        this.root.querySelector<HTMLButtonElement>("#cancel")!.disabled = true;
        if (h.status === "failed") {
          this.setStatus("#run-status", `run failed: ${h.error ?? "unknown error"}`, true);
        }
      },
      onError: (error) => this.setStatus("#run-status", String(error), true),
    });
    this.poller.start();
  }

  private renderProgress(handle: RunHandle): void {
    this.currentRun = handle;
    const share = handle.progress.horizon
      ? Math.round((100 * handle.progress.tick) / handle.progress.horizon)
      : 0;
    this.root.querySelector<HTMLElement>("#progress-fill")!.style.width = `${share}%`;
    this.setStatus(
      "#run-status",
      `${handle.status}: tick ${handle.progress.tick}/${handle.progress.horizon}`,
    );
  }

  renderCharts(frames: MetricsFrame[]): void {
    const host = this.root.querySelector<HTMLElement>("#charts")!;
    host.innerHTML = CHART_KEYS.map((key) => chartSvg(frameSeries(frames, key))).join("");
  }

  private async cancel(): Promise<void> {
    if (!this.currentRun) return;
    try {
      await this.api.cancelRun(this.currentRun.run_id);
    } catch (error) {
      this.setStatus("#run-status", `cancel failed: ${String(error)}`, true);
    }
  }

  private async compare(): Promise<void> {
    const a = this.root.querySelector<HTMLInputElement>("#compare-a")!.value.trim();
    const b = this.root.querySelector<HTMLInputElement>("#compare-b")!.value.trim();
    if (!a || !b) return;
    try {
      const payload = await this.api.getCompare(a, b);
      const host = this.root.querySelector<HTMLElement>("#compare-charts")!;
      host.innerHTML = CHART_KEYS.map((key) => chartSvg(compareSeries(payload, key))).join("");
    } catch (error) {
      this.setStatus("#run-status", `compare failed: ${String(error)}`, true);
    }
  }
}
