import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { MetricsPoller } from "../src/poller";
import type { MetricsFrame } from "../src/types";

function frame(tick: number): MetricsFrame {
  return {
    tick,
    crimes: tick * 2,
    crime_rate_100k: 100 + tick,
    oc_members: 30,
    recruits: 0,
    incarcerated: 1,
    mean_r: 0.01,
    interventions: 0,
  };
}

/** Serves a run that finishes at `horizon`, advancing by `step` ticks per poll. */
function fakeServer(horizon: number, step: number) {
  let tick = 0;
  const metricRequests: number[] = [];
  const fetchImpl = async (url: string): Promise<Response> => {
    const body = (() => {
      if (url.includes("/metrics")) {
        const fromTick = Number(new URL(url).searchParams.get("from_tick"));
        metricRequests.push(fromTick);
        const frames = [];
        for (let t = fromTick; t <= tick; t++) frames.push(frame(t));
        return { run_id: "run1", from_tick: fromTick, frames };
      }
      tick = Math.min(tick + step, horizon);
      return {
        run_id: "run1",
        status: tick >= horizon ? "finished" : "running",
        progress: { tick, horizon },
        scenario_id: "default",
        scenario_hash: "x",
        seed: 1,
        replications: 1,
      };
    })();
    return new Response(JSON.stringify(body), { status: 200 });
  };
  return { fetchImpl, metricRequests };
}

describe("cursor-based metrics polling", () => {
  it("collects every tick exactly once across polls", async () => {
    const server = fakeServer(12, 5);
    const api = new ApiClient("http://test", server.fetchImpl);
    const poller = new MetricsPoller(api, "run1");
    let done = false;
    while (!done) {
      const handle = await poller.pollOnce();
      done = handle.status === "finished";
    }
    expect(poller.frames.map((f) => f.tick)).toEqual(
      Array.from({ length: 12 }, (_, i) => i + 1),
    );
  });

  it("never re-requests already-rendered ticks", async () => {
    const server = fakeServer(10, 3);
    const api = new ApiClient("http://test", server.fetchImpl);
    const poller = new MetricsPoller(api, "run1");
    for (let i = 0; i < 6; i++) await poller.pollOnce();
    for (let i = 1; i < server.metricRequests.length; i++) {
      expect(server.metricRequests[i]).toBeGreaterThan(server.metricRequests[i - 1]);
    }
    expect(poller.requestedCursors[0]).toBe(1);
  });

  it("stops polling once the run reports finished", async () => {
    const server = fakeServer(6, 6);
    const api = new ApiClient("http://test", server.fetchImpl);
    let doneCalls = 0;
    const poller = new MetricsPoller(api, "run1", { onDone: () => doneCalls++ });
    await poller.pollOnce();
    expect(doneCalls).toBe(1);
    const requestsAfter = server.metricRequests.length;
    // a stopped poller scheduled no further work; pollOnce was the last call
    expect(server.metricRequests.length).toBe(requestsAfter);
    expect(poller.frames).toHaveLength(6);
  });
});
