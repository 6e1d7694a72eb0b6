// Cursor-based metrics polling: each request asks only for ticks at or
// beyond the cursor, so already-rendered frames are never re-requested.

import type { ApiClient } from "./api";
import type { MetricsFrame, RunHandle } from "./types";

export interface PollerCallbacks {
  onFrames?: (frames: MetricsFrame[], all: MetricsFrame[]) => void;
  onStatus?: (handle: RunHandle) => void;
  onDone?: (handle: RunHandle) => void;
  onError?: (error: unknown) => void;
}

export class MetricsPoller {
  readonly frames: MetricsFrame[] = [];
  readonly requestedCursors: number[] = [];
  private cursor = 1;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private api: ApiClient,
    private runId: string,
    private callbacks: PollerCallbacks = {},
    private intervalMs = 1000,
  ) {}

  async pollOnce(): Promise<RunHandle> {
    const handle = await this.api.getRun(this.runId);
    this.callbacks.onStatus?.(handle);
    if (handle.progress.tick >= this.cursor) {
      this.requestedCursors.push(this.cursor);
      const batch = await this.api.getMetrics(this.runId, this.cursor);
      if (batch.frames.length > 0) {
        this.frames.push(...batch.frames);
        this.cursor = batch.frames[batch.frames.length - 1].tick + 1;
        this.callbacks.onFrames?.(batch.frames, this.frames);
      }
    }
    if (handle.status === "finished" || handle.status === "failed") {
      this.stop();
      this.callbacks.onDone?.(handle);
    }
    return handle;
  }

  start(): void {
    this.stopped = false;
    const loop = async () => {
      if (this.stopped) return;
      try {
        await this.pollOnce();
      } catch (error) {
        this.callbacks.onError?.(error);
      }
      if (!this.stopped) {
        this.timer = setTimeout(loop, this.intervalMs);
      }
    };
    void loop();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
