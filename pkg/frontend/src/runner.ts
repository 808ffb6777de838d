/** The trial loop as an explicit state machine.
 *
 * One session, one trial in flight: fetch the current trial, play its
 * audio to the end, accept exactly one choice, post it, advance.  The
 * server is the source of truth for position, so a refreshed or resumed
 * client lands on the first unanswered trial automatically.
 *
 * Transport and audio are injected, which keeps this file free of DOM
 * and network concerns and makes every transition unit-testable.
 */

import { ApiClient, isDone, Progress, TrialReply, TrialView } from "./api.js";

export type Phase =
  | "idle"       // constructed, start() not called
  | "practice"   // instruction screen, waiting for beginTrials()
  | "loading"    // fetching the current trial
  | "playing"    // audio under way; choices ignored
  | "choosing"   // playback finished; waiting for exactly one choice
  | "posting"    // response in flight
  | "done"       // server reported the session complete
  | "failed";    // unrecoverable error; see state.error

export interface RunnerState {
  phase: Phase;
  trial: TrialView | null;
  progress: Progress | null;
  /** 1-based transport attempt currently under way, for "retrying..." UI. */
  attempt: number;
  error: string | null;
}

export interface RunnerDeps {
  api: ApiClient;
  /** Resolves when playback has run to completion. */
  playAudio: (url: string) => Promise<void>;
  /** Monotonic-enough clock in milliseconds. */
  now: () => number;
  sleep: (ms: number) => Promise<void>;
}

export interface RunnerOptions {
  /** Show the practice screen before trial 0 (default true). */
  practice?: boolean;
  /** Transport attempts per request before giving up (default 8). */
  maxAttempts?: number;
  /** First retry delay; doubles per attempt (default 500 ms). */
  backoffMs?: number;
}

export type Listener = (state: RunnerState) => void;

export class TrialRunner {
  private state: RunnerState = {
    phase: "idle",
    trial: null,
    progress: null,
    attempt: 0,
    error: null,
  };
  private readonly listeners = new Set<Listener>();
  private readonly practice: boolean;
  private readonly maxAttempts: number;
  private readonly backoffMs: number;
  private playbackEndedAt = 0;
  private pendingChoice: ((label: string) => void) | null = null;
  private begun = false;

  constructor(
    private readonly deps: RunnerDeps,
    options: RunnerOptions = {},
  ) {
    this.practice = options.practice ?? true;
    this.maxAttempts = options.maxAttempts ?? 8;
    this.backoffMs = options.backoffMs ?? 500;
  }

  getState(): RunnerState {
    return this.state;
  }

  onChange(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private setState(patch: Partial<RunnerState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Run the whole session; resolves when done or failed. */
  async start(): Promise<void> {
    if (this.practice) {
      this.setState({ phase: "practice" });
      await new Promise<void>((resolve) => {
        this.beginResolve = resolve;
        if (this.begun) resolve();
      });
    }
    await this.loop();
  }

  private beginResolve: (() => void) | null = null;

  /** Leave the practice screen.  No-op once trials have begun. */
  beginTrials(): void {
    this.begun = true;
    this.beginResolve?.();
    this.beginResolve = null;
  }

  /** Record a choice.  Returns false (and does nothing) unless the
   * runner is actually waiting for one, so a click during playback or a
   * double click cannot post anything. */
  choose(label: string): boolean {
    if (this.state.phase !== "choosing" || this.pendingChoice === null) return false;
    if (!this.state.trial!.options.includes(label)) return false;
    const resolve = this.pendingChoice;
    this.pendingChoice = null;
    resolve(label);
    return true;
  }

  private async loop(): Promise<void> {
    for (;;) {
      this.setState({ phase: "loading" });
      let reply: TrialReply;
      try {
        reply = (await this.withRetry(() => this.deps.api.getTrial(), [200])) as TrialReply;
      } catch (err) {
        this.setState({ phase: "failed", error: describe(err) });
        return;
      }
      if (isDone(reply)) {
        this.setState({ phase: "done", trial: null });
        return;
      }

      const trial = reply;
      this.setState({ phase: "playing", trial, progress: trial.progress });
      try {
        await this.deps.playAudio(this.deps.api.absoluteAudioUrl(trial.audio_url));
      } catch (err) {
        this.setState({ phase: "failed", error: `audio playback failed: ${describe(err)}` });
        return;
      }
      this.playbackEndedAt = this.deps.now();

      const label = await new Promise<string>((resolve) => {
        this.pendingChoice = resolve;
        this.setState({ phase: "choosing" });
      });
      const rtMs = Math.max(0, this.deps.now() - this.playbackEndedAt);

      this.setState({ phase: "posting" });
      try {
        // A 409 means the server already counts this trial as answered
        // (e.g. our earlier attempt landed but the reply was lost); the
        // right move is to re-fetch the current trial, i.e. just proceed.
        await this.withRetry(
          () => this.deps.api.postResponse(trial.trial_index, label, rtMs),
          [200, 409],
        );
      } catch (err) {
        this.setState({ phase: "failed", error: describe(err) });
        return;
      }
    }
  }

  /** Run a request until its status is acceptable; retries network
   * failures with exponential backoff and never abandons the trial. */
  private async withRetry(
    request: () => Promise<{ status: number; body: unknown }>,
    okStatuses: number[],
  ): Promise<unknown> {
    for (let attempt = 1; attempt <= this.maxAttempts; attempt++) {
      this.setState({ attempt });
      try {
        const reply = await request();
        if (okStatuses.includes(reply.status)) {
          this.setState({ attempt: 0 });
          return reply.body;
        }
        const detail = (reply.body as { error?: string } | null)?.error ?? "";
        if (reply.status >= 500) {
          throw new Error(`server replied ${reply.status}: ${detail}`);
        }
        throw new FatalHttpError(`server replied ${reply.status}: ${detail}`);
      } catch (err) {
        if (err instanceof FatalHttpError) throw err;
        if (attempt === this.maxAttempts) {
          throw new Error(`giving up after ${attempt} attempts: ${describe(err)}`);
        }
        await this.deps.sleep(this.backoffMs * 2 ** (attempt - 1));
      }
    }
    throw new Error("unreachable");
  }
}

class FatalHttpError extends Error {}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
