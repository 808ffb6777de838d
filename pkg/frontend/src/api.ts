/** Typed client for the session HTTP API.
 *
 * All transport goes through an injected FetchJson function so the state
 * machine can be tested without a server and the browser build can add
 * its own fetch policy in one place.
 */

export interface Progress {
  answered: number;
  total: number;
}

export interface TrialView {
  trial_index: number;
  audio_url: string;
  options: [string, string];
  progress: Progress;
}

export type TrialReply = TrialView | { done: true };

export interface StatusReply {
  status: "created" | "running" | "complete";
  answered: number;
  total: number;
}

export interface HttpReply {
  status: number;
  body: unknown;
}

/** Resolves with the decoded reply for any HTTP status; rejects only on
 * network-level failure (connection refused, timeout, ...). */
export type FetchJson = (
  url: string,
  init?: { method?: "GET" | "POST"; body?: unknown },
) => Promise<HttpReply>;

export function isDone(reply: TrialReply): reply is { done: true } {
  return (reply as { done?: boolean }).done === true;
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(
    baseUrl: string,
    readonly sessionId: string,
    private readonly fetchJson: FetchJson,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  trialUrl(): string {
    return `${this.baseUrl}/api/sessions/${this.sessionId}/trial`;
  }

  statusUrl(): string {
    return `${this.baseUrl}/api/sessions/${this.sessionId}/status`;
  }

  responseUrl(): string {
    return `${this.baseUrl}/api/sessions/${this.sessionId}/response`;
  }

  /** audio_url arrives server-relative (e.g. /api/audio/s1/0.wav). */
  absoluteAudioUrl(audioUrl: string): string {
    if (/^https?:\/\//.test(audioUrl)) return audioUrl;
    return this.baseUrl + audioUrl;
  }

  getTrial(): Promise<HttpReply> {
    return this.fetchJson(this.trialUrl());
  }

  getStatus(): Promise<HttpReply> {
    return this.fetchJson(this.statusUrl());
  }

  postResponse(trialIndex: number, choice: string, rtMs: number): Promise<HttpReply> {
    return this.fetchJson(this.responseUrl(), {
      method: "POST",
      body: { trial_index: trialIndex, choice, rt_ms: rtMs },
    });
  }
}

/** FetchJson over the platform fetch. */
export function makeFetchJson(fetchImpl: typeof fetch = fetch): FetchJson {
  return async (url, init) => {
    const response = await fetchImpl(url, {
      method: init?.method ?? "GET",
      headers: init?.body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: init?.body !== undefined ? JSON.stringify(init.body) : undefined,
    });
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    return { status: response.status, body };
  };
}
