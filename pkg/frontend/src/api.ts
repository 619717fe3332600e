/** Typed client for the session service.
 *
 * Network failures retry with exponential backoff; a response is never
 * double-submitted because the retry reuses the same idempotency key and
 * the service treats repeats of a key as no-ops.
 */

import {
  Ack,
  Catalog,
  Prompt,
  ResponseBody,
  ResponseKind,
  Results,
  SessionCreated,
  Trajectory,
  isAck,
  isCatalog,
  isPrompt,
  isResults,
  isSessionCreated,
  isTrajectory,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service error ${status}: ${JSON.stringify(detail)}`);
  }
}

export class SessionFinished extends Error {
  constructor() {
    super("session is complete");
  }
}

export interface ClientOptions {
  fetchImpl?: FetchLike;
  maxRetries?: number;
  /** base backoff in ms; test doubles can set 0 */
  backoffMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((res) => setTimeout(res, ms));

export class SessionApi {
  private fetchImpl: FetchLike;
  private maxRetries: number;
  private backoffMs: number;
  private sleep: (ms: number) => Promise<void>;
  private keyCounter = 0;

  constructor(
    public baseUrl: string,
    options: ClientOptions = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
    this.maxRetries = options.maxRetries ?? 4;
    this.backoffMs = options.backoffMs ?? 250;
    this.sleep = options.sleep ?? defaultSleep;
  }

  nextIdempotencyKey(): string {
    this.keyCounter += 1;
    return `ui-${Date.now()}-${this.keyCounter}`;
  }

  /** One logical request; retries only transport failures, never rebuilds
   * the body, so the idempotency key survives retries untouched. */
  private async request(path: string, init?: RequestInit): Promise<Response> {
    let attempt = 0;
    for (;;) {
      try {
        return await this.fetchImpl(`${this.baseUrl}${path}`, init);
      } catch (err) {
        attempt += 1;
        if (attempt > this.maxRetries) throw err;
        await this.sleep(this.backoffMs * 2 ** (attempt - 1));
      }
    }
  }

  private async json<T>(response: Response, guard: (v: unknown) => v is T): Promise<T> {
    const body: unknown = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, (body as { detail?: unknown }).detail ?? body);
    }
    if (!guard(body)) {
      throw new ApiError(response.status, `unexpected payload shape: ${JSON.stringify(body)}`);
    }
    return body;
  }

  async health(): Promise<boolean> {
    const response = await this.request("/api/healthz");
    return response.ok;
  }

  async createSession(seed?: number): Promise<SessionCreated> {
    const response = await this.request("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(seed === undefined ? {} : { seed }),
    });
    return this.json(response, isSessionCreated);
  }

  /** Next prompt, or throws SessionFinished once the session is complete. */
  async getNext(sessionId: string): Promise<Prompt> {
    const response = await this.request(`/api/sessions/${sessionId}/next`);
    if (response.status === 410) {
      await response.json().catch(() => undefined);
      throw new SessionFinished();
    }
    return this.json(response, isPrompt);
  }

  async postResponse(
    sessionId: string,
    kind: ResponseKind,
    payload: Record<string, number>,
    idempotencyKey?: string,
  ): Promise<Ack> {
    const body: ResponseBody = {
      kind,
      payload,
      idempotency_key: idempotencyKey ?? this.nextIdempotencyKey(),
    };
    const response = await this.request(`/api/sessions/${sessionId}/response`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.json(response, isAck);
  }

  async getResults(sessionId: string): Promise<Results> {
    const response = await this.request(`/api/sessions/${sessionId}/results`);
    return this.json(response, isResults);
  }

  async getCatalog(): Promise<Catalog> {
    const response = await this.request("/api/catalog");
    return this.json(response, isCatalog);
  }

  async getTrajectory(stimulusId: number, stride = 30): Promise<Trajectory> {
    const response = await this.request(`/api/catalog/${stimulusId}/trajectory?stride=${stride}`);
    return this.json(response, isTrajectory);
  }

  /** Experimenter-only listing is not part of the participant API; the
   * dashboard polls known session ids instead. */
  async tryGetResults(sessionId: string): Promise<Results | null> {
    try {
      return await this.getResults(sessionId);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 404)) return null;
      throw err;
    }
  }
}
