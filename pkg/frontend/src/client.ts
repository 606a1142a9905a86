import type {
  LabelResponse,
  LabelSubmission,
  Progress,
  QueueResponse,
} from "./types";

/** Server rejected the request; detail is the server's own message. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

/** Request never reached the server (offline, DNS, aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(cause instanceof Error ? cause.message : String(cause));
  }
}

type FetchLike = typeof fetch;

export interface ClientOptions {
  baseUrl?: string;
  token?: string;
  fetchImpl?: FetchLike;
}

async function detailOf(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return response.statusText || `status ${response.status}`;
}

export class ApiClient {
  private readonly base: string;
  private readonly token: string | undefined;
  private readonly fetchImpl: FetchLike;

  constructor(options: ClientOptions = {}) {
    this.base = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
  }

  url(path: string): string {
    return this.base + path;
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["content-type"] = "application/json";
    if (this.token !== undefined) h["x-annotation-token"] = this.token;
    return h;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new NetworkError(err);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return response;
  }

  async fetchNext(annotator: string): Promise<QueueResponse> {
    const query = new URLSearchParams({ annotator });
    const response = await this.request(`/queue/next?${query}`, {
      headers: this.headers(false),
    });
    return (await response.json()) as QueueResponse;
  }

  async submitLabel(body: LabelSubmission): Promise<LabelResponse> {
    const response = await this.request("/label", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(body),
    });
    return (await response.json()) as LabelResponse;
  }

  async fetchProgress(): Promise<Progress> {
    const response = await this.request("/progress", {
      headers: this.headers(false),
    });
    return (await response.json()) as Progress;
  }
}
