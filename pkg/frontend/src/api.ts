/** Thin fetch client for the engine API; the UI's only data source. */

import type { RatingPayload, SearchResponse, VotePayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

/** 422 from /search: the query had no encodable tokens. */
export class UnencodableQueryError extends ApiError {}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      if (response.status === 422) {
        throw new UnencodableQueryError(response.status, detail);
      }
      throw new ApiError(response.status, detail);
    }
    return body;
  }

  async health(): Promise<{ status: string; corpus_size: number; methods: string[] }> {
    return (await this.request("/health")) as {
      status: string;
      corpus_size: number;
      methods: string[];
    };
  }

  async search(query: string, method: string, k = 3): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query, method, k: String(k) });
    return (await this.request(`/search?${params}`)) as SearchResponse;
  }

  async rate(payload: RatingPayload): Promise<{ stored: boolean; n_ratings: number }> {
    return (await this.request("/rate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    })) as { stored: boolean; n_ratings: number };
  }

  async vote(payload: VotePayload): Promise<{ stored: boolean; updated: boolean }> {
    return (await this.request("/vote", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    })) as { stored: boolean; updated: boolean };
  }
}
