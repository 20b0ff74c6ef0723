/** Recorded-fixture server: a fetch stand-in that replays engine responses
 * and records every request for contract assertions. */

import type { RatingPayload, SearchResponse, VotePayload } from "../src/types.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

const ASPECTS = new Set([
  "engagingness",
  "interestingness",
  "humanness",
  "informativeness",
]);
const CHOICES = new Set(["text_to_video", "traditional"]);
const QUERY_KINDS = new Set(["visual", "quote", "unknown"]);

/** Mirrors the engine's /rate validation; throws on any schema violation. */
export function validateRatingBody(body: RatingPayload): void {
  for (const key of ["session_id", "query_id", "method", "clip_id", "stars"] as const) {
    if (body[key] === undefined || body[key] === null) {
      throw new Error(`rating missing field ${key}`);
    }
  }
  if (!Number.isInteger(body.stars) || body.stars < 1 || body.stars > 5) {
    throw new Error(`stars out of range: ${body.stars}`);
  }
  if (body.query_kind !== undefined && !QUERY_KINDS.has(body.query_kind)) {
    throw new Error(`bad query_kind: ${body.query_kind}`);
  }
}

/** Mirrors the engine's /vote validation. */
export function validateVoteBody(body: VotePayload): void {
  for (const key of ["session_id", "aspect", "choice"] as const) {
    if (!body[key]) throw new Error(`vote missing field ${key}`);
  }
  if (!ASPECTS.has(body.aspect)) throw new Error(`unknown aspect: ${body.aspect}`);
  if (!CHOICES.has(body.choice)) throw new Error(`unknown choice: ${body.choice}`);
}

export class FixtureServer {
  requests: RecordedRequest[] = [];
  ratings: RatingPayload[] = [];
  votes: VotePayload[] = [];
  searchResponses = new Map<string, SearchResponse>();
  failNext = 0;
  searchStatus: number | null = null;

  /** Serve this body for any /search with the given method (and optional q). */
  addSearch(method: string, response: SearchResponse, query?: string): void {
    this.searchResponses.set(query ? `${method}|${query}` : method, response);
  }

  fetch = async (input: string | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const httpMethod = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.requests.push({ url, method: httpMethod, body });

    if (this.failNext > 0) {
      this.failNext -= 1;
      throw new TypeError("fetch failed");
    }

    const respond = (status: number, payload: unknown) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { "content-type": "application/json" },
      });

    if (url.includes("/search")) {
      if (this.searchStatus !== null) {
        const status = this.searchStatus;
        this.searchStatus = null;
        return respond(status, {
          detail: { reason: "unencodable_query", message: "no tokens" },
        });
      }
      const parsed = new URL(url, "http://fixture.test");
      const method = parsed.searchParams.get("method") ?? "";
      const query = parsed.searchParams.get("q") ?? "";
      const exact = this.searchResponses.get(`${method}|${query}`);
      const fallback = this.searchResponses.get(method);
      const found = exact ?? fallback;
      if (!found) return respond(404, { detail: `unknown method '${method}'` });
      return respond(200, found);
    }
    if (url.includes("/rate")) {
      validateRatingBody(body as RatingPayload);
      this.ratings.push(body as RatingPayload);
      return respond(200, { stored: true, n_ratings: this.ratings.length });
    }
    if (url.includes("/vote")) {
      validateVoteBody(body as VotePayload);
      const vote = body as VotePayload;
      const updated = this.votes.some(
        (v) => v.session_id === vote.session_id && v.aspect === vote.aspect,
      );
      this.votes.push(vote);
      return respond(200, { stored: true, updated });
    }
    if (url.includes("/health")) {
      return respond(200, { status: "ok", corpus_size: 0, methods: [] });
    }
    return respond(404, { detail: "not found" });
  };
}

/** Synthetic 3-result search body for comparison-grid tests. */
export function syntheticSearch(
  query: string,
  method: string,
  backend: "embedding" | "fulltext",
): SearchResponse {
  return {
    query,
    method,
    k: 3,
    backend,
    decided_class:
      method === "classifier"
        ? { label: backend === "fulltext" ? "quote_speech" : "visual", confidence: 0.99 }
        : null,
    results: [0, 1, 2].map((i) => ({
      clip_id: `${method.slice(0, 2)}-${query.length}-clip${i}`,
      rank: i + 1,
      score: 1 - 0.1 * i,
      backend,
      video_id: `video${i}`,
      start_s: 0,
      end_s: 14 + i,
      caption_preview: `caption ${i} for ${query.slice(0, 12)}`,
      transcript_preview: `transcript ${i}`,
    })),
  };
}

export class MemoryStorage implements Storage {
  private map = new Map<string, string>();

  get length(): number {
    return this.map.size;
  }

  clear(): void {
    this.map.clear();
  }

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  key(index: number): string | null {
    return [...this.map.keys()][index] ?? null;
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
}
