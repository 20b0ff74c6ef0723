/** Wire types mirrored from the engine's HTTP API. */

export type MethodName = "baseline" | "customised" | "classifier";

export type BackendName = "embedding" | "fulltext";

export type QueryKind = "visual" | "quote";

export interface ResultCard {
  clip_id: string;
  rank: number;
  score: number;
  backend: BackendName;
  video_id: string;
  start_s: number;
  end_s: number;
  caption_preview: string;
  transcript_preview: string;
  thumbnail_url?: string;
}

export interface DecidedClass {
  label: "visual" | "quote_speech";
  confidence: number;
}

export interface SearchResponse {
  query: string;
  method: string;
  k: number;
  backend: BackendName;
  decided_class: DecidedClass | null;
  results: ResultCard[];
}

export interface RatingPayload {
  session_id: string;
  query_id: string;
  method: string;
  clip_id: string;
  stars: number;
  query_kind: QueryKind | "unknown";
  timestamp?: number;
}

export interface VotePayload {
  session_id: string;
  aspect: "engagingness" | "interestingness" | "humanness" | "informativeness";
  choice: "text_to_video" | "traditional";
  timestamp?: number;
}

export const ASPECTS: VotePayload["aspect"][] = [
  "engagingness",
  "interestingness",
  "humanness",
  "informativeness",
];

/** One comparison page: a visual query and a quote query, rated per method. */
export interface ComparisonQuery {
  query_id: string;
  text: string;
  kind: QueryKind;
}

export interface ComparisonPage {
  visual: ComparisonQuery;
  quote: ComparisonQuery;
}
