/** Free-text search page: one query, one method, ranked result cards. */

import { ApiClient, ApiError, UnencodableQueryError } from "./api.js";
import { clear, el, formatSpan } from "./dom.js";
import type { MethodName, ResultCard, SearchResponse } from "./types.js";

const METHOD_LABELS: Record<MethodName, string> = {
  baseline: "Baseline",
  customised: "Customised",
  classifier: "ClassifierEnhanced",
};

export function resultCard(result: ResultCard, showBackendBadge: boolean): HTMLElement {
  const children: (Node | string)[] = [
    el("span", { class: "rank", text: `#${result.rank}` }),
    el("span", { class: "clip-id", text: result.clip_id }),
    el("span", { class: "time-span", text: formatSpan(result.start_s, result.end_s) }),
    el("span", { class: "score", text: result.score.toFixed(4) }),
    el("p", { class: "caption-preview", text: result.caption_preview }),
    el("p", { class: "transcript-preview", text: result.transcript_preview }),
  ];
  if (result.thumbnail_url) {
    children.unshift(el("img", { class: "thumb", src: result.thumbnail_url, alt: "" }));
  }
  if (showBackendBadge) {
    children.push(el("span", { class: "backend-badge", text: result.backend }));
  }
  return el("article", { class: "result-card", "data-clip-id": result.clip_id }, children);
}

export class SearchView {
  readonly root: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly select: HTMLSelectElement;
  private readonly submit: HTMLButtonElement;
  private readonly status: HTMLElement;
  private readonly results: HTMLElement;
  private lastResponse: SearchResponse | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly k = 3,
  ) {
    this.input = el("input", {
      type: "search",
      class: "query-input",
      placeholder: "Describe what you want to see, or quote what was said",
    });
    this.select = el("select", { class: "method-select" });
    for (const [value, label] of Object.entries(METHOD_LABELS)) {
      this.select.append(el("option", { value, text: label }));
    }
    this.submit = el("button", { class: "search-submit", text: "Search" });
    this.submit.disabled = true;
    this.status = el("div", { class: "search-status", role: "status" });
    this.results = el("section", { class: "search-results" });
    this.root = el("section", { class: "search-view" }, [
      el("form", { class: "search-form" }, [this.input, this.select, this.submit]),
      this.status,
      this.results,
    ]);

    this.input.addEventListener("input", () => {
      this.submit.disabled = this.input.value.trim() === "";
    });
    this.root.querySelector("form")!.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.run();
    });
  }

  get method(): MethodName {
    return this.select.value as MethodName;
  }

  set method(value: MethodName) {
    this.select.value = value;
  }

  set query(value: string) {
    this.input.value = value;
    this.submit.disabled = value.trim() === "";
  }

  get response(): SearchResponse | null {
    return this.lastResponse;
  }

  async run(): Promise<void> {
    const query = this.input.value.trim();
    if (!query) return;
    clear(this.status);
    try {
      const response = await this.api.search(query, this.method, this.k);
      this.lastResponse = response;
      this.render(response);
    } catch (error) {
      this.lastResponse = null;
      clear(this.results);
      if (error instanceof UnencodableQueryError) {
        // inline explanation, not an error page
        this.status.append(
          el("p", {
            class: "unencodable-note",
            text: "That query has no searchable words. Try adding a few descriptive terms.",
          }),
        );
        return;
      }
      const note = el("p", {
        class: "api-error",
        text:
          error instanceof ApiError
            ? `The engine rejected the request (${error.status}).`
            : "The engine is unreachable.",
      });
      const retry = el("button", { class: "retry", text: "Retry" });
      retry.addEventListener("click", () => void this.run());
      this.status.append(note, retry);
    }
  }

  /** Renders cards strictly in API rank order; never reorders or filters. */
  private render(response: SearchResponse): void {
    clear(this.results);
    const showBadge = this.method === "classifier";
    if (response.decided_class && showBadge) {
      this.status.append(
        el("p", {
          class: "routing-note",
          text:
            `Routed to ${response.backend} ` +
            `(${response.decided_class.label}, ` +
            `confidence ${response.decided_class.confidence.toFixed(2)})`,
        }),
      );
    }
    if (response.results.length === 0) {
      this.results.append(
        el("p", { class: "no-results", text: "No clips matched this query." }),
      );
      return;
    }
    for (const result of response.results) {
      this.results.append(resultCard(result, showBadge));
    }
  }
}
