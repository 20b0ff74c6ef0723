/** Side-by-side comparison page: fixed query pairs, per-method top-3 cards,
 * a 5-star control under every clip, and submission gated on completeness. */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { resultCard } from "./searchView.js";
import { PersistentState } from "./session.js";
import type {
  ComparisonPage,
  ComparisonQuery,
  MethodName,
  RatingPayload,
  SearchResponse,
} from "./types.js";

export interface ComparisonConfig {
  pages: ComparisonPage[];
  methods: MethodName[];
  k: number;
}

interface StoredProgress {
  pageIndex: number;
  stars: Record<string, number>; // slotKey -> 1..5
}

export function slotKey(
  pageIndex: number,
  queryId: string,
  method: string,
  clipId: string,
): string {
  return `${pageIndex}:${queryId}:${method}:${clipId}`;
}

function starControl(
  initial: number | null,
  onPick: (stars: number) => void,
): HTMLElement {
  const wrap = el("div", { class: "star-control", role: "radiogroup" });
  const buttons: HTMLButtonElement[] = [];
  for (let stars = 1; stars <= 5; stars++) {
    const button = el("button", {
      type: "button",
      class: "star",
      "data-stars": String(stars),
      "aria-label": `${stars} star${stars > 1 ? "s" : ""}`,
      text: "★",
    });
    button.addEventListener("click", () => {
      for (const other of buttons) {
        other.classList.toggle(
          "selected",
          Number(other.dataset.stars) <= stars,
        );
      }
      wrap.dataset.value = String(stars);
      onPick(stars);
    });
    buttons.push(button);
    wrap.append(button);
  }
  if (initial !== null) {
    wrap.dataset.value = String(initial);
    for (const button of buttons) {
      button.classList.toggle("selected", Number(button.dataset.stars) <= initial);
    }
  }
  return wrap;
}

export class ComparisonView {
  readonly root: HTMLElement;
  private readonly header: HTMLElement;
  private readonly grid: HTMLElement;
  private readonly submit: HTMLButtonElement;
  private readonly status: HTMLElement;
  private progress: StoredProgress;
  private expectedSlots: string[] = [];
  private responses = new Map<string, SearchResponse>();

  constructor(
    private readonly api: ApiClient,
    private readonly config: ComparisonConfig,
    private readonly sessionId: string,
    private readonly store: PersistentState<StoredProgress>,
  ) {
    this.progress = this.store.load() ?? { pageIndex: 0, stars: {} };
    this.header = el("div", { class: "comparison-header" });
    this.grid = el("div", { class: "comparison-grid" });
    this.submit = el("button", { class: "comparison-submit", text: "Submit ratings" });
    this.submit.disabled = true;
    this.status = el("div", { class: "comparison-status", role: "status" });
    this.root = el("section", { class: "comparison-view" }, [
      this.header,
      this.grid,
      this.submit,
      this.status,
    ]);
    this.submit.addEventListener("click", () => void this.submitRatings());
  }

  get pageIndex(): number {
    return this.progress.pageIndex;
  }

  get done(): boolean {
    return this.progress.pageIndex >= this.config.pages.length;
  }

  /** Fetch both queries for every method and render the rating grid. */
  async load(): Promise<void> {
    clear(this.header);
    clear(this.grid);
    clear(this.status);
    if (this.done) {
      this.header.append(
        el("p", { class: "comparison-done", text: "All pages rated. Thank you!" }),
      );
      this.submit.disabled = true;
      return;
    }
    const page = this.config.pages[this.progress.pageIndex]!;
    this.header.append(
      el("h2", {
        text: `Page ${this.progress.pageIndex + 1} of ${this.config.pages.length}`,
      }),
      el("p", { class: "query-line visual-query", text: `Visual query: ${page.visual.text}` }),
      el("p", { class: "query-line quote-query", text: `Quote query: ${page.quote.text}` }),
    );
    this.expectedSlots = [];
    this.responses.clear();
    for (const query of [page.visual, page.quote]) {
      const row = el("div", { class: "query-row", "data-query-id": query.query_id });
      for (const method of this.config.methods) {
        const cell = el("div", { class: "method-cell", "data-method": method });
        cell.append(el("h3", { text: method }));
        const response = await this.api.search(query.text, method, this.config.k);
        this.responses.set(`${query.query_id}:${method}`, response);
        for (const result of response.results) {
          const key = slotKey(
            this.progress.pageIndex, query.query_id, method, result.clip_id,
          );
          this.expectedSlots.push(key);
          const card = resultCard(result, method === "classifier");
          card.append(
            starControl(this.progress.stars[key] ?? null, (stars) => {
              this.progress.stars[key] = stars;
              this.store.save(this.progress);
              this.refreshSubmitGate();
            }),
          );
          cell.append(card);
        }
        row.append(cell);
      }
      this.grid.append(row);
    }
    this.refreshSubmitGate();
  }

  /** Submission is blocked until every visible clip carries a rating. */
  private refreshSubmitGate(): void {
    const complete =
      this.expectedSlots.length > 0 &&
      this.expectedSlots.every((key) => {
        const stars = this.progress.stars[key];
        return typeof stars === "number" && stars >= 1 && stars <= 5;
      });
    this.submit.disabled = !complete;
  }

  /** One POST per (query, method, clip); optimistic note reconciled on ack. */
  async submitRatings(): Promise<number> {
    if (this.submit.disabled || this.done) return 0;
    const page = this.config.pages[this.progress.pageIndex]!;
    const byQuery: Record<string, ComparisonQuery> = {
      [page.visual.query_id]: page.visual,
      [page.quote.query_id]: page.quote,
    };
    this.status.textContent = "Saving ratings…";
    let posted = 0;
    for (const key of this.expectedSlots) {
      const [pageIdx, queryId, method, clipId] = key.split(":") as [
        string, string, string, string,
      ];
      void pageIdx;
      const payload: RatingPayload = {
        session_id: this.sessionId,
        query_id: queryId,
        method,
        clip_id: clipId,
        stars: this.progress.stars[key]!,
        query_kind: byQuery[queryId]?.kind ?? "unknown",
      };
      await this.api.rate(payload);
      posted += 1;
    }
    this.status.textContent = `Saved ${posted} ratings.`;
    this.progress = { pageIndex: this.progress.pageIndex + 1, stars: this.progress.stars };
    this.store.save(this.progress);
    await this.load();
    return posted;
  }
}
