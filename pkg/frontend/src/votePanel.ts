/** Final comparison vote: four aspects, each choosing between the
 * text-to-video experience and a traditional keyword interface. */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { PersistentState } from "./session.js";
import { ASPECTS, type VotePayload } from "./types.js";

type Choices = Partial<Record<VotePayload["aspect"], VotePayload["choice"]>>;

const CHOICE_LABELS: Record<VotePayload["choice"], string> = {
  text_to_video: "Text-to-video search",
  traditional: "Traditional keyword search",
};

export class VotePanel {
  readonly root: HTMLElement;
  private readonly submit: HTMLButtonElement;
  private readonly status: HTMLElement;
  private choices: Choices;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly store: PersistentState<Choices>,
  ) {
    this.choices = this.store.load() ?? {};
    this.submit = el("button", { class: "vote-submit", text: "Submit votes" });
    this.status = el("div", { class: "vote-status", role: "status" });
    const rows = ASPECTS.map((aspect) => this.aspectRow(aspect));
    this.root = el("section", { class: "vote-panel" }, [
      el("h2", { text: "Which experience was better?" }),
      ...rows,
      this.submit,
      this.status,
    ]);
    this.refreshGate();
    this.submit.addEventListener("click", () => void this.submitVotes());
  }

  private aspectRow(aspect: VotePayload["aspect"]): HTMLElement {
    const row = el("div", { class: "aspect-row", "data-aspect": aspect });
    row.append(el("span", { class: "aspect-name", text: aspect }));
    for (const choice of Object.keys(CHOICE_LABELS) as VotePayload["choice"][]) {
      const button = el("button", {
        type: "button",
        class: "choice",
        "data-choice": choice,
        text: CHOICE_LABELS[choice],
      });
      if (this.choices[aspect] === choice) button.classList.add("selected");
      button.addEventListener("click", () => {
        this.choices[aspect] = choice;
        this.store.save(this.choices);
        for (const sibling of row.querySelectorAll("button.choice")) {
          sibling.classList.toggle("selected", sibling === button);
        }
        this.refreshGate();
      });
      row.append(button);
    }
    return row;
  }

  /** All four aspects must be chosen before submission. */
  private refreshGate(): void {
    this.submit.disabled = !ASPECTS.every((aspect) => this.choices[aspect]);
  }

  async submitVotes(): Promise<number> {
    if (this.submit.disabled) return 0;
    this.status.textContent = "Saving votes…";
    let posted = 0;
    let updated = 0;
    for (const aspect of ASPECTS) {
      const ack = await this.api.vote({
        session_id: this.sessionId,
        aspect,
        choice: this.choices[aspect]!,
      });
      posted += 1;
      if (ack.updated) updated += 1;
    }
    clear(this.status);
    this.status.textContent =
      updated > 0 ? `Updated ${updated} of ${posted} votes.` : `Saved ${posted} votes.`;
    return posted;
  }
}
