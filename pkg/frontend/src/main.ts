/** Application entry: tabs for search, comparison, and the final vote. */

import { ApiClient } from "./api.js";
import { ComparisonView, type ComparisonConfig } from "./comparisonView.js";
import { el } from "./dom.js";
import { SearchView } from "./searchView.js";
import { PersistentState, sessionId } from "./session.js";
import { VotePanel } from "./votePanel.js";

declare global {
  interface Window {
    COMPARISON_CONFIG?: ComparisonConfig;
  }
}

export function mount(root: HTMLElement, apiBase = ""): void {
  const api = new ApiClient(apiBase);
  const session = sessionId();
  const searchView = new SearchView(api);
  const comparisonConfig: ComparisonConfig = window.COMPARISON_CONFIG ?? {
    pages: [],
    methods: ["customised", "classifier"],
    k: 3,
  };
  const comparisonView = new ComparisonView(
    api,
    comparisonConfig,
    session,
    new PersistentState("avsearch.comparison"),
  );
  const votePanel = new VotePanel(
    api,
    session,
    new PersistentState("avsearch.votes"),
  );

  const panes: Record<string, HTMLElement> = {
    search: searchView.root,
    compare: comparisonView.root,
    vote: votePanel.root,
  };
  const nav = el("nav", { class: "tabs" });
  const container = el("main", { class: "pane" });
  for (const name of Object.keys(panes)) {
    const tab = el("button", { class: "tab", "data-pane": name, text: name });
    tab.addEventListener("click", () => {
      container.replaceChildren(panes[name]!);
      if (name === "compare") void comparisonView.load();
    });
    nav.append(tab);
  }
  root.append(nav, container);
  container.replaceChildren(searchView.root);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app")!);
}
