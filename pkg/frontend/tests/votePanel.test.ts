import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { PersistentState } from "../src/session.js";
import { ASPECTS } from "../src/types.js";
import { VotePanel } from "../src/votePanel.js";
import { FixtureServer, MemoryStorage, validateVoteBody } from "./helpers.js";

function setup(storage = new MemoryStorage()) {
  const server = new FixtureServer();
  const api = new ApiClient("http://fixture.test", server.fetch);
  const panel = new VotePanel(api, "session-vote", new PersistentState("avsearch.votes", storage));
  document.body.replaceChildren(panel.root);
  return { server, panel, storage };
}

function choose(aspect: string, choice: string): void {
  document
    .querySelector<HTMLButtonElement>(
      `.aspect-row[data-aspect='${aspect}'] button[data-choice='${choice}']`,
    )!
    .click();
}

describe("vote flow", () => {
  beforeEach(() => {
    document.body.replaceChildren();
  });

  it("renders all four aspects with both choices", () => {
    setup();
    expect(document.querySelectorAll(".aspect-row").length).toBe(4);
    expect(document.querySelectorAll("button.choice").length).toBe(8);
  });

  it("blocks submission until every aspect is chosen", async () => {
    const { panel } = setup();
    const submit = document.querySelector<HTMLButtonElement>(".vote-submit")!;
    expect(submit.disabled).toBe(true);
    choose("engagingness", "text_to_video");
    choose("interestingness", "text_to_video");
    choose("humanness", "traditional");
    expect(submit.disabled).toBe(true);
    expect(await panel.submitVotes()).toBe(0);
    choose("informativeness", "text_to_video");
    expect(submit.disabled).toBe(false);
  });

  it("emits one schema-valid POST per aspect", async () => {
    const { server, panel } = setup();
    choose("engagingness", "text_to_video");
    choose("interestingness", "text_to_video");
    choose("humanness", "traditional");
    choose("informativeness", "text_to_video");
    const posted = await panel.submitVotes();
    expect(posted).toBe(4);
    expect(server.votes.map((v) => v.aspect).sort()).toEqual([...ASPECTS].sort());
    for (const vote of server.votes) {
      validateVoteBody(vote);
      expect(vote.session_id).toBe("session-vote");
    }
  });

  it("surfaces server overwrite semantics as updated", async () => {
    const { panel } = setup();
    for (const aspect of ASPECTS) choose(aspect, "text_to_video");
    await panel.submitVotes();
    choose("humanness", "traditional");
    await panel.submitVotes();
    expect(document.querySelector(".vote-status")?.textContent).toContain("Updated");
  });

  it("choices persist across reload", () => {
    const storage = new MemoryStorage();
    setup(storage);
    choose("engagingness", "traditional");
    document.body.replaceChildren();
    setup(storage);
    const selected = document.querySelector(
      ".aspect-row[data-aspect='engagingness'] button.selected",
    );
    expect(selected?.getAttribute("data-choice")).toBe("traditional");
  });
});
