/** Scripted participant against the fixture service: the flow must finish
 * the whole session and the service must record every response exactly
 * once, even under transport failures that arrive after processing. */

import { describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { Answer, answerFromSelection, sessionFlow } from "../src/flow.js";
import { Prompt } from "../src/types.js";
import { FixtureService } from "./fixture_service.js";

function scriptedResponder() {
  let finishedCalls = 0;
  const responder = {
    async answer(prompt: Prompt): Promise<Answer> {
      switch (prompt.kind) {
        case "familiarize":
          return answerFromSelection(prompt, { done: 1 });
        case "pick_group_extremes":
          return answerFromSelection(prompt, {
            most_pleasant: prompt.stimulus_ids[0],
            most_unpleasant: prompt.stimulus_ids[1],
          });
        case "pick_anchors":
          return answerFromSelection(prompt, {
            best: prompt.pleasant_candidates![0],
            worst: prompt.unpleasant_candidates![0],
          });
        case "rate":
          return answerFromSelection(prompt, { value: (prompt.stimulus_ids[0] % 7) - 3 });
        case "choose":
          return answerFromSelection(prompt, { winner: prompt.stimulus_ids[0] });
      }
    },
    finished: () => {
      finishedCalls += 1;
    },
  };
  return { responder, finishedCalls: () => finishedCalls };
}

const EXPECTED_EVENTS = 1 + 5 + 1 + 13 + 6; // confirm, groups, anchors, ratings, choices

describe("session flow against the fixture service", () => {
  it("completes the whole session with exactly one event per response", async () => {
    const service = new FixtureService();
    const api = new SessionApi("", { fetchImpl: service.fetchImpl, backoffMs: 0 });
    const { responder, finishedCalls } = scriptedResponder();

    const result = await sessionFlow(api, "fixture-session", responder);

    expect(result.responses).toBe(EXPECTED_EVENTS);
    expect(service.events).toHaveLength(EXPECTED_EVENTS);
    expect(finishedCalls()).toBe(1);
    const kinds = service.events.map((e) => e.kind);
    expect(kinds.filter((k) => k === "group_extremes")).toHaveLength(5);
    expect(kinds.filter((k) => k === "rating")).toHaveLength(13);
    expect(kinds.filter((k) => k === "choice")).toHaveLength(6);
  });

  it("records zero duplicate events when deliveries fail after processing", async () => {
    const service = new FixtureService();
    service.injectTransportFailures(3); // first three acks are lost in transit
    const api = new SessionApi("", { fetchImpl: service.fetchImpl, backoffMs: 0 });
    const { responder } = scriptedResponder();

    await sessionFlow(api, "fixture-session", responder);

    expect(service.events).toHaveLength(EXPECTED_EVENTS);
    // the retried deliveries were answered from the idempotency cache, so
    // each logical response appears exactly once
    const groupIndexes = service.events
      .filter((e) => e.kind === "group_extremes")
      .map((e) => e.payload.group_index);
    expect(groupIndexes).toEqual([0, 1, 2, 3, 4]);
  });

  it("maps selections onto the service schema for every prompt kind", () => {
    const choose: Prompt = {
      phase: "pairwise_comparison",
      kind: "choose",
      stimulus_ids: [4, 9],
      progress_done: 0,
      progress_total: 6,
    };
    expect(answerFromSelection(choose, { winner: 9 })).toEqual({
      kind: "choice",
      payload: { id_a: 4, id_b: 9, winner: 9 },
    });
    const rate: Prompt = {
      phase: "likert_rating",
      kind: "rate",
      stimulus_ids: [7],
      progress_done: 2,
      progress_total: 13,
      anchor_best: 1,
      anchor_worst: 2,
    };
    expect(answerFromSelection(rate, { value: -2 })).toEqual({
      kind: "rating",
      payload: { stimulus_id: 7, value: -2 },
    });
  });
});
