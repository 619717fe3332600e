/** The participant loop: fetch prompt, collect one answer, post it with a
 * fresh idempotency key, repeat until the service says the session is
 * finished. Answer collection is abstracted behind Responder so the loop
 * is testable without a DOM. */

import { SessionApi, SessionFinished } from "./api.js";
import { Prompt, ResponseKind } from "./types.js";

export interface Answer {
  kind: ResponseKind;
  payload: Record<string, number>;
}

export interface Responder {
  /** Render the prompt and resolve with the participant's answer. */
  answer(prompt: Prompt): Promise<Answer>;
  /** Called once when the session completes. */
  finished?(): void;
}

export interface FlowResult {
  sessionId: string;
  prompts: number;
  responses: number;
}

export async function sessionFlow(
  api: SessionApi,
  sessionId: string,
  responder: Responder,
  maxSteps = 10_000,
): Promise<FlowResult> {
  let prompts = 0;
  let responses = 0;
  for (let step = 0; step < maxSteps; step += 1) {
    let prompt: Prompt;
    try {
      prompt = await api.getNext(sessionId);
    } catch (err) {
      if (err instanceof SessionFinished) {
        responder.finished?.();
        return { sessionId, prompts, responses };
      }
      throw err;
    }
    prompts += 1;
    const answer = await responder.answer(prompt);
    // one key per logical answer: transport retries reuse it, so the
    // service can never record the response twice
    await api.postResponse(sessionId, answer.kind, answer.payload, api.nextIdempotencyKey());
    responses += 1;
  }
  throw new Error(`session did not finish within ${maxSteps} steps`);
}

/** Map a prompt plus raw widget selections to the response the service
 * expects; shared by the browser widgets and the scripted tests. */
export function answerFromSelection(
  prompt: Prompt,
  selection: Record<string, number>,
): Answer {
  switch (prompt.kind) {
    case "familiarize":
      return { kind: "confirm_familiarization", payload: {} };
    case "pick_group_extremes":
      return {
        kind: "group_extremes",
        payload: {
          group_index: prompt.group_index ?? 0,
          most_pleasant: selection.most_pleasant,
          most_unpleasant: selection.most_unpleasant,
        },
      };
    case "pick_anchors":
      return { kind: "anchors", payload: { best: selection.best, worst: selection.worst } };
    case "rate":
      return {
        kind: "rating",
        payload: { stimulus_id: prompt.stimulus_ids[0], value: selection.value },
      };
    case "choose":
      return {
        kind: "choice",
        payload: {
          id_a: prompt.stimulus_ids[0],
          id_b: prompt.stimulus_ids[1],
          winner: selection.winner,
        },
      };
  }
}
