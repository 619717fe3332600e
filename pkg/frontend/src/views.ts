/** Participant-facing prompt views.
 *
 * Renderers are pure string builders over PromptView so tests can assert
 * exactly what reaches the participant: only data carried by the service
 * prompt (never schedule internals), no tie option on forced choices.
 */

import { Catalog, Prompt } from "./types.js";

export interface StimulusCard {
  id: number;
  description: string;
}

export type WidgetKind =
  | "continue"
  | "pick-one-of-group"
  | "pick-anchors"
  | "likert-7"
  | "two-alternative-forced-choice";

export interface PromptView {
  phaseLabel: string;
  kind: WidgetKind;
  stimuli: StimulusCard[];
  progressDone: number;
  progressTotal: number;
  groupIndex?: number;
  pleasantCandidates?: StimulusCard[];
  unpleasantCandidates?: StimulusCard[];
  anchorBest?: StimulusCard;
  anchorWorst?: StimulusCard;
  presenterDegraded: boolean;
}

const PHASE_LABELS: Record<string, string> = {
  familiarization: "Get to know the stimuli",
  group_extremes: "Pick the extremes of this group",
  anchor_selection: "Choose your +3 and -3 anchors",
  likert_rating: "Rate each stimulus",
  pairwise_comparison: "Which feels more pleasant?",
};

const WIDGETS: Record<string, WidgetKind> = {
  familiarize: "continue",
  pick_group_extremes: "pick-one-of-group",
  pick_anchors: "pick-anchors",
  rate: "likert-7",
  choose: "two-alternative-forced-choice",
};

export function buildPromptView(prompt: Prompt, catalog: Catalog): PromptView {
  const describe = (id: number): StimulusCard => ({
    id,
    description: catalog.descriptions[String(id)] ?? `stimulus ${id}`,
  });
  const view: PromptView = {
    phaseLabel: PHASE_LABELS[prompt.phase] ?? prompt.phase,
    kind: WIDGETS[prompt.kind],
    stimuli: prompt.stimulus_ids.map(describe),
    progressDone: prompt.progress_done,
    progressTotal: prompt.progress_total,
    presenterDegraded: prompt.presenter_degraded === true,
  };
  if (prompt.group_index !== undefined) view.groupIndex = prompt.group_index;
  if (prompt.pleasant_candidates) view.pleasantCandidates = prompt.pleasant_candidates.map(describe);
  if (prompt.unpleasant_candidates)
    view.unpleasantCandidates = prompt.unpleasant_candidates.map(describe);
  if (prompt.anchor_best !== undefined) view.anchorBest = describe(prompt.anchor_best);
  if (prompt.anchor_worst !== undefined) view.anchorWorst = describe(prompt.anchor_worst);
  return view;
}

const escapeHtml = (text: string) =>
  text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

function card(stimulus: StimulusCard, extra = ""): string {
  return (
    `<div class="stimulus-card" data-stimulus="${stimulus.id}">` +
    `<div class="preview" data-preview="${stimulus.id}"></div>` +
    `<p>${escapeHtml(stimulus.description)}</p>${extra}</div>`
  );
}

function progressBar(view: PromptView): string {
  return (
    `<div class="progress">${view.progressDone} / ${view.progressTotal}</div>` +
    (view.presenterDegraded
      ? `<div class="degraded-notice">Stimulus playback is degraded; ask the experimenter.</div>`
      : "")
  );
}

export function renderPrompt(view: PromptView): string {
  const header = `<h2>${escapeHtml(view.phaseLabel)}</h2>${progressBar(view)}`;
  switch (view.kind) {
    case "continue":
      return (
        header +
        `<div class="cards">${view.stimuli.map((s) => card(s, `<button data-action="replay" data-stimulus="${s.id}">replay</button>`)).join("")}</div>` +
        `<button data-action="continue">I have felt all of them</button>`
      );
    case "pick-one-of-group":
      return (
        header +
        `<div class="cards">${view.stimuli
          .map(
            (s) =>
              card(
                s,
                `<button data-action="most-pleasant" data-stimulus="${s.id}">most pleasant</button>` +
                  `<button data-action="most-unpleasant" data-stimulus="${s.id}">most unpleasant</button>`,
              ),
          )
          .join("")}</div>`
      );
    case "pick-anchors":
      return (
        header +
        `<h3>Most pleasant of these (+3 anchor)</h3>` +
        `<div class="cards">${(view.pleasantCandidates ?? [])
          .map((s) => card(s, `<button data-action="anchor-best" data-stimulus="${s.id}">this one</button>`))
          .join("")}</div>` +
        `<h3>Most unpleasant of these (-3 anchor)</h3>` +
        `<div class="cards">${(view.unpleasantCandidates ?? [])
          .map((s) => card(s, `<button data-action="anchor-worst" data-stimulus="${s.id}">this one</button>`))
          .join("")}</div>`
      );
    case "likert-7": {
      const scale = [-3, -2, -1, 0, 1, 2, 3]
        .map((v) => `<button data-action="rate" data-value="${v}">${v > 0 ? `+${v}` : v}</button>`)
        .join("");
      return (
        header +
        `<div class="cards">${view.stimuli.map((s) => card(s)).join("")}</div>` +
        `<div class="anchor-reference">` +
        `<span>+3 = ${escapeHtml(view.anchorBest?.description ?? "")}</span>` +
        `<span>-3 = ${escapeHtml(view.anchorWorst?.description ?? "")}</span></div>` +
        `<div class="likert-scale">${scale}</div>`
      );
    }
    case "two-alternative-forced-choice":
      // forced choice: exactly two options, deliberately no "equal" button
      return (
        header +
        `<div class="cards">${view.stimuli
          .map((s) => card(s, `<button data-action="choose" data-stimulus="${s.id}">more pleasant</button>`))
          .join("")}</div>`
      );
  }
}

export function renderFinished(): string {
  return `<h2>All done</h2><p>Thank you! The experimenter will take it from here.</p>`;
}
