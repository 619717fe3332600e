/** Browser entry point: hash-routed participant page and experimenter
 * dashboard, both speaking only the service HTTP API. */

import { ApiError, SessionApi } from "./api.js";
import { SessionSummary, renderDashboard } from "./dashboard.js";
import { Answer, answerFromSelection, sessionFlow } from "./flow.js";
import { animatePreview, previewSvg } from "./preview.js";
import { Catalog, Prompt, Trajectory } from "./types.js";
import { buildPromptView, renderFinished, renderPrompt } from "./views.js";

const api = new SessionApi("");
const root = () => document.getElementById("root")!;

const trajectoryCache = new Map<number, Promise<Trajectory>>();
const getTrajectory = (id: number) => {
  if (!trajectoryCache.has(id)) trajectoryCache.set(id, api.getTrajectory(id, 30));
  return trajectoryCache.get(id)!;
};

let previewTimer: number | undefined;

async function startPreviews(container: HTMLElement): Promise<void> {
  if (previewTimer !== undefined) window.clearInterval(previewTimer);
  const holders = Array.from(container.querySelectorAll<HTMLElement>("[data-preview]"));
  const tickers: Array<(k: number) => void> = [];
  for (const holder of holders) {
    const id = Number(holder.dataset.preview);
    const trajectory = await getTrajectory(id);
    holder.innerHTML = previewSvg(trajectory);
    tickers.push(animatePreview(holder, trajectory));
  }
  let frame = 0;
  previewTimer = window.setInterval(() => {
    frame += 1;
    tickers.forEach((tick) => tick(frame));
  }, 50);
}

/** Render a prompt and resolve once the widget collected a full answer. */
function domResponder(catalog: Catalog) {
  return {
    async answer(prompt: Prompt): Promise<Answer> {
      const view = buildPromptView(prompt, catalog);
      root().innerHTML = renderPrompt(view);
      void startPreviews(root());
      return new Promise<Answer>((resolve) => {
        const selection: Record<string, number> = {};
        const maybeResolve = () => {
          const need: Record<string, string[]> = {
            familiarize: ["done"],
            pick_group_extremes: ["most_pleasant", "most_unpleasant"],
            pick_anchors: ["best", "worst"],
            rate: ["value"],
            choose: ["winner"],
          };
          if (need[prompt.kind].every((k) => k in selection)) {
            resolve(answerFromSelection(prompt, selection));
          }
        };
        root().addEventListener("click", (event) => {
          const target = event.target as HTMLElement;
          const action = target.dataset.action;
          if (!action) return;
          const stimulus = Number(target.dataset.stimulus);
          if (action === "continue") selection.done = 1;
          if (action === "most-pleasant") selection.most_pleasant = stimulus;
          if (action === "most-unpleasant") selection.most_unpleasant = stimulus;
          if (action === "anchor-best") selection.best = stimulus;
          if (action === "anchor-worst") selection.worst = stimulus;
          if (action === "rate") selection.value = Number(target.dataset.value);
          if (action === "choose") selection.winner = stimulus;
          if (action !== "replay") maybeResolve();
        });
      });
    },
    finished() {
      if (previewTimer !== undefined) window.clearInterval(previewTimer);
      root().innerHTML = renderFinished();
    },
  };
}

async function participantPage(): Promise<void> {
  const catalog = await api.getCatalog();
  root().innerHTML =
    `<h2>Start a session</h2>` +
    `<label>seed <input id="seed" type="number" value="0" /></label>` +
    `<button id="start">start</button>` +
    `<label>or resume <input id="resume" placeholder="session id" /></label>` +
    `<button id="resume-btn">resume</button>`;
  const begin = async (sessionId: string) => {
    try {
      await sessionFlow(api, sessionId, domResponder(catalog));
    } catch (err) {
      root().innerHTML = `<h2>Something went wrong</h2><pre>${String(err)}</pre>`;
    }
  };
  document.getElementById("start")!.addEventListener("click", async () => {
    const seed = Number((document.getElementById("seed") as HTMLInputElement).value);
    const created = await api.createSession(seed);
    await begin(created.session_id);
  });
  document.getElementById("resume-btn")!.addEventListener("click", async () => {
    const sessionId = (document.getElementById("resume") as HTMLInputElement).value.trim();
    if (sessionId) await begin(sessionId);
  });
}

async function dashboardPage(): Promise<void> {
  const token = window.sessionStorage.getItem("hapref-token") ?? "";
  root().innerHTML =
    `<h2>Experimenter dashboard</h2>` +
    `<label>token <input id="token" type="password" value="${token}" /></label>` +
    `<button id="connect">connect</button><div id="board"></div>`;
  const board = () => document.getElementById("board")!;

  const refresh = async () => {
    const header = { Authorization: `Bearer ${(document.getElementById("token") as HTMLInputElement).value}` };
    const listing = await fetch("/api/sessions", { headers: header });
    if (listing.status === 401) {
      board().innerHTML = `<div class="access-denied">Access denied: wrong experimenter token.</div>`;
      return;
    }
    const { sessions } = (await listing.json()) as {
      sessions: Array<{
        session_id: string;
        phase: string;
        progress_done: number;
        progress_total: number;
        complete: boolean;
      }>;
    };
    const summaries: SessionSummary[] = [];
    for (const row of sessions) {
      summaries.push({
        sessionId: row.session_id,
        phase: row.phase,
        progressDone: row.progress_done,
        progressTotal: row.progress_total,
        results: row.complete ? await api.tryGetResults(row.session_id) : null,
      });
    }
    board().innerHTML = renderDashboard(summaries);
  };
  document.getElementById("connect")!.addEventListener("click", () => {
    window.sessionStorage.setItem(
      "hapref-token",
      (document.getElementById("token") as HTMLInputElement).value,
    );
    void refresh();
  });
  void refresh();
  window.setInterval(refresh, 5000);
}

async function route(): Promise<void> {
  if (previewTimer !== undefined) window.clearInterval(previewTimer);
  try {
    if (window.location.hash === "#dashboard") await dashboardPage();
    else await participantPage();
  } catch (err) {
    const detail = err instanceof ApiError ? `${err.status}` : String(err);
    root().innerHTML = `<h2>Service unreachable</h2><pre>${detail}</pre>`;
  }
}

window.addEventListener("hashchange", () => void route());
void route();
