/** Wire types for the session service, with runtime guards used by the
 * contract tests and at the fetch boundary. */

export type PromptKind =
  | "familiarize"
  | "pick_group_extremes"
  | "pick_anchors"
  | "rate"
  | "choose";

export interface Prompt {
  phase: string;
  kind: PromptKind;
  stimulus_ids: number[];
  progress_done: number;
  progress_total: number;
  group_index?: number;
  pleasant_candidates?: number[];
  unpleasant_candidates?: number[];
  anchor_best?: number;
  anchor_worst?: number;
  presenter_degraded?: boolean;
}

export type ResponseKind =
  | "confirm_familiarization"
  | "group_extremes"
  | "anchors"
  | "rating"
  | "choice";

export interface ResponseBody {
  kind: ResponseKind;
  payload: Record<string, number>;
  idempotency_key: string;
}

export interface Ack {
  phase: string;
  progress_done: number;
  progress_total: number;
  duplicate: boolean;
}

export interface SessionCreated {
  session_id: string;
  phase: string;
}

export interface CatalogEntry {
  id: number;
  pattern: string;
  speed_mm_s: number;
  am_hz: number | null;
  lambda_mm: number | null;
  d_mm: number | null;
  offset_mm: number | null;
  duration_s: number;
}

export interface Catalog {
  stimuli: CatalogEntry[];
  descriptions: Record<string, string>;
}

export interface TrajectoryFrame {
  t: number;
  foci: [number, number, number][]; // x_mm, y_mm, amplitude
}

export interface Trajectory {
  stimulus_id: number;
  description: string;
  update_rate: number;
  path_length: number;
  stride: number;
  frames: TrajectoryFrame[];
}

export interface Results {
  session_id: string;
  theta: number[];
  normalized_scores: number[] | null;
  converged: boolean;
  iterations: number;
  metadata: Record<string, unknown>;
  analysis?: {
    before: number[];
    after: number[];
    r: number;
    mad: number;
  };
}

export interface Health {
  status: string;
  backend: string;
  sessions: number;
}

const isNumberArray = (v: unknown): v is number[] =>
  Array.isArray(v) && v.every((x) => typeof x === "number");

export function isPrompt(v: unknown): v is Prompt {
  if (typeof v !== "object" || v === null) return false;
  const p = v as Record<string, unknown>;
  const kinds = ["familiarize", "pick_group_extremes", "pick_anchors", "rate", "choose"];
  return (
    typeof p.phase === "string" &&
    typeof p.kind === "string" &&
    kinds.includes(p.kind) &&
    isNumberArray(p.stimulus_ids) &&
    typeof p.progress_done === "number" &&
    typeof p.progress_total === "number"
  );
}

export function isAck(v: unknown): v is Ack {
  if (typeof v !== "object" || v === null) return false;
  const a = v as Record<string, unknown>;
  return (
    typeof a.phase === "string" &&
    typeof a.progress_done === "number" &&
    typeof a.progress_total === "number" &&
    typeof a.duplicate === "boolean"
  );
}

export function isSessionCreated(v: unknown): v is SessionCreated {
  if (typeof v !== "object" || v === null) return false;
  const s = v as Record<string, unknown>;
  return typeof s.session_id === "string" && typeof s.phase === "string";
}

export function isCatalog(v: unknown): v is Catalog {
  if (typeof v !== "object" || v === null) return false;
  const c = v as Record<string, unknown>;
  if (!Array.isArray(c.stimuli) || typeof c.descriptions !== "object") return false;
  return c.stimuli.every(
    (s) =>
      typeof s === "object" &&
      s !== null &&
      typeof (s as CatalogEntry).id === "number" &&
      typeof (s as CatalogEntry).pattern === "string" &&
      typeof (s as CatalogEntry).speed_mm_s === "number",
  );
}

export function isTrajectory(v: unknown): v is Trajectory {
  if (typeof v !== "object" || v === null) return false;
  const t = v as Record<string, unknown>;
  if (typeof t.stimulus_id !== "number" || !Array.isArray(t.frames)) return false;
  return t.frames.every((frame) => {
    const f = frame as TrajectoryFrame;
    return (
      typeof f.t === "number" &&
      Array.isArray(f.foci) &&
      f.foci.every((focus) => isNumberArray(focus) && focus.length === 3)
    );
  });
}

export function isResults(v: unknown): v is Results {
  if (typeof v !== "object" || v === null) return false;
  const r = v as Record<string, unknown>;
  return (
    typeof r.session_id === "string" &&
    isNumberArray(r.theta) &&
    (r.normalized_scores === null || isNumberArray(r.normalized_scores)) &&
    typeof r.converged === "boolean"
  );
}

export function isHealth(v: unknown): v is Health {
  if (typeof v !== "object" || v === null) return false;
  const h = v as Record<string, unknown>;
  return typeof h.status === "string" && typeof h.backend === "string";
}
