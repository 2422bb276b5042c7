// View-model logic, kept free of DOM and network so it is directly testable.

import type { Candidate, Metrics, PendingRequest } from "./api.js";

export type Phase = "idle" | "labeling" | "submitting" | "disconnected";

export interface CardState {
  phase: Phase;
  pending: PendingRequest | null;
  selected: number | null;     // class index, never pre-selected
  waitingSinceMs: number | null;
  notice: string | null;       // inline validation message
  retryAttempt: number;
}

export function initialState(): CardState {
  return { phase: "idle", pending: null, selected: null,
           waitingSinceMs: null, notice: null, retryAttempt: 0 };
}

export function onPollResult(state: CardState, pending: PendingRequest | null,
                             nowMs: number): CardState {
  if (pending === null) {
    return { ...state, phase: "idle", pending: null, selected: null,
             waitingSinceMs: null, retryAttempt: 0 };
  }
  if (state.pending && state.pending.sample_id === pending.sample_id) {
    // same card; keep the operator's selection and timer
    return { ...state, phase: "labeling", pending, retryAttempt: 0 };
  }
  return { ...state, phase: "labeling", pending, selected: null,
           waitingSinceMs: nowMs, notice: null, retryAttempt: 0 };
}

export function selectClass(state: CardState, classIndex: number,
                            numClasses: number): CardState {
  if (state.phase !== "labeling" || classIndex < 0 || classIndex >= numClasses) {
    return state;
  }
  return { ...state, selected: classIndex, notice: null };
}

export function selectTopCandidate(state: CardState, slot: number,
                                   classNames: string[]): CardState {
  // keyboard shortcut 1..5 picks from the displayed top candidates
  if (state.phase !== "labeling" || !state.pending) return state;
  const candidate = state.pending.topk[slot];
  if (!candidate) return state;
  const idx = classNames.indexOf(candidate.class_name);
  if (idx < 0) return state;
  return { ...state, selected: idx, notice: null };
}

export function canSubmit(state: CardState): boolean {
  return state.phase === "labeling" && state.pending !== null &&
    state.selected !== null;
}

export function beginSubmit(state: CardState): CardState {
  return { ...state, phase: "submitting" };
}

export function onSubmitResult(state: CardState,
                               result: "ok" | "conflict" | "invalid"): CardState {
  if (result === "ok") {
    return { ...state, phase: "idle", pending: null, selected: null,
             waitingSinceMs: null, notice: null };
  }
  if (result === "conflict") {
    // the pending sample moved on; silently drop the card and re-poll
    return { ...state, phase: "idle", pending: null, selected: null,
             waitingSinceMs: null, notice: null };
  }
  return { ...state, phase: "labeling",
           notice: "That label was rejected as invalid; pick another class." };
}

export function onNetworkError(state: CardState): CardState {
  return { ...state, phase: "disconnected",
           retryAttempt: state.retryAttempt + 1 };
}

export function onReconnected(state: CardState): CardState {
  return { ...state, phase: "idle", pending: null, selected: null,
           waitingSinceMs: null, retryAttempt: 0 };
}

export function backoffMs(attempt: number, baseMs = 1000, capMs = 15000): number {
  return Math.min(capMs, baseMs * Math.pow(2, Math.max(0, attempt - 1)));
}

export function elapsedSeconds(state: CardState, nowMs: number): number {
  if (state.waitingSinceMs === null) return 0;
  return Math.max(0, (nowMs - state.waitingSinceMs) / 1000);
}

export function filterClasses(classNames: string[], query: string,
                              limit = 50): { index: number; name: string }[] {
  const q = query.trim().toLowerCase();
  const out: { index: number; name: string }[] = [];
  for (let i = 0; i < classNames.length && out.length < limit; i++) {
    if (!q || classNames[i].toLowerCase().includes(q)) {
      out.push({ index: i, name: classNames[i] });
    }
  }
  return out;
}

export function barWidthPercent(prob: number): number {
  return Math.max(0, Math.min(100, prob * 100));
}

export function displayedProbabilitySum(topk: Candidate[]): number {
  return topk.reduce((acc, c) => acc + c.fused_prob, 0);
}

export interface AccuracyPoint {
  end: number;
  acc: number;
  zsAcc: number;
}

export function accuracySeries(metrics: Metrics): AccuracyPoint[] {
  const out: AccuracyPoint[] = [];
  for (const w of metrics.summary.windows) {
    if (w.acc !== null && w.zs_acc !== null) {
      out.push({ end: w.end, acc: w.acc, zsAcc: w.zs_acc });
    }
  }
  return out;
}

export function sparklinePath(values: number[], width: number,
                              height: number): string {
  if (values.length === 0) return "";
  if (values.length === 1) {
    const y = height - values[0] * height;
    return `M0,${y.toFixed(2)} L${width},${y.toFixed(2)}`;
  }
  const step = width / (values.length - 1);
  return values
    .map((v, i) => {
      const x = i * step;
      const y = height - Math.max(0, Math.min(1, v)) * height;
      return `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}
