/** UI state and its transitions. Pure data manipulation, no DOM and no
 * fetch, so every rule (selection advance, double-submit guard, history
 * series) is unit-testable. */
import type { PendingItem, SessionView } from "./api.js";

export interface HistoryPoint {
  iteration: number;
  auto: number;
  expert: number;
  poolRemaining: number;
}

export interface UiState {
  session: SessionView | null;
  queue: PendingItem[];
  selectedId: string | null;
  /** record ids with a POST in flight; blocks duplicate submits */
  inFlight: Set<string>;
  /** record id -> label accepted by the server in this browser session */
  submitted: Map<string, string>;
  history: HistoryPoint[];
  banner: string | null;
  /** set when the server answered 409 for a stale item: re-fetch the queue */
  queueStale: boolean;
}

export function initialState(): UiState {
  return {
    session: null,
    queue: [],
    selectedId: null,
    inFlight: new Set(),
    submitted: new Map(),
    history: [],
    banner: null,
    queueStale: false,
  };
}

export function applySession(state: UiState, view: SessionView): void {
  state.session = view;
  const point: HistoryPoint = {
    iteration: view.iteration,
    auto: view.counts.auto,
    expert: view.counts.expert,
    poolRemaining: view.counts.pool_remaining,
  };
  const last = state.history[state.history.length - 1];
  if (!last || last.iteration !== point.iteration) {
    state.history.push(point);
  } else {
    state.history[state.history.length - 1] = point;
  }
}

export function applyQueue(state: UiState, items: PendingItem[]): void {
  state.queue = items;
  state.queueStale = false;
  const ids = new Set(items.map((i) => i.record_id));
  for (const id of [...state.inFlight]) {
    if (!ids.has(id)) state.inFlight.delete(id);
  }
  if (state.selectedId === null || !ids.has(state.selectedId)) {
    state.selectedId = nextUnsubmitted(state)?.record_id ?? null;
  }
}

export function selectedItem(state: UiState): PendingItem | null {
  return state.queue.find((i) => i.record_id === state.selectedId) ?? null;
}

export function nextUnsubmitted(state: UiState): PendingItem | null {
  return (
    state.queue.find(
      (i) => !state.submitted.has(i.record_id) && !state.inFlight.has(i.record_id),
    ) ?? null
  );
}

export function selectNext(state: UiState): void {
  const current = state.queue.findIndex((i) => i.record_id === state.selectedId);
  for (let step = 1; step <= state.queue.length; step++) {
    const item = state.queue[(current + step) % state.queue.length];
    if (item && !state.submitted.has(item.record_id)) {
      state.selectedId = item.record_id;
      return;
    }
  }
}

export function canSubmit(state: UiState, recordId: string): boolean {
  return (
    state.queue.some((i) => i.record_id === recordId) &&
    !state.inFlight.has(recordId) &&
    !state.submitted.has(recordId)
  );
}

export function beginSubmit(state: UiState, recordId: string): boolean {
  if (!canSubmit(state, recordId)) return false;
  state.inFlight.add(recordId);
  return true;
}

export type SubmitOutcome =
  | { kind: "accepted"; label: string }
  | { kind: "conflict" }
  | { kind: "network"; detail: string };

export function finishSubmit(state: UiState, recordId: string, outcome: SubmitOutcome): void {
  state.inFlight.delete(recordId);
  if (outcome.kind === "accepted") {
    state.submitted.set(recordId, outcome.label);
    state.banner = null;
    if (state.selectedId === recordId) selectNext(state);
  } else if (outcome.kind === "conflict") {
    // stale item: someone (or a replayed request) labeled it already
    state.queueStale = true;
  } else {
    state.banner = `submit failed: ${outcome.detail} (will retry on next click)`;
  }
}

export function setNetworkBanner(state: UiState, detail: string): void {
  state.banner = `service unreachable: ${detail}`;
}

export function clearBanner(state: UiState): void {
  state.banner = null;
}
