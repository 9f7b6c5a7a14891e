/** DOM wiring: 1s polling of the service, queue + detail rendering, spam/ham
 * submission with keyboard shortcuts (s = spam, h = ham, n = next). */
import { ApiClient, LabelValue, SessionConfig } from "./api.js";
import {
  UiState,
  applyQueue,
  applySession,
  beginSubmit,
  finishSubmit,
  initialState,
  selectNext,
  selectedItem,
  setNetworkBanner,
} from "./state.js";

const POLL_MS = 1000;

const api = new ApiClient("");
const state: UiState = initialState();
let sessionMissing = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function poll(): Promise<void> {
  const session = await api.getSession();
  if (!session.ok) {
    if (session.kind === "http" && session.status === 404) {
      sessionMissing = true;
    } else if (session.kind === "network") {
      setNetworkBanner(state, session.detail);
    }
    render();
    return;
  }
  sessionMissing = false;
  state.banner = null;
  applySession(state, session.value);
  const queue = await api.getQueue();
  if (queue.ok) applyQueue(state, queue.value);
  render();
}

async function submit(recordId: string, label: LabelValue): Promise<void> {
  if (!beginSubmit(state, recordId)) return;
  render();
  const result = await api.postLabel(recordId, label);
  if (result.ok) {
    finishSubmit(state, recordId, { kind: "accepted", label });
  } else if (result.kind === "http" && result.status === 409) {
    finishSubmit(state, recordId, { kind: "conflict" });
    await poll(); // stale item: refresh the queue
  } else {
    finishSubmit(state, recordId, { kind: "network", detail: result.detail });
  }
  render();
}

function submitSelected(label: LabelValue): void {
  const item = selectedItem(state);
  if (item) void submit(item.record_id, label);
}

function onKey(event: KeyboardEvent): void {
  if (event.target instanceof HTMLInputElement) return;
  if (event.key === "s") submitSelected("spam");
  else if (event.key === "h") submitSelected("ham");
  else if (event.key === "n") {
    selectNext(state);
    render();
  }
}

function render(): void {
  renderBanner();
  renderSession();
  renderQueue();
  renderDetail();
  renderProgress();
}

function renderBanner(): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = state.banner ?? "";
  banner.hidden = !state.banner;
}

function renderSession(): void {
  const setup = el<HTMLElement>("setup");
  const dashboard = el<HTMLElement>("dashboard");
  setup.hidden = !sessionMissing;
  dashboard.hidden = sessionMissing;
  const view = state.session;
  if (!view) return;
  el("state-chip").textContent = view.state.replace("_", " ");
  el("state-chip").className = `chip ${view.state}`;
  el("iteration").textContent = String(view.iteration);
  el("count-seed").textContent = String(view.counts.seed);
  el("count-auto").textContent = String(view.counts.auto);
  el("count-expert").textContent = String(view.counts.expert);
  el("count-pool").textContent = String(view.counts.pool_remaining);
  el("accuracy").textContent =
    view.learner_accuracy === null ? "n/a" : `${view.learner_accuracy.toFixed(1)}%`;
  const done = el<HTMLElement>("complete-view");
  done.hidden = view.state !== "complete";
  if (view.state === "complete") {
    el<HTMLAnchorElement>("export-link").href = api.exportUrl();
  }
}

function renderQueue(): void {
  const list = el<HTMLUListElement>("queue");
  list.replaceChildren();
  const view = state.session;
  const working = el<HTMLElement>("working");
  working.hidden = !(view && view.state === "running" && state.queue.length === 0);
  for (const item of state.queue) {
    const li = document.createElement("li");
    li.className = item.record_id === state.selectedId ? "selected" : "";
    if (state.submitted.has(item.record_id)) li.classList.add("submitted");
    const gap = document.createElement("span");
    gap.className = "score";
    gap.textContent = item.score.toFixed(3);
    const text = document.createElement("span");
    text.textContent = item.text.length > 70 ? item.text.slice(0, 70) + "…" : item.text;
    li.append(gap, text);
    li.addEventListener("click", () => {
      state.selectedId = item.record_id;
      render();
    });
    list.appendChild(li);
  }
}

function renderDetail(): void {
  const item = selectedItem(state);
  const detail = el<HTMLElement>("detail");
  detail.hidden = item === null;
  if (!item) return;
  el("review-text").textContent = item.text;
  el("detail-score").textContent = item.score.toFixed(4);
  el("detail-pspam").textContent = item.p_spam.toFixed(4);
  const busy = state.inFlight.has(item.record_id) || state.submitted.has(item.record_id);
  el<HTMLButtonElement>("btn-spam").disabled = busy;
  el<HTMLButtonElement>("btn-ham").disabled = busy;
}

function renderProgress(): void {
  const svg = el<HTMLElement>("chart");
  const points = state.history;
  if (points.length === 0) {
    svg.replaceChildren();
    return;
  }
  const width = 560;
  const height = 120;
  const maxLabeled = Math.max(...points.map((p) => p.auto + p.expert), 1);
  const barWidth = Math.max(2, Math.floor(width / Math.max(points.length, 1)) - 2);
  const ns = "http://www.w3.org/2000/svg";
  const nodes: Element[] = [];
  points.forEach((p, i) => {
    const x = i * (barWidth + 2);
    const autoH = Math.round((p.auto / maxLabeled) * height);
    const expertH = Math.round((p.expert / maxLabeled) * height);
    const auto = document.createElementNS(ns, "rect");
    auto.setAttribute("x", String(x));
    auto.setAttribute("y", String(height - autoH));
    auto.setAttribute("width", String(barWidth));
    auto.setAttribute("height", String(autoH));
    auto.setAttribute("class", "bar-auto");
    const expert = document.createElementNS(ns, "rect");
    expert.setAttribute("x", String(x));
    expert.setAttribute("y", String(height - autoH - expertH));
    expert.setAttribute("width", String(barWidth));
    expert.setAttribute("height", String(expertH));
    expert.setAttribute("class", "bar-expert");
    nodes.push(auto, expert);
  });
  svg.replaceChildren(...nodes);
  const last = points[points.length - 1];
  el("progress-caption").textContent =
    `iteration ${last.iteration}: ${last.auto} auto + ${last.expert} expert labeled, ` +
    `${last.poolRemaining} still in the pool`;
}

function wireSetupForm(): void {
  el<HTMLFormElement>("setup-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const config: SessionConfig = {
      seed_corpus: el<HTMLInputElement>("seed-path").value,
      pool_corpus: el<HTMLInputElement>("pool-path").value,
    };
    const result = await api.startSession(config);
    if (!result.ok) {
      state.banner = `could not start session: ${result.detail}`;
    }
    await poll();
  });
}

export function start(): void {
  wireSetupForm();
  el<HTMLButtonElement>("btn-spam").addEventListener("click", () => submitSelected("spam"));
  el<HTMLButtonElement>("btn-ham").addEventListener("click", () => submitSelected("ham"));
  el<HTMLButtonElement>("btn-next").addEventListener("click", () => {
    selectNext(state);
    render();
  });
  document.addEventListener("keydown", onKey);
  void poll();
  setInterval(() => void poll(), POLL_MS);
}

start();
