// DOM wiring: one in-flight poll at a time, submits serialized behind it.

import { ApiClient, Metrics, PendingRequest, SessionInfo } from "./api.js";
import * as vm from "./model.js";

const POLL_MS = 700;

const api = new ApiClient("");
let state = vm.initialState();
let sessionId: string | null = null;
let classNames: string[] = [];
let lastMetrics: Metrics | null = null;
let sessionInfo: SessionInfo | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setState(next: vm.CardState): void {
  state = next;
  render();
}

async function discoverSession(): Promise<void> {
  const sessions = await api.listSessions();
  if (sessions.length === 0) throw new Error("no session");
  sessionInfo = sessions[0];
  if (sessionId !== sessionInfo.session_id) {
    sessionId = sessionInfo.session_id;
    classNames = await api.classes(sessionId);
  }
}

async function pollOnce(): Promise<void> {
  try {
    await discoverSession();
    const pending = await api.pending(sessionId!);
    lastMetrics = await api.metrics(sessionId!);
    if (state.phase === "disconnected") setState(vm.onReconnected(state));
    setState(vm.onPollResult(state, pending, Date.now()));
  } catch (err) {
    setState(vm.onNetworkError(state));
  }
}

function scheduleLoop(): void {
  const delay = state.phase === "disconnected"
    ? vm.backoffMs(state.retryAttempt) : POLL_MS;
  window.setTimeout(async () => {
    if (state.phase !== "submitting") {
      await pollOnce();
    }
    scheduleLoop();
  }, delay);
}

async function submitSelected(): Promise<void> {
  if (!vm.canSubmit(state) || !sessionId || !state.pending) return;
  const sampleId = state.pending.sample_id;
  const label = state.selected!;
  setState(vm.beginSubmit(state));
  try {
    const result = await api.submitLabel(sessionId, sampleId, label);
    setState(vm.onSubmitResult(state, result));
    await pollOnce();
  } catch (err) {
    setState(vm.onNetworkError(state));
  }
}

function renderCard(): void {
  const card = el<HTMLDivElement>("card");
  const idle = el<HTMLDivElement>("idle");
  if (state.phase !== "labeling" && state.phase !== "submitting"
      || !state.pending) {
    card.classList.add("hidden");
    idle.classList.remove("hidden");
    idle.textContent = state.phase === "disconnected"
      ? "" : sessionInfo?.status === "finished"
        ? "Stream finished - nothing left to label."
        : "No uncertain sample waiting. Live metrics below.";
    return;
  }
  card.classList.remove("hidden");
  idle.classList.add("hidden");

  el<HTMLSpanElement>("sample-id").textContent = state.pending.sample_id;
  el<HTMLSpanElement>("timer").textContent =
    `${vm.elapsedSeconds(state, Date.now()).toFixed(0)}s`;

  const thumb = el<HTMLDivElement>("thumb");
  if (state.pending.asset_uri) {
    thumb.innerHTML = "";
    const img = document.createElement("img");
    img.src = state.pending.asset_uri;
    img.alt = state.pending.sample_id;
    thumb.appendChild(img);
  } else {
    thumb.textContent = "no preview";
  }

  const list = el<HTMLDivElement>("candidates");
  list.innerHTML = "";
  state.pending.topk.forEach((cand, slot) => {
    const idx = classNames.indexOf(cand.class_name);
    const row = document.createElement("button");
    row.className = "candidate" + (state.selected === idx ? " selected" : "");
    row.innerHTML = `
      <span class="key">${slot + 1}</span>
      <span class="name">${cand.class_name}</span>
      <span class="bars">
        <span class="bar fused" style="width:${vm.barWidthPercent(cand.fused_prob)}%"></span>
        <span class="bar zs" style="width:${vm.barWidthPercent(cand.zs_prob)}%"></span>
      </span>
      <span class="prob">${(cand.fused_prob * 100).toFixed(1)}%</span>`;
    row.onclick = () => setState(vm.selectClass(state, idx, classNames.length));
    list.appendChild(row);
  });

  const results = el<HTMLDivElement>("search-results");
  const query = el<HTMLInputElement>("search").value;
  results.innerHTML = "";
  if (query.trim()) {
    for (const hit of vm.filterClasses(classNames, query, 8)) {
      const row = document.createElement("button");
      row.className = "search-hit" +
        (state.selected === hit.index ? " selected" : "");
      row.textContent = hit.name;
      row.onclick = () =>
        setState(vm.selectClass(state, hit.index, classNames.length));
      results.appendChild(row);
    }
  }

  el<HTMLDivElement>("notice").textContent = state.notice ?? "";
  const submit = el<HTMLButtonElement>("submit");
  submit.disabled = !vm.canSubmit(state);
  submit.textContent = state.selected === null
    ? "Select a class first"
    : `Label as "${classNames[state.selected]}"`;
}

function renderMetrics(): void {
  const banner = el<HTMLDivElement>("banner");
  banner.classList.toggle("hidden", state.phase !== "disconnected");

  if (!lastMetrics) return;
  const m = lastMetrics;
  el<HTMLSpanElement>("m-n").textContent = String(m.summary.n);
  el<HTMLSpanElement>("m-acc").textContent =
    m.summary.overall_acc === null ? "n/a"
      : `${(m.summary.overall_acc * 100).toFixed(1)}%`;
  el<HTMLSpanElement>("m-zs").textContent =
    m.summary.zs_acc === null ? "n/a"
      : `${(m.summary.zs_acc * 100).toFixed(1)}%`;
  el<HTMLSpanElement>("m-lambda").textContent = m.lambda.toFixed(3);
  el<HTMLSpanElement>("m-flagged").textContent =
    `${(m.flagged_fraction * 100).toFixed(1)}% (target ${(m.gamma * 100).toFixed(0)}%)`;
  if (sessionInfo) {
    el<HTMLSpanElement>("m-status").textContent =
      `${sessionInfo.status} ${sessionInfo.progress.processed}/${sessionInfo.progress.total}`;
  }

  const series = vm.accuracySeries(m);
  el<HTMLElement>("line-acc").setAttribute(
    "d", vm.sparklinePath(series.map((p) => p.acc), 360, 80));
  el<HTMLElement>("line-zs").setAttribute(
    "d", vm.sparklinePath(series.map((p) => p.zsAcc), 360, 80));
}

function render(): void {
  renderCard();
  renderMetrics();
}

function bindInputs(): void {
  el<HTMLButtonElement>("submit").onclick = () => void submitSelected();
  el<HTMLInputElement>("search").oninput = () => render();
  document.addEventListener("keydown", (ev) => {
    const searching = document.activeElement === el("search");
    if (ev.key === "/" && !searching) {
      ev.preventDefault();
      el<HTMLInputElement>("search").focus();
      return;
    }
    if (searching && ev.key === "Escape") {
      el<HTMLInputElement>("search").blur();
      return;
    }
    if (!searching && ev.key >= "1" && ev.key <= "5") {
      setState(vm.selectTopCandidate(state, Number(ev.key) - 1, classNames));
      return;
    }
    if (!searching && ev.key === "Enter") void submitSelected();
  });
}

bindInputs();
void pollOnce().then(scheduleLoop);
