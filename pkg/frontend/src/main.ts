// DOM wiring for the single-page client: record panel, backend/k controls,
// results list with inline playback.

import { health, postQuery, ServiceError } from "./api.js";
import { MicRecorder } from "./recorder.js";
import { resultListHtml, statusLine } from "./render.js";
import {
  applyError,
  applyResponse,
  beginQuery,
  canQuery,
  finishRecording,
  newSession,
  startRecording,
} from "./state.js";
import { recordingToWavBlob } from "./wav.js";

const BASE_URL = "";
const SERVICE_RATE = 32000;

const state = newSession();
const recorder = new MicRecorder();

const recordBtn = document.getElementById("record") as HTMLButtonElement;
const queryBtn = document.getElementById("query") as HTMLButtonElement;
const backendSel = document.getElementById("backend") as HTMLSelectElement;
const kInput = document.getElementById("k") as HTMLInputElement;
const resultsDiv = document.getElementById("results") as HTMLDivElement;
const statusDiv = document.getElementById("status") as HTMLDivElement;
const errorDiv = document.getElementById("error") as HTMLDivElement;
const player = document.getElementById("player") as HTMLAudioElement;

function refreshControls(): void {
  queryBtn.disabled = !canQuery(state);
  recordBtn.textContent = state.recording ? "stop" : "record";
  recordBtn.classList.toggle("armed", state.recording);
  errorDiv.textContent = state.error ?? "";
  errorDiv.hidden = state.error === null;
}

function renderResults(): void {
  if (!state.lastResponse) return;
  resultsDiv.innerHTML = resultListHtml(state.lastResponse);
  statusDiv.textContent = statusLine(state.lastResponse);
  for (const btn of resultsDiv.querySelectorAll<HTMLButtonElement>("button.play")) {
    btn.addEventListener("click", () => {
      player.src = btn.dataset.url ?? "";
      void player.play();
    });
  }
}

recordBtn.addEventListener("click", async () => {
  if (!state.recording) {
    try {
      await recorder.start();
      startRecording(state);
    } catch {
      applyError(state, "microphone permission denied");
    }
  } else {
    finishRecording(state, await recorder.stop());
  }
  refreshControls();
});

async function runQuery(): Promise<void> {
  if (!canQuery(state)) return;
  state.backend = backendSel.value;
  state.k = Math.max(1, Number(kInput.value) || 5);
  const rec = state.lastRecording!;
  const wav = recordingToWavBlob(rec.samples, rec.sampleRate, SERVICE_RATE);
  const controller = beginQuery(state);
  statusDiv.textContent = "searching...";
  try {
    const response = await postQuery(BASE_URL, wav, state.k, state.backend, controller.signal);
    applyResponse(state, response);
    renderResults();
  } catch (err) {
    if (controller.signal.aborted) return;
    if (err instanceof ServiceError && err.status === 422) {
      applyError(state, "no signal detected in the recording; try again closer to the mic");
    } else if (err instanceof ServiceError) {
      applyError(state, err.detail);
    } else {
      applyError(state, "service unreachable; is `qbv serve` running?");
    }
    statusDiv.textContent = "";
  }
  refreshControls();
}

queryBtn.addEventListener("click", () => void runQuery());
// switching the backend re-queries the same recording without re-recording
backendSel.addEventListener("change", () => void runQuery());

void health(BASE_URL)
  .then((h) => {
    backendSel.innerHTML = h.backends
      .map((b) => `<option value="${b}">${b}</option>`)
      .join("");
  })
  .catch(() => applyError(state, "service unreachable; is `qbv serve` running?"))
  .finally(refreshControls);
