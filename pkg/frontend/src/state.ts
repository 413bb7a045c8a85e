// Session state for the record -> query -> listen -> refine loop.
// Invariants: querying is disabled until a recording exists; a re-record
// fully replaces the previous audio; a new query cancels the in-flight one;
// the rendered list always mirrors the last response exactly.

import type { QueryResponse } from "./api.js";

export interface Recording {
  samples: Float32Array;
  sampleRate: number;
}

export interface SessionState {
  recording: boolean;
  lastRecording: Recording | null;
  backend: string;
  k: number;
  lastResponse: QueryResponse | null;
  inflight: AbortController | null;
  playingId: string | null;
  error: string | null;
}

export function newSession(backend = "encoder", k = 5): SessionState {
  return {
    recording: false,
    lastRecording: null,
    backend,
    k,
    lastResponse: null,
    inflight: null,
    playingId: null,
    error: null,
  };
}

export function canQuery(state: SessionState): boolean {
  return state.lastRecording !== null && !state.recording;
}

export function startRecording(state: SessionState): void {
  state.recording = true;
  state.error = null;
}

export function finishRecording(state: SessionState, rec: Recording): void {
  state.recording = false;
  state.lastRecording = rec; // replaces any previous take; no stale audio
}

export function beginQuery(state: SessionState): AbortController {
  if (!canQuery(state)) throw new Error("no recording to query with");
  if (state.inflight) state.inflight.abort(); // cancel, do not queue
  const controller = new AbortController();
  state.inflight = controller;
  state.error = null;
  return controller;
}

export function applyResponse(state: SessionState, response: QueryResponse): void {
  state.lastResponse = response;
  state.inflight = null;
  state.playingId = null;
}

export function applyError(state: SessionState, message: string): void {
  state.error = message;
  state.inflight = null;
}
