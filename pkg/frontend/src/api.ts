// REST client for the qbv search service. Field names mirror the service
// contract exactly.

export interface QueryResult {
  id: string;
  score: number;
  audio_url: string;
}

export interface QueryResponse {
  results: QueryResult[];
  backend: string;
  latency_ms: number;
}

export interface ReferenceEntry {
  id: string;
  audio_url: string;
}

export class ServiceError extends Error {
  constructor(public status: number, public detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, detail);
}

export async function postQuery(
  baseUrl: string,
  wav: Blob,
  k: number,
  backend: string,
  signal?: AbortSignal,
): Promise<QueryResponse> {
  const form = new FormData();
  form.append("audio", wav, "imitation.wav");
  form.append("k", String(k));
  form.append("backend", backend);
  const resp = await fetch(`${baseUrl}/api/query`, { method: "POST", body: form, signal });
  await raiseForStatus(resp);
  return (await resp.json()) as QueryResponse;
}

export async function listReferences(baseUrl: string): Promise<ReferenceEntry[]> {
  const resp = await fetch(`${baseUrl}/api/references`);
  await raiseForStatus(resp);
  const body = await resp.json();
  return body.references as ReferenceEntry[];
}

export async function health(baseUrl: string): Promise<{ status: string; backends: string[] }> {
  const resp = await fetch(`${baseUrl}/api/health`);
  await raiseForStatus(resp);
  return await resp.json();
}
