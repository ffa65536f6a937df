// Thin client over the service's annotator endpoints. The UI uses nothing
// beyond these three calls, so it can never see gold labels or scores.

import type { NextTask, ResponseBody, TaskKind } from "./types";
import { auditPayload } from "./render";

export interface ClientConfig {
  baseUrl: string;
  worker: string;
  token: string;
  fetchFn?: typeof fetch;
}

export class ApiError extends Error {
  status: number;
  reason: string;

  constructor(status: number, reason: string) {
    super(`${status}: ${reason}`);
    this.status = status;
    this.reason = reason;
  }
}

function doFetch(cfg: ClientConfig): typeof fetch {
  return cfg.fetchFn ?? fetch;
}

function headers(cfg: ClientConfig): Record<string, string> {
  return { "X-Worker-Token": cfg.token, "Content-Type": "application/json" };
}

async function rejection(response: Response): Promise<ApiError> {
  let reason = response.statusText;
  try {
    const body = await response.json();
    reason = body.reason ?? body.detail ?? reason;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, String(reason));
}

export async function health(cfg: ClientConfig): Promise<boolean> {
  try {
    const response = await doFetch(cfg)(`${cfg.baseUrl}/healthz`);
    return response.ok;
  } catch {
    return false;
  }
}

export async function fetchNextTask(cfg: ClientConfig, kind: TaskKind): Promise<NextTask> {
  const url = new URL(`${cfg.baseUrl}/tasks/next`);
  url.searchParams.set("worker", cfg.worker);
  url.searchParams.set("kind", kind);
  const response = await doFetch(cfg)(url.toString(), { headers: headers(cfg) });
  if (!response.ok) {
    throw await rejection(response);
  }
  const body = (await response.json()) as NextTask;
  if (body.status === "assigned") {
    auditPayload(body.payload);
  }
  return body;
}

export async function submitResponse(
  cfg: ClientConfig,
  taskId: string,
  body: ResponseBody,
): Promise<void> {
  const response = await doFetch(cfg)(`${cfg.baseUrl}/tasks/${encodeURIComponent(taskId)}/response`, {
    method: "POST",
    headers: headers(cfg),
    body: JSON.stringify({ worker: cfg.worker, ...body }),
  });
  if (!response.ok) {
    throw await rejection(response);
  }
}
