// Browser glue: one task on screen at a time, client-side validation before
// submit, server rejection reasons shown verbatim, auto-advance on success.

import { ApiError, ClientConfig, fetchNextTask, submitResponse } from "./api";
import { instructionBanner, renderAssignment, renderDone, renderError } from "./render";
import type { Assignment, SelectionPayload, TaskKind } from "./types";
import {
  generationBody,
  neighborBody,
  selectionBody,
  validateGeneration,
  validateNeighbor,
  validateSelection,
} from "./validate";

interface Session {
  cfg: ClientConfig;
  kind: TaskKind;
  current: Assignment | null;
}

const session: Session = {
  cfg: { baseUrl: "", worker: "", token: "" },
  kind: "generation",
  current: null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(message: string): void {
  el("feedback").innerHTML = renderError(message);
}

function clearError(): void {
  el("feedback").innerHTML = "";
}

async function loadNext(): Promise<void> {
  clearError();
  const stage = el("stage");
  try {
    const next = await fetchNextTask(session.cfg, session.kind);
    if (next.status === "no_work") {
      session.current = null;
      stage.innerHTML = renderDone(session.kind);
      return;
    }
    session.current = next;
    stage.innerHTML = renderAssignment(next);
    const input = stage.querySelector<HTMLInputElement>("input[type=text]");
    input?.focus();
  } catch (error) {
    session.current = null;
    stage.innerHTML = "";
    showError(error instanceof Error ? error.message : String(error));
  }
}

function collectChecked(name: string): string[] {
  return Array.from(
    document.querySelectorAll<HTMLInputElement>(`input[name=${name}]:checked`),
  ).map((node) => node.value);
}

function checkedById(id: string): boolean {
  return document.querySelector<HTMLInputElement>(`#${id}`)?.checked ?? false;
}

function textById(id: string): string {
  return document.querySelector<HTMLInputElement>(`#${id}`)?.value ?? "";
}

async function submitCurrent(): Promise<void> {
  const assignment = session.current;
  if (!assignment) {
    return;
  }
  let body;
  if (assignment.kind === "generation") {
    const raw = textById("substitute");
    const lemma = (assignment.payload as { lemma: string }).lemma;
    const problem = validateGeneration(raw, lemma);
    if (problem) {
      showError(problem);
      return;
    }
    body = generationBody(raw);
  } else if (assignment.kind === "selection") {
    const payload = assignment.payload as SelectionPayload;
    const form = {
      chosen: collectChecked("option"),
      writeIn: textById("write-in"),
      omit: checkedById("omit"),
    };
    const problem = validateSelection(form, payload.options);
    if (problem) {
      showError(problem);
      return;
    }
    body = selectionBody(form);
  } else {
    const form = { chosen: collectChecked("neighbor"), none: checkedById("none") };
    const problem = validateNeighbor(form);
    if (problem) {
      showError(problem);
      return;
    }
    body = neighborBody(form);
  }
  try {
    await submitResponse(session.cfg, assignment.task_id, body);
    await loadNext();
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      // stale assignment: someone closed the task; fetch fresh work
      await loadNext();
      return;
    }
    showError(error instanceof ApiError ? error.reason : String(error));
  }
}

function toggleByDigit(digit: number): void {
  const box = document.querySelector<HTMLInputElement>(`input[data-key="${digit}"]`);
  if (box) {
    box.checked = !box.checked;
  }
}

function bindKeyboard(): void {
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement && event.target.type === "text") {
      if (event.key === "Enter") {
        event.preventDefault();
        void submitCurrent();
      }
      return;
    }
    if (event.key >= "1" && event.key <= "9") {
      toggleByDigit(Number(event.key));
    } else if (event.key === "Enter") {
      void submitCurrent();
    } else if (event.key.toLowerCase() === "n") {
      const none = document.querySelector<HTMLInputElement>("#none, #omit");
      if (none) {
        none.checked = !none.checked;
      }
    }
  });
}

function bootstrap(): void {
  el("banner").innerHTML = instructionBanner(window.location.search);
  el("connect").addEventListener("click", () => {
    session.cfg = {
      baseUrl: textById("base-url").replace(/\/$/, ""),
      worker: textById("worker"),
      token: textById("token"),
    };
    session.kind = (document.querySelector<HTMLSelectElement>("#kind")?.value ??
      "generation") as TaskKind;
    el("setup").hidden = true;
    el("workspace").hidden = false;
    void loadNext();
  });
  el("submit").addEventListener("click", () => void submitCurrent());
  el("skip").addEventListener("click", () => void loadNext());
  bindKeyboard();
}

document.addEventListener("DOMContentLoaded", bootstrap);
