// Pure HTML-string rendering for the three task kinds, kept DOM-free so it
// is unit-testable in node. main.ts attaches the strings to the document.

import type {
  Assignment,
  GenerationPayload,
  NeighborPayload,
  SelectionPayload,
} from "./types";

const FORBIDDEN_KEYS = new Set(["label", "gold", "score", "provenance", "similarity"]);

/** Defense in depth: refuse to render any payload that smuggles gold labels
 *  or scores. The service must never send these to annotators. */
export function auditPayload(payload: unknown): void {
  const walk = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(walk);
      return;
    }
    if (node !== null && typeof node === "object") {
      for (const [key, value] of Object.entries(node as Record<string, unknown>)) {
        if (FORBIDDEN_KEYS.has(key)) {
          throw new Error(`payload leaks annotator-hidden field "${key}"`);
        }
        walk(value);
      }
    }
  };
  walk(payload);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** The service marks the target span with angle brackets; turn the first
 *  marked span into a highlighted element. */
export function renderSentence(text: string): string {
  const escaped = escapeHtml(text);
  return escaped.replace(/&lt;(.+?)&gt;/, '<mark class="target">$1</mark>');
}

export function renderGeneration(payload: GenerationPayload): string {
  return `
<section class="task task-generation">
  <p class="sentence">${renderSentence(payload.text)}</p>
  <p class="hint">Write one word or phrase that could replace the highlighted
  word without changing the sentence's meaning. It must not contain
  "${escapeHtml(payload.lemma)}".</p>
  <input id="substitute" type="text" autocomplete="off" autofocus />
</section>`;
}

export function renderSelection(payload: SelectionPayload): string {
  const boxes = payload.options
    .map(
      (option, i) => `
  <label><input type="checkbox" name="option" value="${escapeHtml(option)}"
    data-key="${i + 1}" /> ${escapeHtml(option)}</label>`,
    )
    .join("\n");
  const writeIn = payload.allows_write_in
    ? `<label class="write-in">Other: <input id="write-in" type="text" autocomplete="off" /></label>`
    : "";
  const omit = payload.allows_omit
    ? `<label class="omit"><input type="checkbox" id="omit" /> [Omit] — none of these fit</label>`
    : "";
  return `
<section class="task task-selection">
  <p class="sentence">${renderSentence(payload.text)}</p>
  <p class="hint">Check every substitute that keeps the sentence's meaning.</p>
  <div class="options">${boxes}</div>
  ${writeIn}
  ${omit}
</section>`;
}

export function renderNeighbor(payload: NeighborPayload): string {
  const options = payload.options
    .map(
      (option, i) => `
  <label><input type="checkbox" name="neighbor" value="${escapeHtml(option.option_id)}"
    data-key="${i + 1}" /> ${renderSentence(option.text)}</label>`,
    )
    .join("\n");
  return `
<section class="task task-neighbor">
  <p class="sentence">${renderSentence(payload.text)}</p>
  <p class="hint">Pick the sentence(s) where the highlighted word is used most
  like in the sentence above.</p>
  <div class="options">${options}</div>
  <label class="none"><input type="checkbox" id="none" /> None — no sentence matches</label>
</section>`;
}

export function renderAssignment(assignment: Assignment): string {
  switch (assignment.kind) {
    case "generation":
      return renderGeneration(assignment.payload as GenerationPayload);
    case "selection":
      return renderSelection(assignment.payload as SelectionPayload);
    case "neighbor":
      return renderNeighbor(assignment.payload as NeighborPayload);
  }
}

/** Operator-configurable instruction banner, set through the page URL
 *  (?instructions=...). Deliberately empty by default: annotators get no
 *  guidance about similarity granularity unless the operator adds some. */
export function instructionBanner(search: string): string {
  const text = new URLSearchParams(search).get("instructions");
  if (!text) {
    return "";
  }
  return `<aside class="banner">${escapeHtml(text)}</aside>`;
}

export function renderDone(kind: string): string {
  return `<section class="done"><p>No ${escapeHtml(kind)} tasks left. Thank you!</p></section>`;
}

export function renderError(message: string): string {
  return `<p class="error" role="alert">${escapeHtml(message)}</p>`;
}
