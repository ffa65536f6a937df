// Client-side validation mirroring the service's rules. The server stays
// authoritative; these checks just catch mistakes before a round trip.

import type { GenerationBody, NeighborBody, SelectionBody } from "./types";

export function normalizeSubstitute(raw: string): string {
  return raw.trim().replace(/\s+/g, " ").toLowerCase();
}

/** True if the target lemma occurs as whole word(s) of the substitute.
 *  Multiword lemmas ("close to") match as a contiguous word run. */
export function containsTargetWord(substitute: string, lemma: string): boolean {
  const words = normalizeSubstitute(substitute).split(" ");
  const lemmaWords = lemma.split(" ");
  for (let i = 0; i + lemmaWords.length <= words.length; i++) {
    if (lemmaWords.every((w, j) => words[i + j] === w)) {
      return true;
    }
  }
  return false;
}

export function validateGeneration(raw: string, lemma: string): string | null {
  const substitute = normalizeSubstitute(raw);
  if (!substitute) {
    return "Please write a substitute.";
  }
  if (containsTargetWord(substitute, lemma)) {
    return `The substitute must not contain the target word "${lemma}".`;
  }
  return null;
}

export function generationBody(raw: string): GenerationBody {
  return { substitute: normalizeSubstitute(raw) };
}

export interface SelectionForm {
  chosen: string[];
  writeIn: string;
  omit: boolean;
}

export function validateSelection(form: SelectionForm, options: string[]): string | null {
  const writeIn = normalizeSubstitute(form.writeIn);
  if (form.omit && (form.chosen.length > 0 || writeIn)) {
    return "[Omit] means none of the substitutes fit; uncheck it to select or write in.";
  }
  if (!form.omit && form.chosen.length === 0 && !writeIn) {
    return "Select at least one substitute, write one in, or choose [Omit].";
  }
  if (writeIn && options.includes(writeIn)) {
    return `"${writeIn}" is already in the list; select it instead of writing it in.`;
  }
  const unknown = form.chosen.filter((c) => !options.includes(c));
  if (unknown.length > 0) {
    return `Unknown option: ${unknown[0]}`;
  }
  return null;
}

export function selectionBody(form: SelectionForm): SelectionBody {
  const writeIn = normalizeSubstitute(form.writeIn);
  return {
    chosen: [...form.chosen].sort(),
    write_in: writeIn ? writeIn : null,
    omit: form.omit,
  };
}

export interface NeighborForm {
  chosen: string[];
  none: boolean;
}

export function validateNeighbor(form: NeighborForm): string | null {
  if (form.none && form.chosen.length > 0) {
    return "None means no neighbor fits; uncheck it to pick neighbors.";
  }
  if (!form.none && form.chosen.length === 0) {
    return "Pick at least one neighbor, or choose None.";
  }
  return null;
}

export function neighborBody(form: NeighborForm): NeighborBody {
  return { chosen: [...form.chosen].sort(), none: form.none };
}
