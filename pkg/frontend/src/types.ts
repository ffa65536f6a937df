// Shapes of the service's annotator-facing JSON. These types deliberately
// have no place for gold labels or similarity scores: the service never
// sends them to annotators, and auditPayload() enforces it at runtime.

export type TaskKind = "generation" | "selection" | "neighbor";

export interface GenerationPayload {
  instance_id: string;
  text: string;
  lemma: string;
}

export interface SelectionPayload {
  instance_id: string;
  text: string;
  lemma: string;
  options: string[];
  allows_omit: boolean;
  allows_write_in: boolean;
}

export interface NeighborOption {
  option_id: string;
  text: string;
}

export interface NeighborPayload {
  target_id: string;
  batch_index: number;
  text: string;
  options: NeighborOption[];
  includes_none: boolean;
}

export type TaskPayload = GenerationPayload | SelectionPayload | NeighborPayload;

export interface Assignment {
  status: "assigned";
  assignment_id: string;
  task_id: string;
  kind: TaskKind;
  issued_at: number;
  payload: TaskPayload;
}

export interface NoWork {
  status: "no_work";
}

export type NextTask = Assignment | NoWork;

export interface GenerationBody {
  substitute: string;
}

export interface SelectionBody {
  chosen: string[];
  write_in: string | null;
  omit: boolean;
}

export interface NeighborBody {
  chosen: string[];
  none: boolean;
}

export type ResponseBody = GenerationBody | SelectionBody | NeighborBody;
