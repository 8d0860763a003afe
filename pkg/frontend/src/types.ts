// Wire types for the session service. Fractional numbers arrive as decimal
// strings; indices, versions, and counts are plain integers.

export type EnvKind = "board" | "grid" | "trap";
export type SessionStatus = "active" | "done";
export type Strategy = "valuemax" | "expert";
export type BudgetMode = "count" | "frequency";

export interface LegalAction {
  action: number;
  label: string;
  cell?: number;
}

export interface RenderState {
  index: number;
  kind: EnvKind;
  stage: number;
  steps_taken: number;
  // board
  cells?: number[] | null;
  to_move?: string | null;
  size?: number;
  // grid
  cell?: [number, number];
  rows?: string[];
  // trap
  name?: string;
}

export interface SessionState {
  session_id: string;
  state: RenderState;
  legal_actions: LegalAction[];
  state_version: number;
  status: SessionStatus;
  budget_remaining: number | null;
  outcome?: { total_return: string };
}

export interface DeltaRow {
  action: number;
  delta: string;
}

export interface Advice {
  would_intervene: boolean;
  recommended_action: number;
  deltas: DeltaRow[];
  budget_remaining: number | null;
}

export interface SessionSummary {
  session_id: string;
  env: string;
  skill: string;
  strategy: string;
  budget_mode: string;
  seed: number;
  status: SessionStatus;
  steps_taken: number;
  advice_surfaced: number;
  interventions_accepted: number;
  budget_remaining: number | null;
  total_return: string;
}

export interface CreateSessionRequest {
  env: string;
  skill?: string;
  strategy?: Strategy;
  budget_mode?: BudgetMode;
  budget?: number;
  seed?: number;
  start_from?: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
