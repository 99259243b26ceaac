// Wire types for the clxai session service. These mirror the server's JSON
// exactly; the client renders from them and never invents game state.

export type Phase =
  | "AWAITING_DIET"
  | "SHOWING_OUTCOME"
  | "SHOWING_EXPLANATION"
  | "QUESTIONNAIRE"
  | "PROBES"
  | "COMPLETED";

export type Label = "IMPROVE" | "WORSEN";

export interface PlantView {
  plant_id: number;
  display_name: string;
  leaf_cost: number;
  leaf_min: number;
  leaf_max: number;
}

export interface PredictionView {
  label: Label;
  score: number;
}

export interface ChangedPlant {
  plant: number;
  old: number;
  new: number;
}

export interface HintView {
  plant: number;
  q25: number;
  q75: number;
  text: string;
}

export interface CounterfactualView {
  original: number[];
  suggested: number[];
  distance: number;
  changed_plants: ChangedPlant[];
  predicted: PredictionView;
  hints: HintView[];
}

export interface GuidanceView {
  reason: "NO_FLIP_IN_SUBSPACE" | "BUDGET_TOO_TIGHT";
  suggested_additions: number[];
  suggested_budget: number | null;
  message: string;
}

export interface ConstraintsPayload {
  mutable_plants: number[];
  ranges: [number, number, number][]; // (plant, lo, hi)
  budget: number;
  max_changes: number;
}

export interface RoundRecordView {
  round_number: number;
  submitted_diet: number[];
  diet_cost: number;
  prediction: PredictionView;
  fitness_before: number;
  fitness_after: number;
  decision_ms: number;
  explanation_shown: CounterfactualView | null;
  guidance_shown: GuidanceView | null;
  feedback_used: ConstraintsPayload | null;
}

export interface SessionView {
  session_id: string;
  phase: Phase;
  round_number: number;
  total_rounds: number;
  explanation_interval: number;
  fitness: number;
  optimal_threshold: number;
  unsatisfactory_threshold: number;
  budget: number;
  current_diet: number[];
  plants: PlantView[];
  history: RoundRecordView[];
  pending_explanations: CounterfactualView[];
  questionnaire_items: string[];
  n_probes: number;
}

export interface WhatifResult {
  counterfactual?: CounterfactualView;
  guidance?: GuidanceView | null;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
