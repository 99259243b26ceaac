import { ApiError, type SessionApi } from "./api.js";
import type {
  ConstraintsPayload,
  Label,
  SessionView,
  WhatifResult,
} from "./types.js";

// The server is the single source of truth for game state. The store keeps
// only what a browser must: the drop-down selection being composed, drafts
// for feedback/questionnaire/probes, the decision timer, and transient
// notices. Everything else is re-fetched after every action.

export interface FeedbackDraft {
  enabled: boolean[];
  lo: number[];
  hi: number[];
  budget: number;
  maxChanges: number;
  attachToNextRound: boolean;
}

export interface QuestionnaireDraft {
  items: (number | null)[];
  freeText: string;
}

export interface StoreState {
  view: SessionView | null;
  selection: number[];
  busy: boolean;
  notice: string | null;
  feedbackOpen: boolean;
  feedback: FeedbackDraft | null;
  whatif: WhatifResult | null;
  questionnaire: QuestionnaireDraft;
  probes: number[][] | null;
  probeAnswers: Label[];
}

function initialState(): StoreState {
  return {
    view: null,
    selection: [],
    busy: false,
    notice: null,
    feedbackOpen: false,
    feedback: null,
    whatif: null,
    questionnaire: { items: Array(8).fill(null), freeText: "" },
    probes: null,
    probeAnswers: [],
  };
}

export function selectionCost(view: SessionView, selection: number[]): number {
  return view.plants.reduce((sum, p, i) => sum + p.leaf_cost * (selection[i] ?? 0), 0);
}

export function defaultFeedbackDraft(view: SessionView): FeedbackDraft {
  return {
    enabled: view.plants.map(() => true),
    lo: view.plants.map((p) => p.leaf_min),
    hi: view.plants.map((p) => p.leaf_max),
    budget: view.budget,
    maxChanges: Math.min(3, view.plants.length),
    attachToNextRound: false,
  };
}

/** Translate the editor draft into the service's constraints payload. */
export function draftToConstraints(
  view: SessionView,
  draft: FeedbackDraft,
): ConstraintsPayload {
  const mutable = view.plants
    .map((p) => p.plant_id)
    .filter((_, i) => draft.enabled[i]);
  if (mutable.length === 0) {
    throw new Error("enable at least one plant");
  }
  const ranges: [number, number, number][] = [];
  view.plants.forEach((p, i) => {
    if (!draft.enabled[i]) return;
    if (draft.lo[i] > p.leaf_min || draft.hi[i] < p.leaf_max) {
      ranges.push([p.plant_id, draft.lo[i], draft.hi[i]]);
    }
  });
  return {
    mutable_plants: mutable,
    ranges,
    budget: draft.budget,
    max_changes: draft.maxChanges,
  };
}

export class Store {
  state: StoreState = initialState();
  private sessionId = "";
  private screenReadyAt: number | null = null;
  private syncedRound = -1;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: SessionApi,
    private readonly now: () => number = () => Date.now(),
  ) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get id(): string {
    return this.sessionId;
  }

  async create(body: { session_id?: string; seed?: number } = {}): Promise<void> {
    const doc = await this.api.createSession(body);
    this.sessionId = doc.session_id;
    await this.sync(doc.state);
  }

  /** Join an existing session: everything renders from GET state alone. */
  async join(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    const doc = await this.api.getSession(sessionId);
    await this.sync(doc.state);
  }

  async refresh(): Promise<void> {
    const doc = await this.api.getSession(this.sessionId);
    await this.sync(doc.state);
  }

  private async sync(view: SessionView): Promise<void> {
    const state = this.state;
    state.view = view;
    if (view.phase === "AWAITING_DIET" && this.syncedRound !== view.round_number) {
      // a new feeding screen: preselect the server-known diet, start timing
      state.selection = [...view.current_diet];
      this.syncedRound = view.round_number;
      this.screenReadyAt = this.now();
    }
    if (view.phase === "PROBES" && state.probes === null) {
      state.probes = (await this.api.getProbes(this.sessionId)).probes;
    }
    this.emit();
  }

  private async act(action: () => Promise<void>): Promise<void> {
    if (this.state.busy) return;
    this.state.busy = true;
    this.state.notice = null;
    this.emit();
    try {
      await action();
    } catch (err) {
      this.state.notice = err instanceof ApiError || err instanceof Error
        ? err.message
        : String(err);
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  // --- feeding screen ---

  setLeaf(plantIndex: number, leaves: number): void {
    const view = this.state.view;
    if (!view) return;
    const plant = view.plants[plantIndex];
    if (!plant) return;
    const clamped = Math.min(plant.leaf_max, Math.max(plant.leaf_min, leaves));
    this.state.selection[plantIndex] = clamped;
    this.state.notice = null;
    this.emit();
  }

  selectedCost(): number {
    const view = this.state.view;
    return view ? selectionCost(view, this.state.selection) : 0;
  }

  canFeed(): boolean {
    const view = this.state.view;
    return (
      !!view &&
      view.phase === "AWAITING_DIET" &&
      !this.state.busy &&
      this.selectedCost() <= view.budget
    );
  }

  async feed(): Promise<void> {
    const view = this.state.view;
    if (!view || !this.canFeed()) return;
    const started = this.screenReadyAt;
    const decisionMs = started === null ? 0 : Math.max(0, this.now() - started);
    let feedback: ConstraintsPayload | null = null;
    if (this.state.feedback?.attachToNextRound) {
      feedback = draftToConstraints(view, this.state.feedback);
    }
    await this.act(async () => {
      await this.api.submitRound(this.sessionId, [...this.state.selection], decisionMs, feedback);
      this.state.whatif = null;
      await this.refresh();
    });
  }

  async acknowledge(): Promise<void> {
    await this.act(async () => {
      await this.api.acknowledge(this.sessionId);
      await this.refresh();
    });
  }

  // --- feedback panel ---

  toggleFeedbackPanel(): void {
    const view = this.state.view;
    if (!view) return;
    this.state.feedbackOpen = !this.state.feedbackOpen;
    if (this.state.feedbackOpen && !this.state.feedback) {
      this.state.feedback = defaultFeedbackDraft(view);
    }
    this.emit();
  }

  editFeedback(change: Partial<FeedbackDraft>): void {
    if (!this.state.feedback) return;
    this.state.feedback = { ...this.state.feedback, ...change };
    this.emit();
  }

  togglePlantMutable(plantIndex: number): void {
    const draft = this.state.feedback;
    if (!draft) return;
    draft.enabled = draft.enabled.map((on, i) => (i === plantIndex ? !on : on));
    this.emit();
  }

  setFeedbackRange(plantIndex: number, lo: number, hi: number): void {
    const draft = this.state.feedback;
    if (!draft) return;
    draft.lo = draft.lo.map((v, i) => (i === plantIndex ? lo : v));
    draft.hi = draft.hi.map((v, i) => (i === plantIndex ? hi : v));
    this.emit();
  }

  /**
   * Fold the most recent guidance (from a what-if, or from the round's
   * scheduled explanation) into the constraint editor: enable the suggested
   * plants, reopen full ranges, adopt the suggested budget.
   */
  applyGuidance(): void {
    const view = this.state.view;
    if (!view) return;
    const lastRound = view.history[view.history.length - 1];
    const guidance = this.state.whatif?.guidance ?? lastRound?.guidance_shown ?? null;
    if (!guidance) return;
    const draft = this.state.feedback ?? defaultFeedbackDraft(view);
    const additions = new Set(guidance.suggested_additions);
    this.state.feedback = {
      ...draft,
      enabled: view.plants.map((p, i) => draft.enabled[i] || additions.has(p.plant_id)),
      lo: view.plants.map((p) => p.leaf_min),
      hi: view.plants.map((p) => p.leaf_max),
      budget: guidance.suggested_budget ?? draft.budget,
    };
    this.state.feedbackOpen = true;
    this.state.whatif = null;
    this.emit();
  }

  async requestWhatif(): Promise<void> {
    const view = this.state.view;
    const draft = this.state.feedback;
    if (!view || !draft) return;
    let constraints: ConstraintsPayload;
    try {
      constraints = draftToConstraints(view, draft);
    } catch (err) {
      this.state.notice = err instanceof Error ? err.message : String(err);
      this.emit();
      return;
    }
    await this.act(async () => {
      const result: WhatifResult = await this.api.whatif(this.sessionId, constraints);
      this.state.whatif = result;
      await this.refresh();
    });
  }

  // --- questionnaire ---

  setQuestionnaireItem(index: number, rating: number): void {
    const items = [...this.state.questionnaire.items];
    items[index] = rating;
    this.state.questionnaire = { ...this.state.questionnaire, items };
    this.emit();
  }

  setFreeText(text: string): void {
    this.state.questionnaire = { ...this.state.questionnaire, freeText: text };
    this.emit();
  }

  canSubmitQuestionnaire(): boolean {
    return (
      !this.state.busy &&
      this.state.view?.phase === "QUESTIONNAIRE" &&
      this.state.questionnaire.items.every((v) => v !== null)
    );
  }

  async submitQuestionnaire(): Promise<void> {
    if (!this.canSubmitQuestionnaire()) return;
    const items = this.state.questionnaire.items.map((v) => v as number);
    await this.act(async () => {
      await this.api.submitQuestionnaire(this.sessionId, items, this.state.questionnaire.freeText);
      await this.refresh();
    });
  }

  // --- probes ---

  async answerProbe(label: Label): Promise<void> {
    const view = this.state.view;
    if (!view || view.phase !== "PROBES" || this.state.busy) return;
    if (this.state.probeAnswers.length >= view.n_probes) return;
    this.state.probeAnswers = [...this.state.probeAnswers, label];
    if (this.state.probeAnswers.length < view.n_probes) {
      this.emit();
      return;
    }
    // last probe answered: submit the batch; the score is never shown
    const answers = this.state.probeAnswers;
    await this.act(async () => {
      await this.api.submitProbes(this.sessionId, answers);
      await this.refresh();
    });
  }
}
