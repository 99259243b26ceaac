import type {
  CounterfactualView,
  GuidanceView,
  PlantView,
  SessionView,
} from "./types.js";
import { selectionCost, type StoreState } from "./store.js";

// Every screen is a pure function StoreState -> HTML string. main.ts swaps
// the result into the page and wires events by data-action attributes, so
// all of the view logic stays testable without a browser.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function plantName(plants: PlantView[], plantId: number): string {
  const plant = plants.find((p) => p.plant_id === plantId);
  return plant ? plant.display_name : `plant ${plantId}`;
}

export function renderFitnessBar(view: SessionView): string {
  const fitness = Math.max(0, Math.min(100, view.fitness));
  const zone =
    fitness >= view.optimal_threshold
      ? "fit-optimal"
      : fitness <= view.unsatisfactory_threshold
        ? "fit-low"
        : "fit-mid";
  const h = 160;
  const y = (v: number) => h - (v / 100) * h;
  return `
<div class="shub ${zone}" data-fitness="${fitness}">
  <svg class="shub-avatar" viewBox="0 0 60 60" aria-hidden="true">
    <circle cx="30" cy="26" r="18" class="shub-head"></circle>
    <circle cx="23" cy="22" r="3" class="shub-eye"></circle>
    <circle cx="37" cy="22" r="3" class="shub-eye"></circle>
    <path d="M 20 34 Q 30 ${fitness >= view.optimal_threshold ? 44 : fitness <= view.unsatisfactory_threshold ? 28 : 38} 40 34" class="shub-mouth"></path>
  </svg>
  <svg class="fitness-bar" viewBox="0 0 24 ${h}" role="img" aria-label="fitness ${fitness} of 100">
    <rect x="6" y="0" width="12" height="${h}" class="bar-track"></rect>
    <rect x="6" y="${y(fitness)}" width="12" height="${h - y(fitness)}" class="bar-fill"></rect>
    <line x1="0" x2="24" y1="${y(view.optimal_threshold)}" y2="${y(view.optimal_threshold)}" class="bar-mark mark-optimal"></line>
    <line x1="0" x2="24" y1="${y(view.unsatisfactory_threshold)}" y2="${y(view.unsatisfactory_threshold)}" class="bar-mark mark-unsatisfactory"></line>
  </svg>
  <div class="fitness-value">${fitness}</div>
</div>`;
}

function renderHeader(view: SessionView): string {
  return `
<header class="hud">
  <div class="round-counter">Round ${view.round_number} of ${view.total_rounds}</div>
  ${renderFitnessBar(view)}
</header>`;
}

function renderNotice(state: StoreState): string {
  if (!state.notice) return "";
  return `<p class="notice" role="alert">${escapeHtml(state.notice)}</p>`;
}

export function renderHistory(view: SessionView): string {
  if (view.history.length === 0) return "";
  const rows = view.history
    .map((r) => {
      const diet = r.submitted_diet.join(", ");
      return `<tr>
  <td>${r.round_number}</td>
  <td>[${diet}]</td>
  <td>${r.diet_cost}</td>
  <td class="label-${r.prediction.label.toLowerCase()}">${r.prediction.label}</td>
  <td>${r.fitness_before} &rarr; ${r.fitness_after}</td>
</tr>`;
    })
    .join("\n");
  return `
<section class="history">
  <h2>Rounds so far</h2>
  <table>
    <thead><tr><th>Round</th><th>Diet</th><th>Cost</th><th>Outcome</th><th>Fitness</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

/**
 * Side-by-side diff of the learner's diet vs the suggestion. One row per
 * entry in changed_plants, nothing else; unchanged plants never appear.
 */
export function renderDiff(cf: CounterfactualView, plants: PlantView[]): string {
  const rows = cf.changed_plants
    .map(
      (c) => `<tr data-diff-plant="${c.plant}">
  <td>${escapeHtml(plantName(plants, c.plant))}</td>
  <td class="old-value">${c.old} leaves</td>
  <td class="new-value">${c.new} leaves</td>
</tr>`,
    )
    .join("\n");
  const hints = cf.hints
    .map((hint) => `<li class="hint">${escapeHtml(hint.text)}</li>`)
    .join("\n");
  return `
<div class="diff">
  <p>If you had fed this instead, the predictor would call it a better diet
  (${cf.distance} time units of change):</p>
  <table class="diff-table">
    <thead><tr><th>Plant</th><th>You fed</th><th>Suggested</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
  ${hints ? `<ul class="hints">${hints}</ul>` : ""}
</div>`;
}

export function renderGuidance(guidance: GuidanceView | null, plants: PlantView[]): string {
  if (!guidance) {
    return `<p class="guidance">No better diet exists under any constraints for this predictor.</p>`;
  }
  const additions = guidance.suggested_additions
    .map((p) => escapeHtml(plantName(plants, p)))
    .join(", ");
  return `
<div class="guidance" data-guidance-reason="${guidance.reason}">
  <p>${escapeHtml(guidance.message)}</p>
  <ul>
    ${additions ? `<li>Also consider: ${additions}</li>` : ""}
    ${guidance.suggested_budget !== null ? `<li>Budget needed: ${guidance.suggested_budget} time units</li>` : ""}
  </ul>
  <button type="button" data-action="apply-guidance">Adjust my constraints</button>
</div>`;
}

function renderFeedbackPanel(state: StoreState): string {
  const view = state.view!;
  if (!state.feedbackOpen || !state.feedback) {
    return `<button type="button" class="link" data-action="toggle-feedback">Ask a what-if with my own constraints</button>`;
  }
  const draft = state.feedback;
  const rows = view.plants
    .map((p, i) => {
      const options = (bound: "lo" | "hi") => {
        const selected = bound === "lo" ? draft.lo[i] : draft.hi[i];
        let html = "";
        for (let v = p.leaf_min; v <= p.leaf_max; v++) {
          html += `<option value="${v}"${v === selected ? " selected" : ""}>${v}</option>`;
        }
        return html;
      };
      return `<tr>
  <td><label><input type="checkbox" data-action="mutable" data-plant="${i}"${draft.enabled[i] ? " checked" : ""}> ${escapeHtml(p.display_name)}</label></td>
  <td><select data-action="range-lo" data-plant="${i}"${draft.enabled[i] ? "" : " disabled"}>${options("lo")}</select>
      to
      <select data-action="range-hi" data-plant="${i}"${draft.enabled[i] ? "" : " disabled"}>${options("hi")}</select></td>
</tr>`;
    })
    .join("\n");
  const result = state.whatif
    ? state.whatif.counterfactual
      ? renderDiff(state.whatif.counterfactual, view.plants)
      : renderGuidance(state.whatif.guidance ?? null, view.plants)
    : "";
  return `
<section class="feedback-panel">
  <h2>What if I could only change...</h2>
  <table>${rows}</table>
  <label>Budget
    <input type="number" data-action="fb-budget" min="0" value="${draft.budget}">
  </label>
  <label>Max plants changed
    <input type="number" data-action="fb-max-changes" min="1" max="${view.plants.length}" value="${draft.maxChanges}">
  </label>
  <label><input type="checkbox" data-action="fb-attach"${draft.attachToNextRound ? " checked" : ""}>
    Use these constraints for my next explanation</label>
  <button type="button" data-action="whatif"${state.busy ? " disabled" : ""}>Show me</button>
  <button type="button" class="link" data-action="toggle-feedback">Close</button>
  ${result}
</section>`;
}

export function renderFeeding(state: StoreState): string {
  const view = state.view!;
  const cost = selectionCost(view, state.selection);
  const remaining = view.budget - cost;
  const overBudget = remaining < 0;
  const cards = view.plants
    .map((p, i) => {
      let options = "";
      for (let v = p.leaf_min; v <= p.leaf_max; v++) {
        options += `<option value="${v}"${v === state.selection[i] ? " selected" : ""}>${v}</option>`;
      }
      return `<div class="plant-card">
  <h3>${escapeHtml(p.display_name)}</h3>
  <p class="leaf-cost">${p.leaf_cost} time unit${p.leaf_cost === 1 ? "" : "s"} per leaf</p>
  <label>Leaves
    <select data-action="leaf" data-plant="${i}">${options}</select>
  </label>
</div>`;
    })
    .join("\n");
  const feedDisabled = overBudget || state.busy;
  return `
${renderHeader(view)}
<main class="feeding">
  <div class="budget ${overBudget ? "over" : ""}">
    Selected cost: ${cost} / budget ${view.budget}
    (${overBudget ? `${-remaining} over` : `${remaining} left`})
  </div>
  <div class="plants">${cards}</div>
  ${overBudget ? `<p class="notice over-budget" role="alert">This diet needs ${cost} time units but the budget is ${view.budget}. Remove some leaves.</p>` : ""}
  ${renderNotice(state)}
  <button type="button" class="feed" data-action="feed"${feedDisabled ? " disabled" : ""}>Feed</button>
  ${renderFeedbackPanel(state)}
  ${renderHistory(view)}
</main>`;
}

function outcomeBanner(view: SessionView): string {
  const last = view.history[view.history.length - 1];
  if (!last) return "";
  const improved = last.prediction.label === "IMPROVE";
  return `
<div class="outcome label-${last.prediction.label.toLowerCase()}">
  <h2>${improved ? "Shub liked that!" : "Shub did not do well."}</h2>
  <p>The predictor judged this diet: <strong>${last.prediction.label}</strong>.
  Fitness ${last.fitness_before} &rarr; ${last.fitness_after}.</p>
</div>`;
}

export function renderOutcome(state: StoreState): string {
  const view = state.view!;
  return `
${renderHeader(view)}
<main class="outcome-screen">
  ${outcomeBanner(view)}
  ${renderNotice(state)}
  <button type="button" data-action="ack"${state.busy ? " disabled" : ""}>Continue</button>
  ${renderHistory(view)}
</main>`;
}

export function renderExplanation(state: StoreState): string {
  const view = state.view!;
  const cf = view.pending_explanations[view.pending_explanations.length - 1];
  const guidanceRecord = view.history[view.history.length - 1]?.guidance_shown ?? null;
  const body = cf
    ? renderDiff(cf, view.plants)
    : renderGuidance(guidanceRecord, view.plants);
  return `
${renderHeader(view)}
<main class="explanation-screen">
  ${outcomeBanner(view)}
  <section class="explanation">
    <h2>A suggestion from the predictor</h2>
    ${body}
  </section>
  ${renderNotice(state)}
  <button type="button" data-action="ack"${state.busy ? " disabled" : ""}>Continue</button>
  ${renderHistory(view)}
</main>`;
}

export function renderQuestionnaire(state: StoreState): string {
  const view = state.view!;
  const items = view.questionnaire_items
    .map((text, i) => {
      const chosen = state.questionnaire.items[i];
      let scale = "";
      for (let v = 1; v <= 5; v++) {
        scale += `<label class="likert">
  <input type="radio" name="q${i}" value="${v}" data-action="rate" data-item="${i}"${chosen === v ? " checked" : ""}>
  ${v}
</label>`;
      }
      return `<li class="q-item">
  <p>${escapeHtml(text)}</p>
  <div class="scale">1 = strongly disagree ${scale} 5 = strongly agree</div>
</li>`;
    })
    .join("\n");
  const complete = state.questionnaire.items.every((v) => v !== null);
  return `
<main class="questionnaire">
  <h1>About the explanations</h1>
  <ol>${items}</ol>
  <label>Anything else? (optional)
    <textarea data-action="free-text" rows="4">${escapeHtml(state.questionnaire.freeText)}</textarea>
  </label>
  ${renderNotice(state)}
  <button type="button" data-action="submit-questionnaire"${complete && !state.busy ? "" : " disabled"}>Submit</button>
</main>`;
}

export function renderProbes(state: StoreState): string {
  const view = state.view!;
  const index = state.probeAnswers.length;
  const diet = state.probes?.[index];
  if (!diet) {
    return `<main class="probes"><p>Loading the quiz...</p>${renderNotice(state)}</main>`;
  }
  const rows = view.plants
    .map((p, i) => `<li>${escapeHtml(p.display_name)}: ${diet[i]} leaves</li>`)
    .join("\n");
  return `
<main class="probes">
  <h1>Quick quiz: what would the predictor say?</h1>
  <p class="probe-counter">Diet ${index + 1} of ${view.n_probes}</p>
  <ul class="probe-diet">${rows}</ul>
  ${renderNotice(state)}
  <button type="button" data-action="probe" data-label="IMPROVE"${state.busy ? " disabled" : ""}>IMPROVE</button>
  <button type="button" data-action="probe" data-label="WORSEN"${state.busy ? " disabled" : ""}>WORSEN</button>
</main>`;
}

export function renderCompleted(state: StoreState): string {
  return `
<main class="completed">
  <h1>All done. Thank you!</h1>
  <p>Your session is complete and your answers are saved.</p>
  ${renderNotice(state)}
</main>`;
}

export function renderApp(state: StoreState): string {
  const view = state.view;
  if (!view) {
    return `<main class="loading"><p>Connecting...</p>${renderNotice(state)}</main>`;
  }
  switch (view.phase) {
    case "AWAITING_DIET":
      return renderFeeding(state);
    case "SHOWING_OUTCOME":
      return renderOutcome(state);
    case "SHOWING_EXPLANATION":
      return renderExplanation(state);
    case "QUESTIONNAIRE":
      return renderQuestionnaire(state);
    case "PROBES":
      return renderProbes(state);
    case "COMPLETED":
      return renderCompleted(state);
  }
}
