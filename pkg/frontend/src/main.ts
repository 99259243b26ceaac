import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { Store } from "./store.js";
import type { Label } from "./types.js";

// Browser bootstrap. All decisions live in Store/render; this file only
// routes DOM events to store methods and swaps the rendered HTML in.

const api = new ApiClient("");
const store = new Store(api, () => performance.now());
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

store.subscribe(() => {
  root.innerHTML = renderApp(store.state);
});

function actionOf(target: EventTarget | null): HTMLElement | null {
  if (!(target instanceof HTMLElement)) return null;
  return target.closest("[data-action]");
}

root.addEventListener("click", (event) => {
  const el = actionOf(event.target);
  if (!el) return;
  switch (el.dataset.action) {
    case "feed":
      void store.feed();
      break;
    case "ack":
      void store.acknowledge();
      break;
    case "toggle-feedback":
      store.toggleFeedbackPanel();
      break;
    case "whatif":
      void store.requestWhatif();
      break;
    case "apply-guidance":
      store.applyGuidance();
      break;
    case "probe":
      void store.answerProbe(el.dataset.label as Label);
      break;
    case "submit-questionnaire":
      void store.submitQuestionnaire();
      break;
  }
});

root.addEventListener("change", (event) => {
  const el = actionOf(event.target);
  if (!el || !(el instanceof HTMLInputElement || el instanceof HTMLSelectElement || el instanceof HTMLTextAreaElement)) {
    return;
  }
  const plant = Number(el.dataset.plant ?? -1);
  switch (el.dataset.action) {
    case "leaf":
      store.setLeaf(plant, Number(el.value));
      break;
    case "mutable":
      store.togglePlantMutable(plant);
      break;
    case "range-lo":
    case "range-hi": {
      const row = el.closest("tr");
      if (!row) break;
      const lo = row.querySelector<HTMLSelectElement>('[data-action="range-lo"]');
      const hi = row.querySelector<HTMLSelectElement>('[data-action="range-hi"]');
      if (lo && hi) store.setFeedbackRange(plant, Number(lo.value), Number(hi.value));
      break;
    }
    case "fb-budget":
      store.editFeedback({ budget: Number(el.value) });
      break;
    case "fb-max-changes":
      store.editFeedback({ maxChanges: Number(el.value) });
      break;
    case "fb-attach":
      store.editFeedback({ attachToNextRound: (el as HTMLInputElement).checked });
      break;
    case "rate":
      store.setQuestionnaireItem(Number(el.dataset.item), Number(el.value));
      break;
    case "free-text":
      store.setFreeText(el.value);
      break;
  }
});

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const existing = params.get("session");
  if (existing) {
    await store.join(existing);
  } else {
    await store.create({});
    params.set("session", store.id);
    window.history.replaceState(null, "", `${window.location.pathname}?${params}`);
  }
}

boot().catch((err) => {
  root.innerHTML = `<main class="loading"><p class="notice" role="alert">Could not reach the game server: ${String(err)}</p></main>`;
});
