// Lead dashboard: agreement history with gate verdicts, accept/revise
// actions wired to the cycle endpoints, and experiment grids rendered as
// per-classifier tables with per-cell confusion drill-down. Every number is
// fetched from the service; this module only formats.

import { Api, CycleView, ExperimentResult, MetricCell, RoundView } from "../api";
import { clear, el } from "../dom";

const SCHEME_ROWS = ["TO", "TF", "TFIDF", "BTO"];
const SCHEME_TITLES: Record<string, string> = { TO: "TO", TF: "TF", TFIDF: "TF-IDF", BTO: "BTO" };
const NGRAM_TITLES: Record<number, string> = { 1: "Unigram", 2: "Bigram", 3: "Tri-gram" };
const METRIC_KEYS = ["accuracy", "precision_pos", "precision_neg", "recall_pos", "recall_neg"] as const;
const METRIC_TITLES = ["Acc", "P.pos", "P.neg", "R.pos", "R.neg"];

function pct(value: number | null): string {
  return value === null ? "—" : (100 * value).toFixed(2);
}

function kappaBadge(verdict: string): string {
  return verdict === "proceed" ? "proceed" : "return to model";
}

export async function renderDashboardView(root: HTMLElement, api: Api, projectId: string): Promise<void> {
  const [cycle, rounds] = await Promise.all([api.cycle(projectId), api.rounds(projectId)]);
  clear(root);
  root.append(el("h2", { text: "Dashboard: project " + projectId }));
  root.append(renderCycle(cycle));
  root.append(renderRounds(rounds));

  const experimentBox = el("div", { class: "experiment-box" });
  root.append(experimentBox);
  renderExperimentControls(experimentBox, rounds);

  function renderCycle(view: CycleView): HTMLElement {
    const box = el(
      "div",
      { class: "cycle-box" },
      el("p", {
        class: "cycle-phase",
        "data-role": "cycle-phase",
        text: "phase: " + view.phase + " (round " + String(view.round_number) + ")",
      }),
    );
    const history = el("ol", { class: "kappa-history", "data-role": "kappa-history" });
    view.kappa_history.forEach((kappa, index) => {
      const verdict = view.gate_verdicts[index] ?? "proceed";
      history.append(
        el(
          "li",
          { "data-kappa": String(kappa), "data-verdict": verdict },
          el("span", { class: "kappa-value", text: String(kappa) }),
          el("span", { class: "gate-badge gate-" + verdict, text: kappaBadge(verdict) }),
        ),
      );
    });
    box.append(history);
    const actions = el("div", { class: "cycle-actions" });
    for (const event of ["accept", "revise"] as const) {
      const button = el("button", { "data-event": event, text: event });
      button.addEventListener("click", () => {
        void api
          .cycleEvent(projectId, event)
          .then(() => renderDashboardView(root, api, projectId))
          .catch((error) => {
            box.append(el("p", { class: "cycle-error", text: String(error.message ?? error) }));
          });
      });
      actions.append(button);
    }
    box.append(actions);
    return box;
  }

  function renderRounds(views: RoundView[]): HTMLElement {
    const box = el("div", { class: "rounds-box" }, el("h3", { text: "Rounds" }));
    const list = el("ul", { class: "round-list" });
    for (const view of views) {
      const item = el(
        "li",
        { "data-round-id": view.round_id },
        el("span", { text: view.round_id + " (" + view.context_policy + ") " }),
      );
      if (view.kappa !== null) {
        item.append(
          el("span", { class: "round-kappa", "data-role": "round-kappa", text: String(view.kappa) }),
        );
      }
      list.append(item);
    }
    box.append(list);
    return box;
  }

  function renderExperimentControls(box: HTMLElement, views: RoundView[]): void {
    clear(box);
    box.append(el("h3", { text: "Experiments" }));
    const select = el("select", { "data-role": "round-select" });
    for (const view of views) {
      select.append(el("option", { value: view.round_id, text: view.round_id }));
    }
    const seed = el("input", { type: "number", value: "7", "data-role": "experiment-seed" });
    const start = el("button", { class: "start-experiment", text: "Run grid" });
    const status = el("p", { "data-role": "experiment-status" });
    const gridBox = el("div", { class: "grid-box" });
    start.addEventListener("click", () => {
      const roundId = (select as HTMLSelectElement).value;
      void api
        .startExperiment(projectId, { round_id: roundId, seed: Number(seed.value) })
        .then(async (started) => {
          status.textContent = "running " + started.experiment_id;
          const result = await pollExperiment(started.experiment_id);
          status.textContent = started.experiment_id + ": " + result.status + (result.error ? ", " + result.error : "");
          if (result.status === "done") renderGrids(gridBox, result);
        })
        .catch((error) => {
          status.textContent = String(error.message ?? error);
        });
    });
    box.append(select, seed, start, status, gridBox);
  }

  async function pollExperiment(experimentId: string): Promise<ExperimentResult> {
    for (;;) {
      const result = await api.experiment(experimentId);
      if (result.status !== "running") return result;
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
  }
}

/** Render one paper-style table per classifier; exported for tests. */
export function renderGrids(box: HTMLElement, result: ExperimentResult): void {
  clear(box);
  const byClassifier = new Map<string, MetricCell[]>();
  for (const cell of result.cells) {
    const bucket = byClassifier.get(cell.classifier) ?? [];
    bucket.push(cell);
    byClassifier.set(cell.classifier, bucket);
  }
  for (const [classifier, cells] of byClassifier) {
    box.append(renderGridTable(classifier, cells));
  }
  const modal = el("div", { class: "cell-modal", "data-role": "cell-modal", hidden: "" });
  box.append(modal);
  box.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const cell = target.closest("td[data-tp]") as HTMLElement | null;
    if (!cell) return;
    modal.replaceChildren(
      el("h4", { text: "Confusion counts" }),
      el("p", { "data-role": "cell-tp", text: "TP " + (cell.getAttribute("data-tp") ?? "") }),
      el("p", { "data-role": "cell-fp", text: "FP " + (cell.getAttribute("data-fp") ?? "") }),
      el("p", { "data-role": "cell-fn", text: "FN " + (cell.getAttribute("data-fn") ?? "") }),
      el("p", { "data-role": "cell-tn", text: "TN " + (cell.getAttribute("data-tn") ?? "") }),
    );
    modal.removeAttribute("hidden");
  });
}

function renderGridTable(classifier: string, cells: MetricCell[]): HTMLElement {
  const index = new Map<string, MetricCell>();
  const stems = new Set<string>();
  const ngrams = new Set<number>();
  const schemes = new Set<string>();
  for (const cell of cells) {
    index.set(cell.stem + "|" + cell.scheme + "|" + String(cell.ngram), cell);
    stems.add(cell.stem);
    ngrams.add(cell.ngram);
    schemes.add(cell.scheme);
  }
  const stemOrder = ["no", "yes"].filter((s) => stems.has(s));
  const ngramOrder = [1, 2, 3].filter((n) => ngrams.has(n));
  const schemeOrder = SCHEME_ROWS.filter((s) => schemes.has(s));

  const table = el("table", { class: "grid-table", "data-classifier": classifier });
  const caption = el("caption", { text: classifier.toUpperCase() + " classification" });
  table.append(caption);
  const headRow1 = el("tr", {}, el("th", { text: "Stem" }), el("th", { text: "Vector" }));
  const headRow2 = el("tr", {}, el("th", {}), el("th", {}));
  for (const ngram of ngramOrder) {
    headRow1.append(el("th", { colspan: String(METRIC_TITLES.length), text: NGRAM_TITLES[ngram] ?? String(ngram) }));
    for (const title of METRIC_TITLES) headRow2.append(el("th", { text: title }));
  }
  table.append(headRow1, headRow2);
  for (const stem of stemOrder) {
    for (const scheme of schemeOrder) {
      const row = el(
        "tr",
        {},
        el("td", { text: stem }),
        el("td", { text: SCHEME_TITLES[scheme] ?? scheme }),
      );
      for (const ngram of ngramOrder) {
        const cell = index.get(stem + "|" + scheme + "|" + String(ngram));
        for (const key of METRIC_KEYS) {
          const value = cell ? cell[key] : null;
          const attrs: Record<string, string> = {
            class: "metric-cell",
            "data-metric": key,
            "data-value": value === null ? "" : String(value),
            text: pct(value),
          };
          if (cell && cell.tp !== null) {
            attrs["data-tp"] = String(cell.tp);
            attrs["data-fp"] = String(cell.fp);
            attrs["data-fn"] = String(cell.fn);
            attrs["data-tn"] = String(cell.tn);
          }
          row.append(el("td", attrs));
        }
      }
      table.append(row);
    }
  }
  return table;
}
