// Disagreement resolution: both labels side by side, one click per decision
// (no-consensus stores neutral on the server), a running tally, and the
// build-gold call to action once nothing is left to resolve.

import { Api, Decision, Disagreement, Label } from "../api";
import { clear, el } from "../dom";

const DECISIONS: { decision: Decision; caption: string }[] = [
  { decision: "positive", caption: "Positive" },
  { decision: "negative", caption: "Negative" },
  { decision: "neutral", caption: "Neutral" },
  { decision: "no_consensus", caption: "No consensus" },
];

export async function renderAdjudicationView(
  root: HTMLElement,
  api: Api,
  roundId: string,
): Promise<void> {
  const items = await api.disagreements(roundId);
  const tally: Record<Label, number> = { positive: 0, negative: 0, neutral: 0 };
  let resolved = 0;

  clear(root);
  root.append(el("h2", { text: "Adjudication: " + String(items.length) + " disagreements" }));
  const tallyLine = el("p", { class: "tally", "data-role": "tally", text: tallyText() });
  root.append(tallyLine);
  const list = el("div", { class: "disagreement-list" });
  root.append(list);
  const goldBox = el("div", { class: "gold-box" });
  root.append(goldBox);

  function tallyText(): string {
    return (
      "resolved " + String(resolved) + "/" + String(items.length) +
      "; positive " + String(tally.positive) +
      ", negative " + String(tally.negative) +
      ", neutral " + String(tally.neutral)
    );
  }

  function goldCallToAction(): void {
    clear(goldBox);
    const seedInput = el("input", { type: "number", value: "0", "data-role": "gold-seed" });
    const button = el("button", { class: "build-gold", text: "Build gold standard" });
    const outcome = el("p", { "data-role": "gold-outcome" });
    button.addEventListener("click", () => {
      void api.buildGold(roundId, Number(seedInput.value)).then((gold) => {
        outcome.textContent =
          "gold standard: " + String(gold.n_positive) + " positive + " + String(gold.n_negative) + " negative";
        outcome.setAttribute("data-n-positive", String(gold.n_positive));
        outcome.setAttribute("data-n-negative", String(gold.n_negative));
      });
    });
    goldBox.append(el("h3", { text: "All disagreements resolved" }), seedInput, button, outcome);
  }

  function card(item: Disagreement): HTMLElement {
    const box = el(
      "div",
      { class: "disagreement-card", "data-comment-id": item.comment_id },
      el("p", { class: "comment-text", dir: "auto", text: item.text }),
      el(
        "div",
        { class: "labels-side-by-side" },
        el("span", { class: "label-a1", text: "A1: " + item.label_a1 }),
        el("span", { class: "label-a2", text: "A2: " + item.label_a2 }),
      ),
    );
    const actions = el("div", { class: "decision-actions" });
    for (const entry of DECISIONS) {
      const button = el("button", { "data-decision": entry.decision, text: entry.caption });
      button.addEventListener("click", () => {
        void api.adjudicate(roundId, item.comment_id, entry.decision).then((result) => {
          box.setAttribute("data-gold-label", result.gold_label);
          box.classList.add("resolved");
          actions.replaceChildren(el("span", { class: "gold-label", text: "gold: " + result.gold_label }));
          tally[result.gold_label] += 1;
          resolved += 1;
          tallyLine.textContent = tallyText();
          if (resolved === items.length) goldCallToAction();
        });
      });
      actions.append(button);
    }
    box.append(actions);
    return box;
  }

  if (items.length === 0) {
    goldCallToAction();
    return;
  }
  for (const item of items) {
    list.append(card(item));
  }
}
