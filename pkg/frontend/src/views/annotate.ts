// Labeling screen: one comment at a time, three label buttons with keyboard
// shortcuts (1/2/3), guidelines one click away. The article context block is
// rendered only when the server sends one; in comment_only rounds the
// payload has no article at all, so nothing can leak.

import { Api, Label, NextComment, RoundView } from "../api";
import { clear, el } from "../dom";

const LABELS: { label: Label; caption: string; key: string }[] = [
  { label: "positive", caption: "Positive (1)", key: "1" },
  { label: "negative", caption: "Negative (2)", key: "2" },
  { label: "neutral", caption: "Neutral (3)", key: "3" },
];

export interface AnnotateController {
  refresh(): Promise<void>;
  dispose(): void;
}

export async function renderAnnotateView(
  root: HTMLElement,
  api: Api,
  roundId: string,
  annotator: string,
): Promise<AnnotateController> {
  let round = await api.round(roundId);
  let keyHandler: ((event: KeyboardEvent) => void) | null = null;

  async function submit(commentId: string, label: Label): Promise<void> {
    await api.annotate(roundId, annotator, commentId, label);
    round = await api.round(roundId);
    await refresh();
  }

  function guidelinesPanel(view: RoundView): HTMLElement {
    const panel = el(
      "div",
      { class: "guidelines-panel", "data-role": "guidelines", hidden: "" },
      el("h3", { text: "Guidelines (v" + view.guidelines_version + ")" }),
      el("p", { text: view.guidelines_text }),
    );
    return panel;
  }

  function card(next: NextComment): HTMLElement {
    const box = el("div", { class: "annotate-card" });
    if (next.article) {
      box.append(
        el(
          "div",
          { class: "article-context", "data-role": "article" },
          el("span", { class: "article-topic", text: next.article.topic }),
          el("h2", { class: "article-title", text: next.article.title }),
        ),
      );
    }
    box.append(
      el("p", { class: "comment-text", dir: "auto", text: next.text ?? "" }),
      el("p", { class: "remaining", text: String(next.remaining) + " items left" }),
    );
    const actions = el("div", { class: "label-actions" });
    for (const item of LABELS) {
      const button = el("button", {
        class: "label-button label-" + item.label,
        "data-label": item.label,
        text: item.caption,
      });
      button.addEventListener("click", () => void submit(next.comment_id!, item.label));
      actions.append(button);
    }
    box.append(actions);
    return box;
  }

  function completion(view: RoundView): HTMLElement {
    const mine = view.progress[annotator];
    return el(
      "div",
      { class: "completion", "data-role": "completion" },
      el("h2", { text: "All items labeled" }),
      el("p", {
        "data-role": "personal-count",
        text: annotator + ": " + String(mine ? mine.done : 0) + " of " + String(view.n_comments) + " comments",
      }),
    );
  }

  async function refresh(): Promise<void> {
    const next = await api.nextComment(roundId, annotator);
    clear(root);
    const header = el(
      "div",
      { class: "annotate-header" },
      el("span", { class: "round-id", text: round.round_id }),
      el("span", { class: "annotator-id", text: annotator }),
    );
    const toggle = el("button", { class: "guidelines-toggle", text: "Guidelines" });
    const panel = guidelinesPanel(round);
    toggle.addEventListener("click", () => {
      if (panel.hasAttribute("hidden")) panel.removeAttribute("hidden");
      else panel.setAttribute("hidden", "");
    });
    header.append(toggle);
    root.append(header, panel);
    if (keyHandler) {
      root.ownerDocument.removeEventListener("keydown", keyHandler);
      keyHandler = null;
    }
    if (next.done) {
      root.append(completion(round));
      return;
    }
    root.append(card(next));
    keyHandler = (event: KeyboardEvent) => {
      const match = LABELS.find((item) => item.key === event.key);
      if (match) void submit(next.comment_id!, match.label);
    };
    root.ownerDocument.addEventListener("keydown", keyHandler);
  }

  await refresh();
  return {
    refresh,
    dispose() {
      if (keyHandler) root.ownerDocument.removeEventListener("keydown", keyHandler);
    },
  };
}
