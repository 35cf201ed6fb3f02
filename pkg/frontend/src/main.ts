// Hash-routed entry point:
//   #/annotate/<roundId>/<annotatorId>
//   #/adjudicate/<roundId>
//   #/dashboard/<projectId>
// The service base URL comes from ?api=... or defaults to the page origin.

import { WorkbenchClient } from "./api";
import { renderAnnotateView } from "./views/annotate";
import { renderAdjudicationView } from "./views/adjudicate";
import { renderDashboardView } from "./views/dashboard";
import { clear, el } from "./dom";

function baseUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("api") ?? window.location.origin;
}

function authToken(): string | undefined {
  const params = new URLSearchParams(window.location.search);
  return params.get("token") ?? undefined;
}

async function route(root: HTMLElement): Promise<void> {
  const client = new WorkbenchClient(baseUrl(), authToken());
  const parts = window.location.hash.replace(/^#\/?/, "").split("/").filter(Boolean);
  clear(root);
  try {
    if (parts[0] === "annotate" && parts[1] && parts[2]) {
      await renderAnnotateView(root, client, parts[1], parts[2]);
    } else if (parts[0] === "adjudicate" && parts[1]) {
      await renderAdjudicationView(root, client, parts[1]);
    } else if (parts[0] === "dashboard" && parts[1]) {
      await renderDashboardView(root, client, parts[1]);
    } else {
      root.append(
        el("h2", { text: "commentlab" }),
        el("p", { text: "Routes:" }),
        el(
          "ul",
          {},
          el("li", { text: "#/annotate/<roundId>/<annotatorId>" }),
          el("li", { text: "#/adjudicate/<roundId>" }),
          el("li", { text: "#/dashboard/<projectId>" }),
        ),
      );
    }
  } catch (error) {
    root.append(el("p", { class: "error", text: String((error as Error).message ?? error) }));
  }
}

export function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  void route(root);
  window.addEventListener("hashchange", () => void route(root));
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
