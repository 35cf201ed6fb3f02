// Typed REST client for the workbench service. The UI never computes kappa,
// metrics or gold balancing itself; every number it shows comes from these
// endpoints.

export type Label = "positive" | "negative" | "neutral";
export type Decision = Label | "no_consensus";
export type ContextPolicy = "with_article" | "comment_only";

export interface ArticleContext {
  article_id: string;
  source: string;
  topic: string;
  title: string;
  url?: string | null;
}

export interface NextComment {
  comment_id?: string;
  text?: string;
  remaining: number;
  done?: boolean;
  article?: ArticleContext;
}

export interface RoundView {
  round_id: string;
  project_id: string;
  n_comments: number;
  annotators: string[];
  context_policy: ContextPolicy;
  guidelines_version: number;
  guidelines_text: string;
  closed: boolean;
  progress: Record<string, { done: number; pending: number; total: number }>;
  kappa: number | null;
}

export interface AnnotationResult {
  round_id: string;
  annotator_id: string;
  comment_id: string;
  label: Label;
  pending: number;
}

export interface IaaResult {
  kappa: number;
  pr_a: number;
  pr_e: number;
  n_items: number;
  labels: string[];
  contingency: number[][];
}

export interface Disagreement {
  comment_id: string;
  text: string;
  label_a1: Label;
  label_a2: Label;
}

export interface AdjudicationResult {
  comment_id: string;
  gold_label: Label;
}

export interface GoldResult {
  round_id: string;
  seed: number;
  n_positive: number;
  n_negative: number;
  items: { comment_id: string; text: string; label: "positive" | "negative" }[];
}

export interface MetricCell {
  stem: "yes" | "no";
  scheme: string;
  ngram: number;
  classifier: string;
  accuracy: number | null;
  precision_pos: number | null;
  precision_neg: number | null;
  recall_pos: number | null;
  recall_neg: number | null;
  tp: number | null;
  fp: number | null;
  fn: number | null;
  tn: number | null;
}

export interface ExperimentResult {
  experiment_id: string;
  status: "running" | "done" | "failed";
  error: string | null;
  cells: MetricCell[];
}

export interface CycleView {
  project_id: string;
  phase: string;
  round_number: number;
  current_iaa: number | null;
  previous_iaa: number | null;
  kappa_history: number[];
  gate_verdicts: string[];
}

export interface ExperimentRequest {
  round_id: string;
  seed: number;
  stem?: "both" | "yes" | "no";
  schemes?: string[];
  ngrams?: number[];
  classifiers?: string[];
  k_folds?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: unknown = {},
  ) {
    super(message);
  }
}

function requestId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID();
  }
  return "req-" + Math.random().toString(36).slice(2) + Date.now().toString(36);
}

/** Interface the views depend on; tests may substitute a fake. */
export interface Api {
  round(roundId: string): Promise<RoundView>;
  rounds(projectId: string): Promise<RoundView[]>;
  nextComment(roundId: string, annotator: string): Promise<NextComment>;
  annotate(roundId: string, annotator: string, commentId: string, label: Label): Promise<AnnotationResult>;
  iaa(roundId: string): Promise<IaaResult>;
  disagreements(roundId: string): Promise<Disagreement[]>;
  adjudicate(roundId: string, commentId: string, decision: Decision): Promise<AdjudicationResult>;
  buildGold(roundId: string, seed: number): Promise<GoldResult>;
  startExperiment(projectId: string, request: ExperimentRequest): Promise<{ experiment_id: string; status: string }>;
  experiment(experimentId: string): Promise<ExperimentResult>;
  cycle(projectId: string): Promise<CycleView>;
  cycleEvent(projectId: string, event: string, iaa?: number): Promise<CycleView>;
}

export class WorkbenchClient implements Api {
  constructor(
    private baseUrl: string,
    private authToken?: string,
    private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.authToken) headers["X-Auth-Token"] = this.authToken;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const err = payload ?? {};
      throw new ApiError(response.status, err.code ?? "http_error", err.message ?? response.statusText, err.details);
    }
    return payload as T;
  }

  createProject(name: string): Promise<{ project_id: string; name: string }> {
    return this.request("POST", "/projects", { name, request_id: requestId() });
  }

  ingest(projectId: string, records: unknown[]): Promise<{ added: number; duplicates_dropped: number; rejected_empty: number }> {
    return this.request("POST", `/projects/${projectId}/ingest`, { records, request_id: requestId() });
  }

  createRound(
    projectId: string,
    guidelines: { version: number; text: string; context_policy: ContextPolicy },
    annotators: string[] = ["A1", "A2"],
  ): Promise<RoundView> {
    return this.request("POST", `/projects/${projectId}/rounds`, {
      guidelines,
      annotators,
      request_id: requestId(),
    });
  }

  round(roundId: string): Promise<RoundView> {
    return this.request("GET", `/rounds/${roundId}`);
  }

  rounds(projectId: string): Promise<RoundView[]> {
    return this.request("GET", `/projects/${projectId}/rounds`);
  }

  nextComment(roundId: string, annotator: string): Promise<NextComment> {
    return this.request("GET", `/rounds/${roundId}/next?annotator=${encodeURIComponent(annotator)}`);
  }

  annotate(roundId: string, annotator: string, commentId: string, label: Label): Promise<AnnotationResult> {
    return this.request("POST", `/rounds/${roundId}/annotations`, {
      annotator_id: annotator,
      comment_id: commentId,
      label,
      request_id: requestId(),
    });
  }

  iaa(roundId: string): Promise<IaaResult> {
    return this.request("GET", `/rounds/${roundId}/iaa`);
  }

  disagreements(roundId: string): Promise<Disagreement[]> {
    return this.request("GET", `/rounds/${roundId}/disagreements`);
  }

  adjudicate(roundId: string, commentId: string, decision: Decision): Promise<AdjudicationResult> {
    return this.request("POST", `/rounds/${roundId}/adjudications`, {
      comment_id: commentId,
      decision,
      request_id: requestId(),
    });
  }

  buildGold(roundId: string, seed: number): Promise<GoldResult> {
    return this.request("POST", `/rounds/${roundId}/gold`, { seed, request_id: requestId() });
  }

  startExperiment(projectId: string, request: ExperimentRequest): Promise<{ experiment_id: string; status: string }> {
    return this.request("POST", `/projects/${projectId}/experiments`, {
      ...request,
      request_id: requestId(),
    });
  }

  experiment(experimentId: string): Promise<ExperimentResult> {
    return this.request("GET", `/experiments/${experimentId}`);
  }

  cycle(projectId: string): Promise<CycleView> {
    return this.request("GET", `/projects/${projectId}/cycle`);
  }

  cycleEvent(projectId: string, event: string, iaa?: number): Promise<CycleView> {
    return this.request("POST", `/projects/${projectId}/cycle/events`, {
      event,
      iaa: iaa ?? null,
      request_id: requestId(),
    });
  }
}
