/** Typed client for the lab service's /api/v1 endpoints.
 *
 * The client is a thin pipe: it never interprets grading results beyond
 * parsing JSON, so everything the UI shows comes verbatim from the
 * service.
 */

export interface CurveData {
  x: number[];
  y: number[];
  style: string | null;
}

export interface FigureData {
  number: number;
  title: string | null;
  xlabel: string | null;
  ylabel: string | null;
  curves: CurveData[];
}

export interface RunError {
  message: string;
  line: number | null;
  col: number | null;
}

export interface RunView {
  status: string;
  printed: string[];
  figures: FigureData[];
  workspace: Record<string, string>;
  error: RunError | null;
  seed: number;
}

export interface CheckItem {
  id: string;
  verdict: string;
  message: string;
}

export interface CheckView {
  passed: boolean;
  status: string;
  checks: CheckItem[];
  completed: boolean;
  attempts: number;
}

export interface QuizView {
  id: string;
  prompt: string;
  kind: string;
  choices: string[];
}

export interface QuizResult {
  correct: boolean;
  note?: string;
}

export interface TaskView {
  lab: string;
  task: string;
  title: string;
  kind: string;
  instructions: string;
  source: string;
  starter: string;
  completed: boolean;
  attempts: number;
  quizzes: QuizView[];
}

export interface TaskSummary {
  id: string;
  title: string;
  kind: string;
  quiz: string[];
}

export interface LabSummary {
  id: string;
  title: string;
  tasks: TaskSummary[];
}

export interface CourseView {
  title: string;
  weights: Record<string, number>;
  pass_threshold: number;
  labs: LabSummary[];
  quizzes: QuizView[];
}

export interface ProgressView {
  student: string;
  completed: Record<string, boolean>;
  quizzes: Record<string, boolean>;
  quiz_fraction: number;
  lab_fraction: number;
  exam_fraction: number;
  cumulative: number;
  eligible: boolean;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.base}/api/v1${path}`, init);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const body = (await resp.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  course(): Promise<CourseView> {
    return this.request<CourseView>("/course");
  }

  task(lab: string, task: string, student?: string): Promise<TaskView> {
    const query = student ? `?student=${encodeURIComponent(student)}` : "";
    return this.request<TaskView>(`/labs/${lab}/tasks/${task}${query}`);
  }

  run(student: string, task: string, source: string, seed?: number): Promise<RunView> {
    const payload: Record<string, unknown> = { student, task, source };
    if (seed !== undefined) payload["seed"] = seed;
    return this.post<RunView>("/run", payload);
  }

  check(
    student: string,
    task: string,
    source: string,
    seed?: number,
    referenceSeed?: number,
  ): Promise<CheckView> {
    const payload: Record<string, unknown> = { student, task, source };
    if (seed !== undefined) payload["seed"] = seed;
    if (referenceSeed !== undefined) payload["reference_seed"] = referenceSeed;
    return this.post<CheckView>("/check", payload);
  }

  quiz(student: string, quizId: string, answer: unknown): Promise<QuizResult> {
    return this.post<QuizResult>(`/quiz/${quizId}`, { student, answer });
  }

  progress(student: string): Promise<ProgressView> {
    return this.request<ProgressView>(`/progress/${encodeURIComponent(student)}`);
  }
}
