/** Task page: instructions, editor, Run/Check loop, figures, feedback,
 * quizzes, and the progress view.
 *
 * The page performs no grading of its own. Verdicts, messages, printed
 * output, and figures are rendered exactly as the service returned
 * them; the only client-side state is the editor buffer, a dirty flag,
 * and which figure is selected.
 */

import { ApiError, Client } from "./api.js";
import type { CheckView, CourseView, ProgressView, RunView, TaskView } from "./api.js";
import { renderFigure } from "./charts.js";
import { createEditor, Editor } from "./editor.js";
import { renderProgress } from "./progress.js";

export interface TaskController {
  readonly root: HTMLElement;
  load(): Promise<void>;
  /** Execute the buffer; resolves null when a request is already in flight. */
  run(): Promise<RunView | null>;
  /** Grade the buffer; resolves null when a request is already in flight. */
  check(): Promise<CheckView | null>;
  getSource(): string;
  setSource(value: string): void;
  refreshProgress(): Promise<void>;
  readonly busy: boolean;
  readonly dirty: boolean;
  readonly selectedFigure: number;
  readonly lastRun: RunView | null;
  readonly lastCheck: CheckView | null;
}

const VERDICT_MARKS: Record<string, string> = {
  pass: "+",
  fail: "-",
  skipped: "·",
};

export function mountTask(
  root: HTMLElement,
  client: Client,
  student: string,
  labId: string,
  taskId: string,
): TaskController {
  const composite = `${labId}/${taskId}`;

  let course: CourseView | null = null;
  let editor: Editor | null = null;
  let busy = false;
  let dirty = false;
  let selectedFigure = 0;
  let lastRun: RunView | null = null;
  let lastCheck: CheckView | null = null;

  let badge: HTMLElement;
  let attempts: HTMLElement;
  let runButton: HTMLButtonElement;
  let checkButton: HTMLButtonElement;
  let banner: HTMLElement;
  let printed: HTMLElement;
  let figuresBox: HTMLElement;
  let feedback: HTMLElement;
  let progressBox: HTMLElement;

  function setBusy(value: boolean): void {
    busy = value;
    runButton.disabled = value;
    checkButton.disabled = value;
  }

  function showError(detail: string): void {
    root.replaceChildren();
    const page = document.createElement("div");
    page.className = "error-page";
    page.textContent = detail;
    root.appendChild(page);
  }

  function renderBanner(run: RunView): void {
    if (run.status === "ok" || run.error === null) {
      banner.hidden = true;
      banner.textContent = "";
      return;
    }
    banner.hidden = false;
    const where = run.error.line !== null ? ` (line ${run.error.line})` : "";
    banner.textContent = `${run.status}: ${run.error.message}${where}`;
  }

  function renderFigures(run: RunView): void {
    figuresBox.replaceChildren();
    selectedFigure = 0;
    run.figures.forEach((figure, index) => {
      const slot = document.createElement("div");
      slot.className = index === selectedFigure ? "figure-slot selected" : "figure-slot";
      slot.appendChild(renderFigure(figure));
      slot.addEventListener("click", () => {
        selectedFigure = index;
        for (const other of Array.from(figuresBox.children)) {
          other.classList.toggle("selected", other === slot);
        }
      });
      figuresBox.appendChild(slot);
    });
  }

  function renderFeedback(view: CheckView): void {
    feedback.replaceChildren();
    for (const check of view.checks) {
      const item = document.createElement("li");
      item.className = `check ${check.verdict}`;
      const mark = document.createElement("span");
      mark.className = "mark";
      mark.textContent = VERDICT_MARKS[check.verdict] ?? "?";
      const id = document.createElement("span");
      id.className = "check-id";
      id.textContent = check.id;
      const message = document.createElement("span");
      message.className = "msg";
      message.textContent = check.message;
      item.append(mark, id, message);
      feedback.appendChild(item);
    }
  }

  function renderStatus(completed: boolean, attemptCount: number): void {
    badge.hidden = !completed;
    attempts.textContent = attemptCount === 1 ? "1 attempt" : `${attemptCount} attempts`;
  }

  async function fetchProgress(): Promise<ProgressView | null> {
    try {
      return await client.progress(student);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) return null;
      throw error;
    }
  }

  async function refreshProgress(): Promise<void> {
    if (course === null) return;
    progressBox.replaceChildren(renderProgress(course, await fetchProgress()));
  }

  function renderQuizzes(task: TaskView): HTMLElement {
    const box = document.createElement("div");
    box.className = "quizzes";
    for (const quiz of task.quizzes) {
      const row = document.createElement("div");
      row.className = "quiz";
      const prompt = document.createElement("p");
      prompt.className = "quiz-prompt";
      prompt.textContent = quiz.prompt;
      row.appendChild(prompt);
      let readAnswer: () => unknown;
      if (quiz.kind === "choice") {
        const select = document.createElement("select");
        for (const choice of quiz.choices) {
          const option = document.createElement("option");
          option.value = choice;
          option.textContent = choice;
          select.appendChild(option);
        }
        row.appendChild(select);
        readAnswer = () => select.value;
      } else {
        const input = document.createElement("input");
        input.type = "text";
        row.appendChild(input);
        readAnswer = () => (quiz.kind === "numeric" ? Number(input.value) : input.value);
      }
      const submit = document.createElement("button");
      submit.textContent = "Answer";
      const verdict = document.createElement("span");
      verdict.className = "quiz-verdict";
      submit.addEventListener("click", () => {
        void client.quiz(student, quiz.id, readAnswer()).then(async (result) => {
          verdict.textContent = result.correct
            ? "correct"
            : result.note
              ? `incorrect (${result.note})`
              : "incorrect";
          verdict.classList.toggle("correct", result.correct);
          await refreshProgress();
        });
      });
      row.append(submit, verdict);
      box.appendChild(row);
    }
    return box;
  }

  function renderPage(task: TaskView): void {
    root.replaceChildren();

    const header = document.createElement("div");
    header.className = "task-header";
    const title = document.createElement("h2");
    title.textContent = `${task.title} (${composite})`;
    badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = "Completed";
    attempts = document.createElement("span");
    attempts.className = "attempts";
    header.append(title, badge, attempts);
    root.appendChild(header);

    const instructions = document.createElement("div");
    instructions.className = "instructions";
    instructions.textContent = task.instructions;
    root.appendChild(instructions);

    editor = createEditor(task.source, () => {
      dirty = true;
    });
    root.appendChild(editor.root);

    const buttons = document.createElement("div");
    buttons.className = "buttons";
    runButton = document.createElement("button");
    runButton.className = "run";
    runButton.textContent = "Run";
    runButton.addEventListener("click", () => void run());
    checkButton = document.createElement("button");
    checkButton.className = "check";
    checkButton.textContent = "Check";
    checkButton.addEventListener("click", () => void check());
    buttons.append(runButton, checkButton);
    root.appendChild(buttons);

    banner = document.createElement("div");
    banner.className = "banner";
    banner.hidden = true;
    root.appendChild(banner);

    printed = document.createElement("pre");
    printed.className = "printed";
    root.appendChild(printed);

    figuresBox = document.createElement("div");
    figuresBox.className = "figures";
    root.appendChild(figuresBox);

    feedback = document.createElement("ul");
    feedback.className = "feedback";
    root.appendChild(feedback);

    root.appendChild(renderQuizzes(task));

    progressBox = document.createElement("div");
    progressBox.className = "progress-box";
    root.appendChild(progressBox);

    renderStatus(task.completed, task.attempts);
  }

  async function load(): Promise<void> {
    try {
      course = await client.course();
      const task = await client.task(labId, taskId, student);
      renderPage(task);
      dirty = false;
      await refreshProgress();
    } catch (error) {
      if (error instanceof ApiError) {
        showError(`cannot load ${composite}: ${error.message}`);
        return;
      }
      throw error;
    }
  }

  async function run(): Promise<RunView | null> {
    if (busy || editor === null) return null;
    setBusy(true);
    try {
      const view = await client.run(student, composite, editor.getValue());
      lastRun = view;
      dirty = false;
      renderBanner(view);
      printed.textContent = view.printed.join("\n");
      renderFigures(view);
      return view;
    } finally {
      setBusy(false);
    }
  }

  async function check(): Promise<CheckView | null> {
    if (busy || editor === null) return null;
    setBusy(true);
    try {
      const view = await client.check(student, composite, editor.getValue());
      lastCheck = view;
      dirty = false;
      renderFeedback(view);
      renderStatus(view.completed, view.attempts);
      if (view.passed) await refreshProgress();
      return view;
    } finally {
      setBusy(false);
    }
  }

  return {
    root,
    load,
    run,
    check,
    getSource: () => editor?.getValue() ?? "",
    setSource(value: string) {
      editor?.setValue(value);
      dirty = true;
    },
    refreshProgress,
    get busy() {
      return busy;
    },
    get dirty() {
      return dirty;
    },
    get selectedFigure() {
      return selectedFigure;
    },
    get lastRun() {
      return lastRun;
    },
    get lastCheck() {
      return lastCheck;
    },
  };
}
