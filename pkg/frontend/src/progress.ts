/** Weighted score bar and per-lab completion grid. */

import type { CourseView, ProgressView } from "./api.js";

function segment(name: string, weight: number, fraction: number): HTMLElement {
  const part = document.createElement("div");
  part.className = `score-segment score-${name}`;
  part.style.width = `${(weight * fraction * 100).toFixed(4)}%`;
  part.title = `${name}: ${(fraction * 100).toFixed(1)}% of its ${(weight * 100).toFixed(0)}% share`;
  return part;
}

export function renderProgress(course: CourseView, record: ProgressView | null): HTMLElement {
  const root = document.createElement("div");
  root.className = "progress";

  const bar = document.createElement("div");
  bar.className = "score-bar";
  bar.append(
    segment("quiz", course.weights["quiz"] ?? 0, record?.quiz_fraction ?? 0),
    segment("lab", course.weights["lab"] ?? 0, record?.lab_fraction ?? 0),
    segment("exam", course.weights["exam"] ?? 0, record?.exam_fraction ?? 0),
  );
  root.appendChild(bar);

  const text = document.createElement("span");
  text.className = "score-text";
  const cumulative = record?.cumulative ?? 0;
  const eligible = record?.eligible ?? false;
  text.textContent = `${(cumulative * 100).toFixed(1)}%`;
  if (eligible) {
    text.textContent += " - exam eligible";
    text.classList.add("eligible");
  }
  root.appendChild(text);

  const grid = document.createElement("div");
  grid.className = "lab-grid";
  for (const lab of course.labs) {
    const row = document.createElement("div");
    row.className = "lab-row";
    const name = document.createElement("span");
    name.className = "lab-name";
    name.textContent = lab.title;
    row.appendChild(name);
    for (const task of lab.tasks) {
      const cell = document.createElement("span");
      const done = record?.completed[`${lab.id}/${task.id}`] ?? false;
      cell.className = `cell ${done ? "done" : "todo"}`;
      cell.title = `${lab.id}/${task.id}: ${task.title}`;
      row.appendChild(cell);
    }
    grid.appendChild(row);
  }
  root.appendChild(grid);

  return root;
}
