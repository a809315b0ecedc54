/** Plain-text code editor with keyword highlighting.
 *
 * A textarea stacked on a highlighted backdrop: the textarea stays the
 * source of truth, the backdrop only paints. The wrapper is resizable
 * so long scripts get more room.
 */

const KEYWORDS = new Set(["for", "if", "else", "end"]);

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function highlightCode(code: string): string {
  return escapeHtml(code).replace(/[A-Za-z_][A-Za-z0-9_]*/g, (word) =>
    KEYWORDS.has(word) ? `<span class="kw">${word}</span>` : word,
  );
}

function highlightLine(line: string): string {
  let out = "";
  let code = "";
  let i = 0;
  const flush = () => {
    out += highlightCode(code);
    code = "";
  };
  while (i < line.length) {
    const ch = line[i];
    if (ch === "'") {
      const close = line.indexOf("'", i + 1);
      const stop = close === -1 ? line.length : close + 1;
      flush();
      out += `<span class="str">${escapeHtml(line.slice(i, stop))}</span>`;
      i = stop;
    } else if (ch === "%") {
      flush();
      out += `<span class="comment">${escapeHtml(line.slice(i))}</span>`;
      i = line.length;
    } else {
      code += ch;
      i += 1;
    }
  }
  flush();
  return out;
}

/** Source text to highlighted HTML, line by line. */
export function highlight(source: string): string {
  return source.split("\n").map(highlightLine).join("\n");
}

export interface Editor {
  root: HTMLElement;
  textarea: HTMLTextAreaElement;
  getValue(): string;
  setValue(value: string): void;
}

export function createEditor(initial: string, onInput?: (value: string) => void): Editor {
  const root = document.createElement("div");
  root.className = "editor";
  root.style.resize = "vertical";
  root.style.overflow = "auto";

  const backdrop = document.createElement("pre");
  backdrop.className = "editor-highlight";
  backdrop.setAttribute("aria-hidden", "true");

  const textarea = document.createElement("textarea");
  textarea.className = "editor-input";
  textarea.spellcheck = false;

  const sync = () => {
    backdrop.innerHTML = highlight(textarea.value) + "\n";
  };
  textarea.addEventListener("input", () => {
    sync();
    onInput?.(textarea.value);
  });
  textarea.addEventListener("scroll", () => {
    backdrop.scrollTop = textarea.scrollTop;
    backdrop.scrollLeft = textarea.scrollLeft;
  });

  root.append(backdrop, textarea);
  textarea.value = initial;
  sync();

  return {
    root,
    textarea,
    getValue: () => textarea.value,
    setValue(value: string) {
      textarea.value = value;
      sync();
    },
  };
}
