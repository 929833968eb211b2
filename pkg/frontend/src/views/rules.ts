import { ApiClient, ApiError } from "../api";
import type { ErrorLocation, Rule } from "../types";

export interface RulesDeps {
  api: ApiClient;
  /** Called after any change that can affect derived views (violations). */
  onRulesChanged: () => void;
  getDraft: () => string;
  setDraft: (text: string) => void;
}

/** Inline parser diagnostic: the offending source line with a caret placed
 * under the reported column, plus the server's message. */
export function renderDiagnostic(
  draft: string,
  location: ErrorLocation,
  message: string,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "diagnostic";
  box.dataset.line = String(location.line);
  box.dataset.column = String(location.column);

  const lines = draft.split("\n");
  const excerpt = document.createElement("pre");
  excerpt.className = "diagnostic-excerpt";
  const source = lines[location.line - 1] ?? "";
  const caret = " ".repeat(Math.max(0, location.column - 1)) + "^";
  excerpt.textContent = `${source}\n${caret}`;
  box.appendChild(excerpt);

  const note = document.createElement("span");
  note.className = "diagnostic-message";
  note.textContent = message;
  box.appendChild(note);
  return box;
}

function severityBadge(severity: string): HTMLElement {
  const badge = document.createElement("span");
  badge.className = `severity-badge severity-${severity}`;
  badge.textContent = severity;
  return badge;
}

function retriableBanner(message: string, retry: () => void): HTMLElement {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  const note = document.createElement("span");
  note.textContent = message;
  banner.appendChild(note);
  const button = document.createElement("button");
  button.className = "retry";
  button.textContent = "retry";
  button.addEventListener("click", retry);
  banner.appendChild(button);
  return banner;
}

export function mountRulesView(root: HTMLElement, rules: Rule[], deps: RulesDeps): void {
  root.textContent = "";

  const list = document.createElement("ul");
  list.className = "rule-list";
  if (rules.length === 0) {
    const empty = document.createElement("li");
    empty.className = "empty-state";
    empty.textContent = "No rules yet. Author one below.";
    list.appendChild(empty);
  }
  for (const rule of rules) {
    const row = document.createElement("li");
    row.className = "rule-row";
    row.dataset.ruleId = rule.rule_id;

    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.className = "rule-enabled";
    toggle.checked = rule.enabled;
    toggle.addEventListener("change", () => {
      void save(() => deps.api.updateRule(rule.rule_id, { enabled: toggle.checked }));
    });
    row.appendChild(toggle);

    row.appendChild(severityBadge(rule.severity));

    const name = document.createElement("span");
    name.className = "rule-name";
    name.textContent = rule.name;
    row.appendChild(name);

    const text = document.createElement("code");
    text.className = "rule-text";
    text.textContent = rule.pretty;
    row.appendChild(text);

    const edit = document.createElement("button");
    edit.className = "rule-edit";
    edit.textContent = "edit";
    edit.addEventListener("click", () => {
      editingId = rule.rule_id;
      nameInput.value = rule.name;
      textArea.value = rule.text;
      deps.setDraft(rule.text);
    });
    row.appendChild(edit);

    const remove = document.createElement("button");
    remove.className = "rule-delete";
    remove.textContent = "delete";
    remove.addEventListener("click", () => {
      void save(async () => {
        await deps.api.deleteRule(rule.rule_id);
      });
    });
    row.appendChild(remove);

    list.appendChild(row);
  }
  root.appendChild(list);

  const editor = document.createElement("form");
  editor.className = "rule-editor";
  editor.addEventListener("submit", (event) => event.preventDefault());

  const nameInput = document.createElement("input");
  nameInput.className = "rule-name-input";
  nameInput.placeholder = "rule name";
  editor.appendChild(nameInput);

  const textArea = document.createElement("textarea");
  textArea.className = "rule-draft";
  textArea.placeholder = "avg_speed > 50 AND hour_of_day >= 22 -> danger";
  textArea.value = deps.getDraft();
  textArea.addEventListener("input", () => deps.setDraft(textArea.value));
  editor.appendChild(textArea);

  const feedback = document.createElement("div");
  feedback.className = "editor-feedback";

  let editingId: string | null = null;

  async function save(action: () => Promise<unknown>): Promise<void> {
    feedback.textContent = "";
    try {
      await action();
    } catch (error) {
      if (error instanceof ApiError && error.location) {
        feedback.appendChild(renderDiagnostic(textArea.value, error.location, error.message));
      } else if (error instanceof ApiError) {
        feedback.appendChild(retriableBanner(error.message, () => void save(action)));
      } else {
        // network failure: keep the draft, offer a retry
        feedback.appendChild(retriableBanner("request failed", () => void save(action)));
      }
      return;
    }
    deps.onRulesChanged();
  }

  const submit = document.createElement("button");
  submit.className = "rule-save";
  submit.textContent = "save rule";
  submit.addEventListener("click", () => {
    const body = { name: nameInput.value || "untitled", text: textArea.value };
    void save(async () => {
      const saved = editingId
        ? await deps.api.updateRule(editingId, body)
        : await deps.api.createRule(body);
      editingId = null;
      textArea.value = saved.pretty;   // canonical form replaces the draft
      deps.setDraft(saved.pretty);
    });
  });
  editor.appendChild(submit);
  editor.appendChild(feedback);
  root.appendChild(editor);
}
