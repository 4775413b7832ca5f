/** Application shell: topic browser, paragraph annotator, question editor.
 * All rendering is plain DOM; state lives in AnnotationSession and the
 * progress counters refresh by polling. */

import { AnnotationApi, ApiValidationError, NetworkError, RetryQueue } from "./api.js";
import { renderParagraph, selectionToSpan } from "./dom.js";
import type { HighlightSpan } from "./highlight.js";
import { scalarLength } from "./offsets.js";
import { AnnotationSession } from "./state.js";
import { proposeQuestion, validateQuestionText } from "./templates.js";
import type { ParagraphSummary, TopicSummary } from "./types.js";

const POLL_INTERVAL_MS = 5000;

export class App {
  readonly session: AnnotationSession;
  private readonly retryQueue: RetryQueue;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly doc: Document,
    private readonly root: HTMLElement,
    private readonly api: AnnotationApi,
  ) {
    this.session = new AnnotationSession(api);
    this.retryQueue = new RetryQueue((pending) => this.renderStatus(
      pending > 0 ? `${pending} write(s) queued for retry` : "",
    ));
  }

  async start(): Promise<void> {
    this.root.innerHTML = "";
    this.root.appendChild(this.el("div", "status", ""));
    this.root.appendChild(this.el("div", "topics", "Loading topics..."));
    this.root.appendChild(this.el("div", "paragraphs", ""));
    this.root.appendChild(this.el("div", "workbench", ""));
    await this.refreshTopics();
    this.pollTimer = setInterval(() => {
      void this.refreshTopics();
      void this.retryQueue.flush().catch(() => {});
    }, POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
  }

  private el(tag: string, cls: string, text: string): HTMLElement {
    const node = this.doc.createElement(tag);
    node.className = cls;
    node.textContent = text;
    return node;
  }

  private panel(cls: string): HTMLElement {
    return this.root.querySelector(`.${cls}`) as HTMLElement;
  }

  private renderStatus(text: string): void {
    const status = this.panel("status");
    if (status) status.textContent = text;
  }

  async refreshTopics(): Promise<void> {
    let topics: TopicSummary[];
    try {
      topics = await this.api.topics();
    } catch (err) {
      if (err instanceof NetworkError) {
        this.renderStatus("service unreachable; retrying...");
        return; // keep the current view, no data loss
      }
      throw err;
    }
    const panel = this.panel("topics");
    panel.innerHTML = "";
    panel.appendChild(this.el("h2", "", "Topics"));
    for (const topic of topics) {
      const row = this.el("div", "topic-row", "");
      const label = this.el(
        "button", "topic",
        `topic ${topic.topic_id} — ${topic.questions} questions / ${topic.answers} answers`,
      );
      label.addEventListener("click", () => void this.openTopic(topic));
      row.appendChild(label);
      for (const aspect of topic.aspects) {
        row.appendChild(this.el("span", "aspect-chip", aspect));
      }
      panel.appendChild(row);
    }
  }

  async openTopic(topic: TopicSummary): Promise<void> {
    const paragraphs = await this.api.paragraphs(topic.topic_id);
    const panel = this.panel("paragraphs");
    panel.innerHTML = "";
    panel.appendChild(this.el("h2", "", `Paragraphs of topic ${topic.topic_id}`));
    for (const para of paragraphs) {
      const button = this.el(
        "button", "paragraph-link",
        `${para.paragraph_id} (${para.questions} questions)`,
      );
      button.addEventListener("click", () => void this.openParagraph(para, topic));
      panel.appendChild(button);
    }
  }

  async openParagraph(para: ParagraphSummary, topic: TopicSummary): Promise<void> {
    await this.session.openParagraph(para);
    this.renderWorkbench(topic);
  }

  renderWorkbench(topic: TopicSummary): void {
    const panel = this.panel("workbench");
    panel.innerHTML = "";
    const para = this.session.paragraph;
    if (!para) return;

    panel.appendChild(this.el("h2", "", para.paragraph_id));

    // question list
    const questionList = this.el("div", "questions", "");
    for (const q of this.session.questions) {
      const count = this.session.answers.get(q.qid)?.length ?? 0;
      const button = this.el(
        "button",
        q.qid === this.session.activeQid ? "question active" : "question",
        `${q.question} [${count}]${q.needs_review ? " (review)" : ""}`,
      );
      button.addEventListener("click", () => {
        this.session.selectQuestion(q.qid);
        this.renderWorkbench(topic);
      });
      questionList.appendChild(button);
    }
    panel.appendChild(questionList);

    // question editor prefilled from the topic's aspects
    const editor = this.el("div", "question-editor", "");
    const aspectSelect = this.doc.createElement("select");
    for (const aspect of topic.aspects) {
      const opt = this.doc.createElement("option");
      opt.value = aspect;
      opt.textContent = aspect;
      aspectSelect.appendChild(opt);
    }
    const input = this.doc.createElement("input");
    input.type = "text";
    const preview = this.el("span", "preview", "");
    const saveButton = this.doc.createElement("button");
    saveButton.textContent = "Add question";
    const syncEditor = () => {
      const proposal = proposeQuestion(aspectSelect.value);
      if (!input.value) input.value = proposal.question;
      preview.textContent = proposal.needsReview ? "(no template matched; please edit)" : "";
      const check = validateQuestionText(
        input.value, this.session.questions.map((q) => q.question),
      );
      saveButton.disabled = !check.ok;
      saveButton.title = check.ok ? "" : check.reason;
    };
    aspectSelect.addEventListener("change", () => {
      input.value = "";
      syncEditor();
    });
    input.addEventListener("input", syncEditor);
    saveButton.addEventListener("click", () => {
      void this.api
        .addQuestion(para.paragraph_id, aspectSelect.value, input.value)
        .then(async () => {
          await this.session.openParagraph(para);
          this.renderWorkbench(topic);
        })
        .catch((err) => this.renderStatus(String(err)));
    });
    syncEditor();
    editor.append(aspectSelect, input, preview, saveButton);
    panel.appendChild(editor);

    // paragraph with highlights for the active question
    const spans: HighlightSpan[] = [];
    if (this.session.activeQid) {
      for (const a of this.session.answers.get(this.session.activeQid) ?? []) {
        spans.push({
          start: a.answer_start,
          end: a.answer_start + scalarLength(a.text),
          pending: a.pending,
        });
      }
    }
    const rendered = renderParagraph(this.doc, para.context, spans);
    rendered.addEventListener("mouseup", () => {
      const selection = this.doc.getSelection?.() ?? null;
      if (!selection) return;
      const span = selectionToSpan(rendered, selection);
      if (!span) return;
      const error = this.session.setPendingSpan(span.start, span.end);
      this.renderStatus(error ?? `pending span ${span.start}..${span.end}`);
    });
    panel.appendChild(rendered);

    const annotateButton = this.doc.createElement("button");
    annotateButton.textContent = "Annotate selection";
    annotateButton.addEventListener("click", () => {
      void this.session
        .annotatePending()
        .then(() => this.renderWorkbench(topic))
        .catch((err) => {
          if (err instanceof ApiValidationError) {
            this.renderStatus(`rejected: ${err.message}`);
            this.renderWorkbench(topic);
          } else if (err instanceof NetworkError) {
            this.renderStatus("offline; annotation queued");
          } else {
            this.renderStatus(String(err));
          }
        });
    });
    panel.appendChild(annotateButton);

    const undoButton = this.doc.createElement("button");
    undoButton.textContent = "Undo";
    undoButton.disabled = !this.session.canUndo;
    undoButton.addEventListener("click", () => {
      void this.session.undo().then(() => this.renderWorkbench(topic));
    });
    panel.appendChild(undoButton);

    if (this.session.lastError) {
      panel.appendChild(this.el("div", "error", this.session.lastError));
    }
  }
}
