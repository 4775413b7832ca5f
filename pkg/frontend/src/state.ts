/** Annotation session state: current topic/paragraph/question, the pending
 * span selection, optimistic answer entries, and an undo stack whose
 * entries invert committed mutations through the API.
 *
 * Optimistic answers are marked pending until the server acknowledges;
 * a 422 rolls the entry back and surfaces the server's message. */

import { AnnotationApi, ApiValidationError } from "./api.js";
import { scalarLength, validateSpan } from "./offsets.js";
import type { AnswerOut, ParagraphSummary, QuestionOut, Span } from "./types.js";

export interface LocalAnswer extends AnswerOut {
  pending: boolean;
}

type UndoEntry =
  | { kind: "annotate"; qid: string; annotationId: string }
  | { kind: "delete"; qid: string; span: Span };

export interface SessionView {
  paragraph: ParagraphSummary | null;
  activeQid: string | null;
  pendingSpan: Span | null;
  answers: Map<string, LocalAnswer[]>;
  canUndo: boolean;
  lastError: string | null;
}

export class AnnotationSession {
  paragraph: ParagraphSummary | null = null;
  activeQid: string | null = null;
  pendingSpan: Span | null = null;
  questions: QuestionOut[] = [];
  answers = new Map<string, LocalAnswer[]>();
  lastError: string | null = null;
  private undoStack: UndoEntry[] = [];
  private tempCounter = 0;

  constructor(private readonly api: AnnotationApi) {}

  async openParagraph(paragraph: ParagraphSummary): Promise<void> {
    this.paragraph = paragraph;
    this.activeQid = null;
    this.pendingSpan = null;
    this.undoStack = [];
    this.questions = await this.api.questions(paragraph.paragraph_id);
    this.answers = new Map(
      this.questions.map((q) => [
        q.qid,
        q.answers.map((a) => ({ ...a, pending: false })),
      ]),
    );
  }

  selectQuestion(qid: string): void {
    if (!this.questions.some((q) => q.qid === qid)) {
      throw new Error(`unknown question ${qid}`);
    }
    this.activeQid = qid;
    this.pendingSpan = null;
  }

  /** Returns an error string for invalid selections (nothing is sent). */
  setPendingSpan(start: number, end: number): string | null {
    if (!this.paragraph) return "no paragraph open";
    const check = validateSpan(this.paragraph.context, start, end);
    if (!check.ok) {
      this.pendingSpan = null;
      return check.reason;
    }
    this.pendingSpan = check.span;
    return null;
  }

  /** Commit the pending span as an answer to the active question. The
   * answer appears immediately as pending and is confirmed or rolled back
   * when the server responds. */
  async annotatePending(): Promise<LocalAnswer | null> {
    if (!this.paragraph || !this.activeQid || !this.pendingSpan) {
      this.lastError = "select a question and a span first";
      return null;
    }
    const qid = this.activeQid;
    const span = this.pendingSpan;
    const check = validateSpan(this.paragraph.context, span.start, span.end);
    if (!check.ok) {
      this.lastError = check.reason;
      return null;
    }

    const optimistic: LocalAnswer = {
      annotation_id: `tmp-${this.tempCounter++}`,
      text: check.text,
      answer_start: span.start,
      pending: true,
    };
    const list = this.answers.get(qid) ?? [];
    list.push(optimistic);
    this.answers.set(qid, list);
    this.pendingSpan = null;

    try {
      const ack = await this.api.annotate(qid, span.start, span.end);
      optimistic.annotation_id = ack.annotation_id;
      optimistic.pending = false;
      this.undoStack.push({ kind: "annotate", qid, annotationId: ack.annotation_id });
      this.lastError = null;
      return optimistic;
    } catch (err) {
      // roll back the optimistic entry
      this.answers.set(qid, (this.answers.get(qid) ?? []).filter((a) => a !== optimistic));
      this.lastError = err instanceof ApiValidationError ? err.message : String(err);
      throw err;
    }
  }

  async deleteAnswer(qid: string, annotationId: string): Promise<void> {
    const list = this.answers.get(qid) ?? [];
    const entry = list.find((a) => a.annotation_id === annotationId);
    if (!entry || entry.pending) {
      throw new Error(`no committed annotation ${annotationId}`);
    }
    await this.api.deleteAnnotation(annotationId);
    this.answers.set(qid, list.filter((a) => a !== entry));
    this.undoStack.push({
      kind: "delete",
      qid,
      // spans are in scalar values, not UTF-16 units
      span: { start: entry.answer_start, end: entry.answer_start + scalarLength(entry.text) },
    });
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  /** Undo the latest committed mutation by issuing its inverse. */
  async undo(): Promise<void> {
    const entry = this.undoStack.pop();
    if (!entry) return;
    if (entry.kind === "annotate") {
      await this.api.deleteAnnotation(entry.annotationId);
      const list = this.answers.get(entry.qid) ?? [];
      this.answers.set(
        entry.qid,
        list.filter((a) => a.annotation_id !== entry.annotationId),
      );
    } else {
      const ack = await this.api.annotate(entry.qid, entry.span.start, entry.span.end);
      const list = this.answers.get(entry.qid) ?? [];
      list.push({
        annotation_id: ack.annotation_id,
        text: ack.text,
        answer_start: entry.span.start,
        pending: false,
      });
      this.answers.set(entry.qid, list);
    }
  }

  view(): SessionView {
    return {
      paragraph: this.paragraph,
      activeQid: this.activeQid,
      pendingSpan: this.pendingSpan,
      answers: this.answers,
      canUndo: this.canUndo,
      lastError: this.lastError,
    };
  }
}
