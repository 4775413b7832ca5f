import { describe, expect, it, vi } from "vitest";

import { AnnotationApi, ApiValidationError } from "../src/api.js";
import { AnnotationSession } from "../src/state.js";
import type { ParagraphSummary, QuestionOut } from "../src/types.js";

const PARAGRAPH: ParagraphSummary = {
  paragraph_id: "topic-0-0",
  topic_id: 0,
  context: "He is afraid to leave the house. The voices scare him.",
  questions: 1,
  answers: 0,
};

const QUESTIONS: QuestionOut[] = [
  {
    qid: "q1",
    question: "What is a schizophrenic afraid of?",
    aspect: "afraid",
    needs_review: false,
    answers: [],
  },
];

function fakeApi(overrides: Partial<Record<string, unknown>> = {}): AnnotationApi {
  let counter = 0;
  const api = {
    questions: vi.fn().mockResolvedValue(structuredClone(QUESTIONS)),
    annotate: vi.fn().mockImplementation(async (_qid: string, start: number, end: number) => ({
      annotation_id: `q1:${counter++}`,
      text: PARAGRAPH.context.slice(start, end),
    })),
    deleteAnnotation: vi.fn().mockResolvedValue({ deleted: "x" }),
    ...overrides,
  };
  return api as unknown as AnnotationApi;
}

async function openSession(api = fakeApi()): Promise<AnnotationSession> {
  const session = new AnnotationSession(api);
  await session.openParagraph(PARAGRAPH);
  session.selectQuestion("q1");
  return session;
}

describe("AnnotationSession", () => {
  it("rejects zero-length selections client-side without a request", async () => {
    const api = fakeApi();
    const session = await openSession(api);
    const error = session.setPendingSpan(5, 5);
    expect(error).toMatch(/empty/);
    expect(session.pendingSpan).toBeNull();
    await expect(session.annotatePending()).resolves.toBeNull();
    expect((api.annotate as ReturnType<typeof vi.fn>)).not.toHaveBeenCalled();
  });

  it("rejects selections outside the paragraph client-side", async () => {
    const session = await openSession();
    const error = session.setPendingSpan(0, 9999);
    expect(error).toMatch(/outside/);
  });

  it("annotates the pending span and commits on 200", async () => {
    const session = await openSession();
    expect(session.setPendingSpan(6, 12)).toBeNull();
    const answer = await session.annotatePending();
    expect(answer?.pending).toBe(false);
    expect(answer?.annotation_id).toBe("q1:0");
    expect(answer?.text).toBe("afraid");
    expect(session.answers.get("q1")).toHaveLength(1);
    expect(session.canUndo).toBe(true);
  });

  it("shows the answer as pending until the server acknowledges", async () => {
    let resolveAck!: (value: { annotation_id: string; text: string }) => void;
    const api = fakeApi({
      annotate: vi.fn().mockReturnValue(
        new Promise((resolve) => {
          resolveAck = resolve;
        }),
      ),
    });
    const session = await openSession(api);
    session.setPendingSpan(6, 12);
    const commit = session.annotatePending();
    const inFlight = session.answers.get("q1")?.[0];
    expect(inFlight?.pending).toBe(true); // optimistic, visually distinct
    resolveAck({ annotation_id: "q1:0", text: "afraid" });
    await commit;
    expect(session.answers.get("q1")?.[0]?.pending).toBe(false);
  });

  it("rolls back the optimistic entry on 422 and surfaces the message", async () => {
    const api = fakeApi({
      annotate: vi.fn().mockRejectedValue(new ApiValidationError("span rejected")),
    });
    const session = await openSession(api);
    session.setPendingSpan(6, 12);
    await expect(session.annotatePending()).rejects.toThrow(ApiValidationError);
    expect(session.answers.get("q1")).toHaveLength(0);
    expect(session.lastError).toBe("span rejected");
    expect(session.canUndo).toBe(false);
  });

  it("undo after annotate deletes the annotation and restores the view", async () => {
    const api = fakeApi();
    const session = await openSession(api);
    session.setPendingSpan(6, 12);
    await session.annotatePending();
    const before = structuredClone(
      session.answers.get("q1")?.map((a) => a.annotation_id),
    );
    expect(before).toEqual(["q1:0"]);

    await session.undo();
    expect(api.deleteAnnotation).toHaveBeenCalledWith("q1:0");
    expect(session.answers.get("q1")).toHaveLength(0);
    expect(session.canUndo).toBe(false);
  });

  it("undo after delete re-annotates the same span", async () => {
    const api = fakeApi();
    const session = await openSession(api);
    session.setPendingSpan(6, 12);
    await session.annotatePending();
    await session.deleteAnswer("q1", "q1:0");
    expect(session.answers.get("q1")).toHaveLength(0);

    await session.undo();
    expect(api.annotate).toHaveBeenLastCalledWith("q1", 6, 12);
    const restored = session.answers.get("q1");
    expect(restored).toHaveLength(1);
    expect(restored?.[0]?.text).toBe("afraid");
  });

  it("selecting an unknown question throws", async () => {
    const session = await openSession();
    expect(() => session.selectQuestion("nope")).toThrow(/unknown question/);
  });
});
