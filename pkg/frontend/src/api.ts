/** Typed client for the annotation API. fetch is injectable for tests.
 * 422 responses surface the server's validation message; transient network
 * failures can be queued for retry. */

import type {
  AskAnswer,
  ParagraphSummary,
  QuestionOut,
  TopicSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiValidationError extends ApiError {
  constructor(detail: string) {
    super(detail, 422);
    this.name = "ApiValidationError";
  }
}

export class NetworkError extends ApiError {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new NetworkError(`request to ${path} failed: ${String(err)}`);
    }
    if (response.status === 422) {
      const body = (await response.json().catch(() => ({}))) as { detail?: string };
      throw new ApiValidationError(body.detail ?? "validation failed");
    }
    if (!response.ok) {
      throw new ApiError(`${path} returned ${response.status}`, response.status);
    }
    return (await response.json()) as T;
  }

  topics(): Promise<TopicSummary[]> {
    return this.request("/topics");
  }

  paragraphs(topicId: number): Promise<ParagraphSummary[]> {
    return this.request(`/paragraphs?topic=${topicId}`);
  }

  questions(paragraphId: string): Promise<QuestionOut[]> {
    return this.request(`/questions?paragraph=${encodeURIComponent(paragraphId)}`);
  }

  addQuestion(paragraphId: string, aspect: string, question: string): Promise<{ qid: string }> {
    return this.request("/questions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ paragraph_id: paragraphId, aspect, question }),
    });
  }

  annotate(qid: string, start: number, end: number): Promise<{ annotation_id: string; text: string }> {
    return this.request("/annotations", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ qid, start, end }),
    });
  }

  deleteAnnotation(annotationId: string): Promise<{ deleted: string }> {
    return this.request(`/annotations/${encodeURIComponent(annotationId)}`, {
      method: "DELETE",
    });
  }

  exportDataset(): Promise<unknown> {
    return this.request("/dataset/export");
  }

  ask(question: string, retrieverK?: number, readerK?: number): Promise<{ answers: AskAnswer[] }> {
    return this.request("/ask", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        question,
        retriever_k: retrieverK ?? null,
        reader_k: readerK ?? null,
      }),
    });
  }
}

/** FIFO retry queue for writes interrupted by network failures. Items stay
 * queued (visible as pending) until a flush succeeds; validation errors are
 * not retriable and reject immediately. */
export class RetryQueue {
  private queue: Array<() => Promise<void>> = [];

  constructor(private readonly onChange: (pending: number) => void = () => {}) {}

  get pending(): number {
    return this.queue.length;
  }

  enqueue(task: () => Promise<void>): void {
    this.queue.push(task);
    this.onChange(this.queue.length);
  }

  /** Run queued tasks in order; stops at the first still-failing task. */
  async flush(): Promise<void> {
    while (this.queue.length > 0) {
      const task = this.queue[0]!;
      try {
        await task();
      } catch (err) {
        if (err instanceof NetworkError) {
          this.onChange(this.queue.length);
          return; // still offline; keep the task queued
        }
        this.queue.shift(); // permanent failure: drop and surface
        this.onChange(this.queue.length);
        throw err;
      }
      this.queue.shift();
      this.onChange(this.queue.length);
    }
  }
}
