/** Turn answer spans into render segments for a paragraph. Spans are in
 * scalar-value space; overlapping spans merge so the rendered text is a
 * flat sequence of plain and highlighted pieces whose concatenation is
 * exactly the context. */

import { sliceByScalar, scalarLength } from "./offsets.js";
import type { Span } from "./types.js";

export interface HighlightSpan extends Span {
  pending?: boolean;
}

export interface Segment {
  text: string;
  highlighted: boolean;
  pending: boolean;
  start: number; // scalar offset of the segment within the context
}

export function mergeSpans(spans: HighlightSpan[]): HighlightSpan[] {
  const sorted = [...spans]
    .filter((s) => s.end > s.start)
    .sort((a, b) => a.start - b.start || a.end - b.end);
  const merged: HighlightSpan[] = [];
  for (const span of sorted) {
    const last = merged[merged.length - 1];
    if (last && span.start <= last.end) {
      last.end = Math.max(last.end, span.end);
      last.pending = Boolean(last.pending && span.pending);
    } else {
      merged.push({ ...span });
    }
  }
  return merged;
}

export function segments(context: string, spans: HighlightSpan[]): Segment[] {
  const merged = mergeSpans(spans);
  const out: Segment[] = [];
  let cursor = 0;
  for (const span of merged) {
    const start = Math.max(0, Math.min(span.start, scalarLength(context)));
    const end = Math.max(start, Math.min(span.end, scalarLength(context)));
    if (start > cursor) {
      out.push({
        text: sliceByScalar(context, cursor, start),
        highlighted: false,
        pending: false,
        start: cursor,
      });
    }
    if (end > start) {
      out.push({
        text: sliceByScalar(context, start, end),
        highlighted: true,
        pending: Boolean(span.pending),
        start,
      });
    }
    cursor = Math.max(cursor, end);
  }
  const total = scalarLength(context);
  if (cursor < total) {
    out.push({
      text: sliceByScalar(context, cursor, total),
      highlighted: false,
      pending: false,
      start: cursor,
    });
  }
  return out;
}
