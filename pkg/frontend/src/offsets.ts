/** Offset arithmetic between JS strings (UTF-16) and the dataset contract
 * (Unicode scalar values). The server counts answer_start in scalar values,
 * so every DOM-derived offset goes through these converters before hitting
 * the API. */

import type { Span } from "./types.js";

/** Number of Unicode scalar values in the string. */
export function scalarLength(text: string): number {
  let n = 0;
  for (const _ of text) n++;
  return n;
}

/** Convert a UTF-16 code unit index to a scalar-value index. An index that
 * lands inside a surrogate pair snaps back to the pair start. */
export function utf16ToScalar(text: string, utf16Index: number): number {
  if (utf16Index <= 0) return 0;
  let scalar = 0;
  let units = 0;
  for (const ch of text) {
    const width = ch.length;
    if (units + width > utf16Index) return scalar;
    units += width;
    scalar++;
    if (units >= utf16Index) return scalar;
  }
  return scalar;
}

/** Convert a scalar-value index to a UTF-16 code unit index. */
export function scalarToUtf16(text: string, scalarIndex: number): number {
  if (scalarIndex <= 0) return 0;
  let scalar = 0;
  let units = 0;
  for (const ch of text) {
    if (scalar >= scalarIndex) break;
    units += ch.length;
    scalar++;
  }
  return units;
}

/** Slice by scalar-value offsets (mirrors Python's str slicing). */
export function sliceByScalar(text: string, start: number, end: number): string {
  return text.slice(scalarToUtf16(text, start), scalarToUtf16(text, end));
}

export type SpanValidation =
  | { ok: true; span: Span; text: string }
  | { ok: false; reason: string };

/** Client-side validation mirroring the server's rules: inside the
 * paragraph, non-inverted, non-empty, covering at least one
 * non-whitespace character. */
export function validateSpan(context: string, start: number, end: number): SpanValidation {
  if (start > end) [start, end] = [end, start];
  const length = scalarLength(context);
  if (start < 0 || end > length) {
    return { ok: false, reason: `span (${start}, ${end}) outside the paragraph` };
  }
  if (start === end) {
    return { ok: false, reason: "selection is empty" };
  }
  const text = sliceByScalar(context, start, end);
  if (text.trim() === "") {
    return { ok: false, reason: "selection covers only whitespace" };
  }
  return { ok: true, span: { start, end }, text };
}
