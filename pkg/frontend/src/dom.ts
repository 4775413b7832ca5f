/** DOM helpers: render a paragraph as plain text with highlight marks, and
 * map a browser Selection back to scalar-value offsets in the context.
 *
 * The paragraph is rendered as text and <mark> nodes only (no other
 * formatting), so the concatenated text content equals the context string
 * and offset mapping stays exact. */

import { segments, type HighlightSpan } from "./highlight.js";
import { utf16ToScalar } from "./offsets.js";
import type { Span } from "./types.js";

export function renderParagraph(
  doc: Document,
  context: string,
  spans: HighlightSpan[],
): HTMLElement {
  const container = doc.createElement("div");
  container.className = "paragraph";
  for (const seg of segments(context, spans)) {
    if (seg.highlighted) {
      const mark = doc.createElement("mark");
      mark.textContent = seg.text;
      mark.className = seg.pending ? "answer pending" : "answer";
      container.appendChild(mark);
    } else {
      container.appendChild(doc.createTextNode(seg.text));
    }
  }
  return container;
}

/** UTF-16 offset of (node, offsetInNode) within container's text content,
 * or null when the node is not inside the container. */
export function utf16OffsetInContainer(
  container: Node,
  node: Node,
  offsetInNode: number,
): number | null {
  let acc = 0;
  let found = false;

  function walk(current: Node): boolean {
    if (current === node) {
      if (current.nodeType === current.TEXT_NODE) {
        acc += offsetInNode;
      } else {
        // offset counts child nodes; add the text of the skipped children
        const children = Array.from(current.childNodes).slice(0, offsetInNode);
        acc += children.reduce((n, c) => n + (c.textContent ?? "").length, 0);
      }
      found = true;
      return true;
    }
    if (current.nodeType === current.TEXT_NODE) {
      acc += (current.textContent ?? "").length;
      return false;
    }
    for (const child of Array.from(current.childNodes)) {
      if (walk(child)) return true;
    }
    return false;
  }

  walk(container);
  return found ? acc : null;
}

/** Map a Selection over the rendered paragraph to a scalar-value span in
 * the context. Returns null for collapsed/outside selections. */
export function selectionToSpan(
  container: HTMLElement,
  selection: {
    anchorNode: Node | null;
    anchorOffset: number;
    focusNode: Node | null;
    focusOffset: number;
  },
): Span | null {
  if (!selection.anchorNode || !selection.focusNode) return null;
  const context = container.textContent ?? "";
  const a = utf16OffsetInContainer(container, selection.anchorNode, selection.anchorOffset);
  const b = utf16OffsetInContainer(container, selection.focusNode, selection.focusOffset);
  if (a === null || b === null || a === b) return null;
  const [lo, hi] = a < b ? [a, b] : [b, a];
  return { start: utf16ToScalar(context, lo), end: utf16ToScalar(context, hi) };
}
