// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { renderParagraph, selectionToSpan, utf16OffsetInContainer } from "../src/dom.js";
import { sliceByScalar } from "../src/offsets.js";

const CONTEXT = "He is afraid to leave the house. The voices scare him.";

describe("renderParagraph", () => {
  it("text content equals the context exactly", () => {
    const el = renderParagraph(document, CONTEXT, [
      { start: 6, end: 12 },
      { start: 33, end: 43, pending: true },
    ]);
    expect(el.textContent).toBe(CONTEXT);
  });

  it("marks carry pending styling separately", () => {
    const el = renderParagraph(document, CONTEXT, [
      { start: 6, end: 12 },
      { start: 33, end: 43, pending: true },
    ]);
    const marks = Array.from(el.querySelectorAll("mark"));
    expect(marks.map((m) => m.className)).toEqual(["answer", "answer pending"]);
    expect(marks[0]?.textContent).toBe("afraid");
  });
});

describe("selection mapping", () => {
  it("maps offsets within a plain text node", () => {
    const el = renderParagraph(document, CONTEXT, []);
    const textNode = el.childNodes[0]!;
    const span = selectionToSpan(el, {
      anchorNode: textNode,
      anchorOffset: 6,
      focusNode: textNode,
      focusOffset: 12,
    });
    expect(span).toEqual({ start: 6, end: 12 });
    expect(sliceByScalar(CONTEXT, span!.start, span!.end)).toBe("afraid");
  });

  it("maps offsets across highlight marks", () => {
    const el = renderParagraph(document, CONTEXT, [{ start: 6, end: 12 }]);
    // children: [text "He is "][mark "afraid"][text " to leave ..."]
    const tail = el.childNodes[2]!;
    const span = selectionToSpan(el, {
      anchorNode: tail.firstChild ?? tail,
      anchorOffset: 1,
      focusNode: tail.firstChild ?? tail,
      focusOffset: 9,
    });
    expect(span).toEqual({ start: 13, end: 21 });
    expect(sliceByScalar(CONTEXT, 13, 21)).toBe("to leave");
  });

  it("normalizes backwards selections", () => {
    const el = renderParagraph(document, CONTEXT, []);
    const textNode = el.childNodes[0]!;
    const span = selectionToSpan(el, {
      anchorNode: textNode,
      anchorOffset: 12,
      focusNode: textNode,
      focusOffset: 6,
    });
    expect(span).toEqual({ start: 6, end: 12 });
  });

  it("returns null for collapsed selections", () => {
    const el = renderParagraph(document, CONTEXT, []);
    const textNode = el.childNodes[0]!;
    expect(
      selectionToSpan(el, {
        anchorNode: textNode,
        anchorOffset: 4,
        focusNode: textNode,
        focusOffset: 4,
      }),
    ).toBeNull();
  });

  it("returns scalar offsets for astral text", () => {
    const astral = "Ab😊cd efgh";
    const el = renderParagraph(document, astral, []);
    const textNode = el.childNodes[0]!;
    // UTF-16 units 4..6 are "cd"; scalar offsets are 3..5
    const span = selectionToSpan(el, {
      anchorNode: textNode,
      anchorOffset: 4,
      focusNode: textNode,
      focusOffset: 6,
    });
    expect(span).toEqual({ start: 3, end: 5 });
    expect(sliceByScalar(astral, span!.start, span!.end)).toBe("cd");
  });

  it("offset fidelity round-trip: annotate, re-render, identical marks", () => {
    // select "voices" in a paragraph that already has one highlight
    const el = renderParagraph(document, CONTEXT, [{ start: 6, end: 12 }]);
    const tail = el.childNodes[2]!;
    const idx = (tail.textContent ?? "").indexOf("voices");
    const span = selectionToSpan(el, {
      anchorNode: tail.firstChild ?? tail,
      anchorOffset: idx,
      focusNode: tail.firstChild ?? tail,
      focusOffset: idx + "voices".length,
    })!;
    expect(sliceByScalar(CONTEXT, span.start, span.end)).toBe("voices");

    // re-render with the exported span, as after a dataset round-trip
    const again = renderParagraph(document, CONTEXT, [
      { start: 6, end: 12 },
      span,
    ]);
    const marks = Array.from(again.querySelectorAll("mark")).map((m) => m.textContent);
    expect(marks).toEqual(["afraid", "voices"]);
    expect(again.textContent).toBe(CONTEXT);
  });

  it("utf16OffsetInContainer returns null for foreign nodes", () => {
    const el = renderParagraph(document, CONTEXT, []);
    const foreign = document.createElement("div");
    expect(utf16OffsetInContainer(el, foreign, 0)).toBeNull();
  });
});
