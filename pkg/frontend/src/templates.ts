/** Client-side question templates for prefilling the question editor.
 * Mirrors the server-side template file: first matching pattern wins;
 * unmatched aspects get the generic template and are flagged for review. */

export interface QuestionProposal {
  question: string;
  needsReview: boolean;
}

const TEMPLATES: Array<[RegExp, string]> = [
  [/^afraid/, "What is a schizophrenic afraid of?"],
  [/^(obsess|conspiracy)/, "What is a schizophrenic obsessed with?"],
  [/^(suffer|insomnia|delusion|tired)/, "What is a schizophrenic suffering from?"],
  [/^(stop|drink|smok|nicotine|caffe|quit)/, "What does a schizophrenic stop with?"],
  [/^(struggl|problem|medicat)/, "What does a schizophrenic struggle with?"],
  [/^(hallucinat|voices|demon|see )/, "What does a schizophrenic see in hallucinations?"],
  [/^(memory|memori|forget)/, "What does a schizophrenic have memory problems with?"],
  [/^(food|weight|eat)/, "What does a schizophrenic eat?"],
  [/^(family|friend|society|people)/, "Who does a schizophrenic rely on?"],
  [/^(work|job|school)/, "What can a schizophrenic no longer do?"],
];

export function proposeQuestion(aspect: string): QuestionProposal {
  for (const [pattern, question] of TEMPLATES) {
    if (pattern.test(aspect)) {
      return { question, needsReview: false };
    }
  }
  return { question: `What about ${aspect}?`, needsReview: true };
}

/** Non-empty after trimming; duplicate texts are rejected before save. */
export function validateQuestionText(
  text: string,
  existing: string[],
): { ok: true } | { ok: false; reason: string } {
  if (text.trim() === "") {
    return { ok: false, reason: "question must be non-empty" };
  }
  if (existing.includes(text)) {
    return { ok: false, reason: "duplicate question in this paragraph" };
  }
  return { ok: true };
}
