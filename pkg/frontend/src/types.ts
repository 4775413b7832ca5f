/** Wire types of the annotation API (see the service's External Interfaces). */

export interface TopicSummary {
  topic_id: number;
  aspects: string[];
  questions: number;
  answers: number;
}

export interface ParagraphSummary {
  paragraph_id: string;
  topic_id: number;
  context: string;
  questions: number;
  answers: number;
}

export interface AnswerOut {
  annotation_id: string;
  text: string;
  answer_start: number;
}

export interface QuestionOut {
  qid: string;
  question: string;
  aspect: string;
  needs_review: boolean;
  answers: AnswerOut[];
}

export interface AskAnswer {
  text: string;
  score: number;
  paragraph_id: string;
  char_start: number;
  char_end: number;
  retrieval_score: number | null;
}

/** A character span in Unicode scalar values (the dataset contract). */
export interface Span {
  start: number;
  end: number;
}
