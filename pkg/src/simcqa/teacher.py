"""Teacher agent: answers questions with validated extractive spans.

The teacher sees the full section text and must answer by copying contiguous
spans from it (or say it cannot find the answer).  Every generated answer is
validated; invalid answers trigger a targeted reprompt and regeneration, up to
a fixed patience, after which the answer falls back to cannot-find.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .backend import ChatSession, ROLE_SYSTEM
from .corpus import (
    CANNOT_FIND,
    Answer,
    AnswerSpan,
    TopicContext,
    cannot_find_answer,
    found_answer,
)
from .spans import find_span, occurs_in

TEACHER_INSTRUCTION_TEMPLATE = (
    "Topic: [t]\n"
    "Background knowledge [b]\n"
    "\n"
    "In this task, you will be given a text about the topic explained above. "
    "You will answer my questions from this text. "
    "Please remember that you cannot generate the answer on your own but should only copy "
    "a continuous span from the original text and the copied answer should not exceed 40 tokens. "
    "If you cannot find the answer in the text, please generate ‘I cannot find the answer’.\n"
    "\n"
    "Section header: [h]\n"
    "Section text: [s]"
)

REPROMPT_COPY_EXACT = "Please copy the answer exactly from the given text."
REPROMPT_NOT_BACKGROUND = "Please answer from the given section not the given background description."
SHORTEST_SPAN_REMINDER = "Remember that you should select the shortest possible span from the text."

FAIL_NOT_A_SPAN = "not_a_span"
FAIL_FROM_BACKGROUND = "copied_from_background"
FAIL_TOO_LONG = "too_long"

_REPROMPT_BY_FAILURE = {
    FAIL_NOT_A_SPAN: REPROMPT_COPY_EXACT,
    FAIL_TOO_LONG: REPROMPT_COPY_EXACT,
    FAIL_FROM_BACKGROUND: REPROMPT_NOT_BACKGROUND,
}


@dataclass
class TeacherConfig:
    patience: int = 4
    max_answer_tokens: int = 40
    shortest_span_reminder: bool = True

    def __post_init__(self):
        if self.patience < 1 or self.max_answer_tokens < 1:
            raise ValueError("patience and max_answer_tokens must be >= 1")


@dataclass(frozen=True)
class ValidationVerdict:
    valid: bool
    failure: Optional[str] = None  # FAIL_* constant
    matched_spans: tuple[AnswerSpan, ...] = ()
    is_cannot_find: bool = False


@dataclass(frozen=True)
class TeacherResult:
    answer: Answer
    reprompts: tuple[str, ...]


def build_teacher_instruction(ctx: TopicContext) -> str:
    return (
        TEACHER_INSTRUCTION_TEMPLATE.replace("[t]", ctx.title)
        .replace("[b]", ctx.background)
        .replace("[h]", ctx.section_header)
        .replace("[s]", ctx.section_text)
    )


def is_cannot_find_text(raw: str) -> bool:
    """Accepts the fallback phrase with minor quoting/punctuation variation."""
    t = raw.strip().strip("\"'‘’“”").rstrip(".!").strip()
    return t.lower() == "i cannot find the answer"


def split_answer_segments(raw: str) -> list[str]:
    """Split a raw answer into independently validated segments.

    Splits on '; ' (multi-span convention) and on sentence-final punctuation
    followed by whitespace.
    """
    parts = re.split(r"(?<=[.!?])\s+|;\s+", raw.strip())
    return [p.strip() for p in parts if p.strip()]


def _locate_segment(segment: str, section_text: str) -> tuple[int, int] | None:
    hit = find_span(segment, section_text)
    if hit is None and segment[-1:] in ".;":
        # models often append sentence punctuation the source span lacks
        hit = find_span(segment[:-1].rstrip(), section_text)
    return hit


def validate_answer(raw: str, ctx: TopicContext, cfg: TeacherConfig) -> ValidationVerdict:
    """Check that an answer is cannot-find or built of exact section spans."""
    if is_cannot_find_text(raw):
        return ValidationVerdict(valid=True, is_cannot_find=True)
    segments = split_answer_segments(raw)
    if not segments:
        return ValidationVerdict(valid=False, failure=FAIL_NOT_A_SPAN)
    spans: list[AnswerSpan] = []
    for seg in segments:
        hit = _locate_segment(seg, ctx.section_text)
        if hit is None:
            if occurs_in(seg, ctx.background):
                return ValidationVerdict(valid=False, failure=FAIL_FROM_BACKGROUND)
            return ValidationVerdict(valid=False, failure=FAIL_NOT_A_SPAN)
        if len(seg.split()) > cfg.max_answer_tokens:
            return ValidationVerdict(valid=False, failure=FAIL_TOO_LONG)
        start, end = hit
        spans.append(AnswerSpan(text=ctx.section_text[start:end], start=start, end=end))
    return ValidationVerdict(valid=True, matched_spans=tuple(spans))


def select_teacher_reprompt(verdict: ValidationVerdict) -> str:
    if verdict.valid:
        raise ValueError("reprompt requested for a valid verdict")
    return _REPROMPT_BY_FAILURE[verdict.failure]


def generate_answer(session: ChatSession, question: str, cfg: TeacherConfig) -> str:
    message = question
    if cfg.shortest_span_reminder:
        message = f"{question} {SHORTEST_SPAN_REMINDER}"
    return session.send(message)


def answer_with_validation(
    session: ChatSession,
    question: str,
    ctx: TopicContext,
    cfg: TeacherConfig,
    include_instruction: bool = False,
) -> TeacherResult:
    """Generate/validate/reprompt loop; falls back to cannot-find on exhaustion.

    include_instruction prepends the teacher instruction to the first message
    (used for a fresh session on the opening turn).
    """
    if include_instruction:
        question_msg = f"{build_teacher_instruction(ctx)}\n\n{question}"
        if cfg.shortest_span_reminder:
            question_msg = f"{question_msg} {SHORTEST_SPAN_REMINDER}"
        raw = session.send(question_msg, role=ROLE_SYSTEM)
    else:
        raw = generate_answer(session, question, cfg)

    reprompts: list[str] = []
    attempts = 1
    while True:
        verdict = validate_answer(raw, ctx, cfg)
        if verdict.valid:
            if verdict.is_cannot_find:
                return TeacherResult(
                    cannot_find_answer(attempts=attempts), tuple(reprompts)
                )
            return TeacherResult(
                found_answer(verdict.matched_spans, raw_text=raw, attempts=attempts),
                tuple(reprompts),
            )
        if len(reprompts) >= cfg.patience:
            return TeacherResult(
                cannot_find_answer(attempts=attempts), tuple(reprompts)
            )
        reprompt = select_teacher_reprompt(verdict)
        reprompts.append(reprompt)
        raw = session.send(reprompt)
        attempts += 1
