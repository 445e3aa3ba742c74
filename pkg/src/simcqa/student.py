"""Student agent: explores the hidden section by asking questions.

The student only ever sees the title, background paragraph, and section
header — never the section text.  Generated questions are checked
structurally (single line, one question, bounded length); when the teacher
cannot answer, a randomly chosen guiding prompt steers the next question.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Optional

from .backend import ChatSession, ROLE_SYSTEM
from .corpus import Answer, TopicContext

STUDENT_INSTRUCTION_TEMPLATE = (
    "In this task, I am a teacher and have a document, you are a curious student who wants "
    "to explore this document by asking questions. "
    "The main objective is to learn most of the documents that I have. "
    "I will explain to you the topic and background knowledge of the document. "
    "Then I will give you the title of the document and you should ask questions about this "
    "title one by one. When you ask a question, I give you the answer, and then you ask your "
    "next question. I’m only allowed to find the answer to your questions from this document, "
    "so if I cannot find the answer, I will say “I cannot find the answer, please ask your "
    "next question”.\n"
    "You shouldn't ask questions that can be answered from my previous answers to your "
    "previous questions. You should sometimes ask follow-up questions from my previous "
    "answers.\n"
    "\n"
    "Topic: [t]\n"
    "Background knowledge [b]\n"
    "Please start asking question about: [h]"
)

CANNOT_FIND_STIMULUS = "I cannot find the answer, please ask your next question."

GUIDING_PROMPTS = {
    "general": "Ask a general question and do not ask a too specific question.",
    "wh_start": "Ask a question starting with where, when, or who.",
    "interesting": "Ask a question about what is interesting in this article.",
    "another_aspect": "Ask a question about another aspect of the topic.",
}
GUIDING_PROMPT_IDS = tuple(GUIDING_PROMPTS)

CORRECTIVE_PROMPT = "Please ask exactly one short question of at most 25 words, on a single line."

# a line-initial or post-space token like "1." or "2)" marks an enumeration
_ENUMERATION_RE = re.compile(r"(?:^|(?<=\s))\d+[.)]")


class QuestionValidationExhausted(Exception):
    """No structurally valid question within the allowed regeneration attempts."""


@dataclass
class StudentConfig:
    max_question_words: int = 25
    max_regen_attempts: int = 4
    guiding_prompt_seed: int = 0

    def __post_init__(self):
        if self.max_question_words < 1 or self.max_regen_attempts < 1:
            raise ValueError("max_question_words and max_regen_attempts must be >= 1")


def build_student_instruction(ctx: TopicContext) -> str:
    return (
        STUDENT_INSTRUCTION_TEMPLATE.replace("[t]", ctx.title)
        .replace("[b]", ctx.background)
        .replace("[h]", ctx.section_header)
    )


def validate_question(raw: str, cfg: StudentConfig | None = None) -> bool:
    cfg = cfg or StudentConfig()
    if "\n" in raw:
        return False
    if len(raw.split()) > cfg.max_question_words:
        return False
    if _ENUMERATION_RE.search(raw):
        return False
    return bool(raw.strip())


def select_student_prompt(
    prev_answer: Answer, rng: random.Random
) -> tuple[str, Optional[str]]:
    """Stimulus for the next question: the answer itself, or a guiding prompt.

    Returns (stimulus text, guiding prompt id or None).  Pure in
    (prev_answer, rng state).
    """
    if not prev_answer.is_cannot_find:
        return prev_answer.serialized_text(), None
    prompt_id = rng.choice(GUIDING_PROMPT_IDS)
    return f"{CANNOT_FIND_STIMULUS} {GUIDING_PROMPTS[prompt_id]}", prompt_id


def ask_with_validation(
    session: ChatSession,
    stimulus: str,
    cfg: StudentConfig,
    role: str = None,
) -> str:
    """Generate a question, reprompting on structural failures.

    Raises QuestionValidationExhausted after max_regen_attempts invalid outputs.
    """
    send_role = role if role is not None else "counterpart"
    raw = session.send(stimulus, role=send_role)
    for _ in range(cfg.max_regen_attempts - 1):
        if validate_question(raw, cfg):
            return raw.strip()
        raw = session.send(CORRECTIVE_PROMPT)
    if validate_question(raw, cfg):
        return raw.strip()
    raise QuestionValidationExhausted(
        f"no valid question after {cfg.max_regen_attempts} attempts"
    )


def ask_first_question(session: ChatSession, ctx: TopicContext, cfg: StudentConfig) -> str:
    """Opening turn: the instruction itself elicits the first question."""
    return ask_with_validation(session, build_student_instruction(ctx), cfg, role=ROLE_SYSTEM)
